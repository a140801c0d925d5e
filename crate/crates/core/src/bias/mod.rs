//! Inductive-bias analysis of responses.
//!
//! Classifiers label a single response as consistent or not with the
//! one-to-one, iconic concatenation, mutual exclusivity and no-reverse
//! patterns. [`infer_segmentation`] looks for a word-by-word explanation of a
//! set of free-form responses, [`fit_logistic`] relates mutual-exclusivity
//! violations to counter-evidence and pool size, and [`bias_report`] puts
//! everything together for a population of sessions.

mod logistic;
mod report;
mod segment;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{
    evaluate_forward_concat, parse, ColorSymbol, GrammarConfig, Instruction, Lexicon, Meaning,
    OutputSeq,
};
use crate::protocol::{Block, Item, ProtocolError};

pub use logistic::{fit_logistic, LogisticFit, MAX_IRLS_ITERATIONS, SEPARATION_BOUND};
pub use report::{
    bias_report, me_regression_rows, BiasReport, CellRate, ConflictSummary, CurriculumErrors,
    FreeFormCounts, MeRow, TrialBiases, ME_PREDICTORS,
};
pub use segment::{check_me_on_model, infer_segmentation, SegmentationModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BiasError {
    #[error("outcomes are perfectly separated or constant")]
    Separation,
    #[error("design matrix is degenerate")]
    DegenerateDesign,
    #[error("rows have inconsistent widths")]
    RaggedDesign,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Per-response bias labels; `None` marks a label that does not apply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasVerdict {
    pub one_to_one: bool,
    pub iconic_concat: bool,
    pub me_consistent: Option<bool>,
    pub kiki_no_reverse: Option<bool>,
}

/// Same length as the instruction, every primitive position carrying its own
/// symbol. Function words and words the lexicon does not define may map to
/// anything, independently at each position.
pub fn classify_one_to_one(instruction: &Instruction, response: &OutputSeq, lex: &Lexicon) -> bool {
    instruction.len() == response.len()
        && instruction
            .words()
            .iter()
            .zip(response.symbols())
            .all(|(w, c)| lex.color_of(w.as_str()).map_or(true, |own| own == *c))
}

/// The response splits into consecutive nonempty pieces, one per word in
/// input order, where every primitive's piece is exactly its own symbol.
pub fn classify_iconic_concat(
    instruction: &Instruction,
    response: &OutputSeq,
    lex: &Lexicon,
) -> bool {
    let ws = instruction.words();
    let rs = response.symbols();
    // reach[j]: the first i words can produce rs[..j].
    let mut reach = alloc::vec![false; rs.len() + 1];
    reach[0] = true;
    for w in ws {
        let own = lex.color_of(w.as_str());
        let mut next = alloc::vec![false; rs.len() + 1];
        for j in 0..rs.len() {
            if !reach[j] {
                continue;
            }
            match own {
                Some(c) => {
                    if rs[j] == c {
                        next[j + 1] = true;
                    }
                }
                None => next[j + 1..].iter_mut().for_each(|x| *x = true),
            }
        }
        reach = next;
    }
    reach[rs.len()]
}

/// Whether the response matches the variant reading in which the scope word
/// concatenates in input order; `None` without a scope word or when the
/// instruction does not parse.
pub fn classify_kiki_no_reverse(
    instruction: &Instruction,
    response: &OutputSeq,
    lex: &Lexicon,
    cfg: &GrammarConfig,
) -> Option<bool> {
    let kiki = lex.word_for(Meaning::ReverseConcat)?;
    if !instruction.contains(kiki) {
        return None;
    }
    let tree = parse(instruction, lex, cfg).ok()?;
    let forward = evaluate_forward_concat(&tree, lex, cfg).ok()?;
    Some(forward == *response)
}

/// Anything other than exactly the familiar symbol respects mutual
/// exclusivity.
pub fn classify_me(familiar: Option<ColorSymbol>, response: &OutputSeq) -> Option<bool> {
    familiar.map(|d| response.symbols() != [d])
}

/// All labels for a response to `item` within `block`.
pub fn verdict(block: &Block, item: &Item, response: &OutputSeq, cfg: &GrammarConfig) -> BiasVerdict {
    let lex = &block.lexicon;
    BiasVerdict {
        one_to_one: classify_one_to_one(&item.instruction, response, lex),
        iconic_concat: classify_iconic_concat(&item.instruction, response, lex),
        me_consistent: classify_me(block.familiar, response),
        kiki_no_reverse: classify_kiki_no_reverse(&item.instruction, response, lex, cfg),
    }
}

/// The response claims a symbol that already belongs to another word: a
/// single symbol from `assigned`.
pub fn reuses_assigned(assigned: &[ColorSymbol], response: &OutputSeq) -> bool {
    matches!(response.symbols(), [c] if assigned.contains(c))
}

pub(crate) fn distinct<T: PartialEq>(xs: &[T]) -> bool {
    xs.iter().enumerate().all(|(i, x)| !xs[..i].contains(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicon {
        Lexicon::canonical()
    }
    fn i(s: &str) -> Instruction {
        s.parse().unwrap()
    }
    fn o(s: &str) -> OutputSeq {
        s.parse().unwrap()
    }

    #[test]
    fn one_to_one_examples() {
        assert!(classify_one_to_one(&i("wif blicket dax"), &o("GREEN PURPLE RED"), &lex()));
        assert!(!classify_one_to_one(&i("wif blicket dax"), &o("GREEN RED GREEN"), &lex()));
        assert!(!classify_one_to_one(&i("dax fep"), &o("RED RED RED"), &lex()));
        assert!(classify_one_to_one(&i("dax fep fep"), &o("RED BLUE GREEN"), &lex()));
    }

    #[test]
    fn no_reverse_examples() {
        let cfg = GrammarConfig::default();
        assert_eq!(classify_kiki_no_reverse(&i("dax kiki lug"), &o("RED BLUE"), &lex(), &cfg), Some(true));
        assert_eq!(classify_kiki_no_reverse(&i("dax kiki lug"), &o("BLUE RED"), &lex(), &cfg), Some(false));
        assert_eq!(classify_kiki_no_reverse(&i("dax fep"), &o("RED"), &lex(), &cfg), None);
    }

    #[test]
    fn me_examples() {
        let red = ColorSymbol::new(1);
        assert_eq!(classify_me(red, &o("BLUE")), Some(true));
        assert_eq!(classify_me(red, &o("RED")), Some(false));
        assert_eq!(classify_me(red, &o("RED BLUE")), Some(true));
        assert_eq!(classify_me(None, &o("RED")), None);
    }

    #[test]
    fn iconic_examples() {
        assert!(classify_iconic_concat(&i("dax lug"), &o("RED BLUE"), &lex()));
        assert!(!classify_iconic_concat(&i("dax lug"), &o("BLUE RED"), &lex()));
        assert!(classify_iconic_concat(&i("lug fep dax"), &o("BLUE BLUE BLUE RED"), &lex()));
        assert!(classify_iconic_concat(&i("dax kiki lug"), &o("RED GREEN PINK BLUE"), &lex()));
        assert!(!classify_iconic_concat(&i("dax kiki lug"), &o("RED BLUE"), &lex()));
    }

    #[test]
    fn me_is_invariant_under_recoloring() {
        let all = ColorSymbol::all();
        let perm: Vec<ColorSymbol> = all.iter().rev().copied().collect();
        let map = |c: ColorSymbol| perm[all.iter().position(|x| *x == c).unwrap()];
        for d in &all {
            for r in &all {
                for r2 in [None, Some(*d)] {
                    let mut resp = alloc::vec![*r];
                    resp.extend(r2);
                    let before = classify_me(Some(*d), &OutputSeq(resp.clone()));
                    let after = classify_me(
                        Some(map(*d)),
                        &OutputSeq(resp.into_iter().map(map).collect()),
                    );
                    assert_eq!(before, after);
                }
            }
        }
    }
}
