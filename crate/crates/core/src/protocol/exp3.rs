//! Free-form experiment: seven instructions over five words, no
//! demonstrations, six pool symbols.
//!
//! Instruction template (`wN` are word slots filled from a shuffle of the
//! nine-word pool):
//!
//! ```text
//! w1   w2   w1 w1   w1 w2   w2 w1   w3 w4   w5 w3 w1
//! ```
//!
//! The first five items give the single-word, repeated-word and
//! swapped-pair forms the consistency analysis relies on; the last two bring
//! in the remaining three words.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{item_id, Block, BlockKind, ExperimentKind, ExperimentSpec, Item, SPEC_SCHEMA_VERSION};
use crate::grammar::{words, ColorSymbol, Instruction, Lexicon, OutputSeq, EXP1_WORD_POOL};
use crate::rng;

const TEMPLATE: [&[usize]; 7] = [&[0], &[1], &[0, 0], &[0, 1], &[1, 0], &[2, 3], &[4, 2, 0]];
const N_WORDS: usize = 5;
const POOL_SIZE: usize = 6;

/// Generates the seven free-form items in random order.
pub fn generate_exp3(seed: u64) -> ExperimentSpec {
    let mut rng = rng::stream(seed, 1);
    let mut pool_words = words(&EXP1_WORD_POOL);
    pool_words.shuffle(&mut rng);
    let chosen = &pool_words[..N_WORDS];

    let mut colors = ColorSymbol::all();
    colors.shuffle(&mut rng);
    let pool: Vec<ColorSymbol> = colors[..POOL_SIZE].to_vec();

    let mut order: Vec<usize> = (0..TEMPLATE.len()).collect();
    order.shuffle(&mut rng);
    let test = order
        .iter()
        .enumerate()
        .map(|(i, &t)| Item {
            id: item_id(0, 't', i),
            instruction: Instruction::new(TEMPLATE[t].iter().map(|&s| chosen[s].clone()).collect())
                .expect("nonempty"),
            target: None,
            is_catch: false,
        })
        .collect();

    let lexicon = Lexicon::new(Vec::new(), chosen.to_vec(), pool.clone()).expect("empty lexicon");
    ExperimentSpec {
        schema_version: SPEC_SCHEMA_VERSION,
        kind: ExperimentKind::Exp3,
        seed,
        practice: OutputSeq(alloc::vec![pool[0], pool[1]]),
        blocks: alloc::vec![Block {
            kind: BlockKind::FreeForm,
            lexicon,
            pool,
            study: Vec::new(),
            test,
            quiz: false,
            familiar: None,
            assigned: Vec::new(),
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Pseudoword;

    #[test]
    fn seven_items_five_words_six_symbols() {
        for seed in 0..20 {
            let spec = generate_exp3(seed);
            let b = &spec.blocks[0];
            assert_eq!(b.test.len(), 7);
            assert_eq!(b.pool.len(), 6);
            assert!(b.study.is_empty());
            let mut ws: Vec<&Pseudoword> =
                b.test.iter().flat_map(|t| t.instruction.words()).collect();
            ws.sort();
            ws.dedup();
            assert_eq!(ws.len(), 5);
            assert!(b.test.iter().all(|t| t.target.is_none()));
        }
    }

    #[test]
    fn contains_single_repeated_and_paired_forms() {
        let spec = generate_exp3(3);
        let instrs: Vec<&Instruction> = spec.blocks[0].test.iter().map(|t| &t.instruction).collect();
        let doubled = instrs.iter().filter(|i| i.len() == 1).any(|s| {
            let w = &s.words()[0];
            instrs.iter().any(|i| i.words() == [w.clone(), w.clone()])
        });
        let paired = instrs
            .iter()
            .any(|i| i.len() == 2 && i.words()[0] != i.words()[1]);
        assert!(doubled && paired);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_exp3(8), generate_exp3(8));
    }
}
