//! Word-level explanations of free-form responses.
//!
//! A model assigns every word a nonempty output sequence; it explains a
//! response when concatenating the sequences of the instruction's words in
//! order reproduces it. Once each word's length is fixed, every response
//! splits in exactly one way, so the search runs over length vectors: a
//! depth-first branch and bound in first-appearance word order, pruned by
//! the response lengths and by the pieces already pinned down at either end
//! of each response.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::distinct;
use crate::grammar::{ColorSymbol, Instruction, OutputSeq, Pseudoword};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationModel {
    pub assignments: BTreeMap<Pseudoword, OutputSeq>,
}

impl SegmentationModel {
    /// Whether the model reproduces `response` for `instruction`.
    pub fn explains(&self, instruction: &Instruction, response: &OutputSeq) -> bool {
        let mut out = Vec::new();
        for w in instruction.words() {
            match self.assignments.get(w) {
                Some(s) => out.extend_from_slice(s.symbols()),
                None => return false,
            }
        }
        out == response.symbols()
    }

    pub fn total_len(&self) -> usize {
        self.assignments.values().map(OutputSeq::len).sum()
    }

    /// Every word maps to a single symbol.
    pub fn is_one_to_one(&self) -> bool {
        self.assignments.values().all(|s| s.len() == 1)
    }
}

/// Distinct words get distinct sequences.
pub fn check_me_on_model(model: &SegmentationModel) -> bool {
    let seqs: Vec<&OutputSeq> = model.assignments.values().collect();
    distinct(&seqs)
}

struct Problem<'a> {
    /// Each instruction as word indices.
    instrs: Vec<Vec<usize>>,
    responses: Vec<&'a [ColorSymbol]>,
    n_words: usize,
    /// Largest feasible length per word.
    bound: Vec<usize>,
}

impl Problem<'_> {
    /// Checks the partial assignment `lens[..k]` (words `>= k` unassigned).
    fn feasible(&self, lens: &[usize], k: usize) -> bool {
        let mut pinned: Vec<Option<&[ColorSymbol]>> = vec![None; self.n_words];
        for (ws, r) in self.instrs.iter().zip(&self.responses) {
            let (mut known, mut unknown) = (0, 0);
            for &w in ws {
                if w < k {
                    known += lens[w];
                } else {
                    unknown += 1;
                }
            }
            if known + unknown > r.len() || (unknown == 0 && known != r.len()) {
                return false;
            }
            // Left end.
            let mut at = 0;
            for &w in ws {
                if w >= k {
                    break;
                }
                let piece = &r[at..at + lens[w]];
                match pinned[w] {
                    Some(p) if p != piece => return false,
                    _ => pinned[w] = Some(piece),
                }
                at += lens[w];
            }
            // Right end.
            let mut end = r.len();
            for &w in ws.iter().rev() {
                if w >= k {
                    break;
                }
                if lens[w] > end {
                    return false;
                }
                let piece = &r[end - lens[w]..end];
                match pinned[w] {
                    Some(p) if p != piece => return false,
                    _ => pinned[w] = Some(piece),
                }
                end -= lens[w];
            }
        }
        true
    }

    fn search(&self, lens: &mut Vec<usize>, total: usize, best: &mut Option<(usize, Vec<usize>)>) {
        let k = lens.len();
        if !self.feasible(lens, k) {
            return;
        }
        if k == self.n_words {
            // Depth-first in ascending order visits equal totals in
            // lexicographic order, so only a strictly smaller total wins.
            if best.as_ref().map_or(true, |(t, _)| total < *t) {
                *best = Some((total, lens.clone()));
            }
            return;
        }
        let remaining = self.n_words - k - 1;
        for len in 1..=self.bound[k] {
            if let Some((t, _)) = best {
                if total + len + remaining >= *t {
                    break;
                }
            }
            lens.push(len);
            self.search(lens, total + len, best);
            lens.pop();
        }
    }
}

/// Finds the model with the smallest total assigned length (ties broken by
/// the length vector in first-appearance word order) that explains every
/// response, or `None` when no model exists.
pub fn infer_segmentation(responses: &[(Instruction, OutputSeq)]) -> Option<SegmentationModel> {
    if responses.is_empty() {
        return None;
    }
    let mut words: Vec<Pseudoword> = Vec::new();
    let instrs: Vec<Vec<usize>> = responses
        .iter()
        .map(|(i, _)| {
            i.words()
                .iter()
                .map(|w| match words.iter().position(|x| x == w) {
                    Some(p) => p,
                    None => {
                        words.push(w.clone());
                        words.len() - 1
                    }
                })
                .collect()
        })
        .collect();
    let bound = (0..words.len())
        .map(|w| {
            instrs
                .iter()
                .zip(responses)
                .filter(|(ws, _)| ws.contains(&w))
                .map(|(ws, (_, r))| {
                    let count = ws.iter().filter(|x| **x == w).count();
                    r.len().saturating_sub(ws.len() - count) / count
                })
                .min()
                .unwrap_or(0)
        })
        .collect();
    let problem = Problem {
        instrs,
        responses: responses.iter().map(|(_, r)| r.symbols()).collect(),
        n_words: words.len(),
        bound,
    };
    let mut best = None;
    problem.search(&mut Vec::with_capacity(words.len()), 0, &mut best);
    let (_, lens) = best?;

    let mut model = SegmentationModel::default();
    for ((ws, r), _) in problem.instrs.iter().zip(&problem.responses).zip(responses) {
        let mut at = 0;
        for &w in ws {
            let piece = OutputSeq(r[at..at + lens[w]].to_vec());
            model.assignments.entry(words[w].clone()).or_insert(piece);
            at += lens[w];
        }
    }
    Some(model)
}
