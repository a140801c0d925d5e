//! Study-phase memory quiz.
//!
//! Non-primitive study items are covered one at a time and the responder
//! reproduces each from memory, receiving the correct answer afterwards.
//! Cycles through the items repeat until one full cycle is answered
//! correctly (pass) or [`MAX_QUIZ_CYCLES`] cycles have been completed (fail).

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{score_response, Block, Item};
use crate::grammar::OutputSeq;

pub const MAX_QUIZ_CYCLES: u32 = 3;

/// Progress through one block's quiz.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuizState {
    items: Vec<usize>,
    cycle: u32,
    pos: usize,
    cycle_clean: bool,
    outcome: Option<bool>,
}

impl QuizState {
    /// `None` when the block has no quiz.
    pub fn new(block: &Block) -> Option<Self> {
        if !block.has_quiz() {
            return None;
        }
        let items = block
            .study
            .iter()
            .enumerate()
            .filter(|(_, i)| !i.is_primitive_demo())
            .map(|(k, _)| k)
            .collect();
        Some(QuizState {
            items,
            cycle: 0,
            pos: 0,
            cycle_clean: true,
            outcome: None,
        })
    }

    /// Study index of the covered item, or `None` once the quiz is over.
    pub fn current(&self) -> Option<usize> {
        match self.outcome {
            Some(_) => None,
            None => Some(self.items[self.pos]),
        }
    }

    /// Zero-based cycle of the pending item.
    pub fn cycle(&self) -> u32 {
        self.cycle
    }

    /// `Some(passed)` once finished.
    pub fn outcome(&self) -> Option<bool> {
        self.outcome
    }

    /// Records whether the pending item was reproduced correctly.
    pub fn record(&mut self, correct: bool) {
        if self.outcome.is_some() {
            return;
        }
        self.cycle_clean &= correct;
        self.pos += 1;
        if self.pos < self.items.len() {
            return;
        }
        if self.cycle_clean {
            self.outcome = Some(true);
        } else if self.cycle + 1 >= MAX_QUIZ_CYCLES {
            self.outcome = Some(false);
        } else {
            self.cycle += 1;
            self.pos = 0;
            self.cycle_clean = true;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizAttempt {
    pub item_id: String,
    pub response: OutputSeq,
    pub correct: bool,
    pub cycle: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizTranscript {
    pub attempts: Vec<QuizAttempt>,
    pub cycles: u32,
    pub passed: bool,
}

/// Runs a block's quiz against `responder`, which sees the covered item and
/// the zero-based cycle. Blocks without a quiz pass trivially.
pub fn run_quiz<F>(block: &Block, mut responder: F) -> QuizTranscript
where
    F: FnMut(&Item, u32) -> OutputSeq,
{
    let Some(mut state) = QuizState::new(block) else {
        return QuizTranscript {
            attempts: Vec::new(),
            cycles: 0,
            passed: true,
        };
    };
    let mut attempts = Vec::new();
    while let Some(k) = state.current() {
        let item = &block.study[k];
        let cycle = state.cycle();
        let response = responder(item, cycle);
        let correct = score_response(item, &response).unwrap_or(false);
        state.record(correct);
        attempts.push(QuizAttempt {
            item_id: item.id.clone(),
            response,
            correct,
            cycle,
        });
    }
    QuizTranscript {
        attempts,
        cycles: state.cycle() + 1,
        passed: state.outcome() == Some(true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::generate_exp1;

    #[test]
    fn always_correct_passes_in_one_cycle() {
        let spec = generate_exp1(1);
        let block = &spec.blocks[0];
        let t = run_quiz(block, |i, _| i.target.clone().unwrap());
        assert!(t.passed);
        assert_eq!(t.cycles, 1);
        assert_eq!(t.attempts.len(), 2);
    }

    #[test]
    fn always_wrong_fails_after_three_cycles() {
        let spec = generate_exp1(1);
        let block = &spec.blocks[3];
        let t = run_quiz(block, |_, _| OutputSeq(Vec::new()));
        assert!(!t.passed);
        assert_eq!(t.cycles, 3);
        assert_eq!(t.attempts.len(), 3 * 10);
    }

    #[test]
    fn recovering_in_the_second_cycle_passes() {
        let spec = generate_exp1(2);
        let block = &spec.blocks[1];
        let t = run_quiz(block, |i, c| {
            if c == 0 {
                OutputSeq(Vec::new())
            } else {
                i.target.clone().unwrap()
            }
        });
        assert!(t.passed);
        assert_eq!(t.cycles, 2);
    }

    #[test]
    fn only_non_primitive_items_are_quizzed() {
        let spec = generate_exp1(5);
        let block = &spec.blocks[3];
        let t = run_quiz(block, |i, _| i.target.clone().unwrap());
        for a in &t.attempts {
            let item = block.study.iter().find(|s| s.id == a.item_id).unwrap();
            assert!(item.instruction.len() > 1);
        }
    }
}
