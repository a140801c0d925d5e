//! Session state machine.
//!
//! A session runs: interface practice (repeat until the practice sequence is
//! reproduced), then for each block the study quiz (if any) followed by the
//! block's test items in order. The state is a pure function of the spec and
//! the records so far, so a runner can be rebuilt from a stored session with
//! [`SessionRunner::resume`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::quiz::QuizState;
use super::{ExperimentSpec, Item, Phase, ProtocolError, ResponseRecord, Session};
use crate::grammar::OutputSeq;

/// Item id of the interface practice.
pub const PRACTICE_ITEM_ID: &str = "practice";

#[derive(Clone, Debug, PartialEq, Eq)]
enum Cursor {
    Practice { attempt: u32 },
    Quiz { block: usize, state: QuizState },
    Test { block: usize, index: usize },
    Done,
}

/// What the responder should answer next.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pending {
    pub item_id: String,
    pub phase: Phase,
    /// Quiz cycle or practice attempt, zero-based.
    pub cycle: u32,
    /// Block index; `None` during practice.
    pub block: Option<usize>,
}

/// Corrective feedback, given only outside the test phase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub correct: bool,
    pub target: OutputSeq,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub record: ResponseRecord,
    pub feedback: Option<Feedback>,
}

#[derive(Clone, Debug)]
pub struct SessionRunner<'a> {
    spec: &'a ExperimentSpec,
    session: Session,
    cursor: Cursor,
    quiz_outcomes: Vec<Option<bool>>,
}

impl<'a> SessionRunner<'a> {
    pub fn new(spec: &'a ExperimentSpec, participant_id: impl Into<String>) -> Self {
        SessionRunner {
            spec,
            session: Session::new(participant_id, spec),
            cursor: Cursor::Practice { attempt: 0 },
            quiz_outcomes: alloc::vec![None; spec.blocks.len()],
        }
    }

    /// Rebuilds the runner by replaying `session`'s records.
    pub fn resume(spec: &'a ExperimentSpec, session: &Session) -> Result<Self, ProtocolError> {
        session.matches(spec)?;
        let mut runner = SessionRunner::new(spec, session.participant_id.clone());
        runner.session.external_aid = session.external_aid;
        for r in &session.records {
            runner.submit(&r.item_id, r.response.clone(), r.timestamp)?;
        }
        Ok(runner)
    }

    pub fn spec(&self) -> &'a ExperimentSpec {
        self.spec
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn into_session(self) -> Session {
        self.session
    }

    pub fn is_done(&self) -> bool {
        self.cursor == Cursor::Done
    }

    /// Quiz result per block: `None` if the block has no quiz or it has not
    /// finished.
    pub fn quiz_outcomes(&self) -> &[Option<bool>] {
        &self.quiz_outcomes
    }

    pub fn set_external_aid(&mut self, used: bool) {
        self.session.external_aid = Some(used);
    }

    /// The pending item, or `None` when the session is complete.
    pub fn pending(&self) -> Option<Pending> {
        let (item_id, phase, cycle, block) = match &self.cursor {
            Cursor::Practice { attempt } => {
                (PRACTICE_ITEM_ID.to_string(), Phase::Practice, *attempt, None)
            }
            Cursor::Quiz { block, state } => {
                let k = state.current().expect("active quiz has an item");
                (
                    self.spec.blocks[*block].study[k].id.clone(),
                    Phase::StudyQuiz,
                    state.cycle(),
                    Some(*block),
                )
            }
            Cursor::Test { block, index } => (
                self.spec.blocks[*block].test[*index].id.clone(),
                Phase::Test,
                0,
                Some(*block),
            ),
            Cursor::Done => return None,
        };
        Some(Pending {
            item_id,
            phase,
            cycle,
            block,
        })
    }

    /// The item behind [`pending`](Self::pending); `None` during practice or
    /// once done.
    pub fn pending_item(&self) -> Option<&'a Item> {
        match &self.cursor {
            Cursor::Quiz { block, state } => Some(&self.spec.blocks[*block].study[state.current()?]),
            Cursor::Test { block, index } => Some(&self.spec.blocks[*block].test[*index]),
            _ => None,
        }
    }

    /// Answers the pending item.
    pub fn submit(
        &mut self,
        item_id: &str,
        response: OutputSeq,
        timestamp: u64,
    ) -> Result<Submission, ProtocolError> {
        let Some(pending) = self.pending() else {
            return Err(ProtocolError::SessionComplete(item_id.to_string()));
        };
        if pending.item_id != item_id {
            return Err(ProtocolError::OutOfOrder {
                expected: pending.item_id,
                got: item_id.to_string(),
            });
        }
        if self
            .session
            .records
            .last()
            .is_some_and(|r| r.timestamp > timestamp)
        {
            return Err(ProtocolError::NonMonotonicTimestamp);
        }

        let feedback = match &mut self.cursor {
            Cursor::Practice { attempt } => {
                let target = self.spec.practice.clone();
                let correct = response == target;
                if correct {
                    self.cursor = Cursor::Done;
                    self.enter_block(0);
                } else {
                    *attempt += 1;
                }
                Some(Feedback { correct, target })
            }
            Cursor::Quiz { block, state } => {
                let b = *block;
                let item = &self.spec.blocks[b].study[state.current().expect("active")];
                let target = item.target.clone().ok_or(ProtocolError::NoTarget)?;
                let correct = response == target;
                state.record(correct);
                if let Some(passed) = state.outcome() {
                    self.quiz_outcomes[b] = Some(passed);
                    self.enter_test(b);
                }
                Some(Feedback { correct, target })
            }
            Cursor::Test { block, index } => {
                let (b, i) = (*block, *index);
                if i + 1 < self.spec.blocks[b].test.len() {
                    self.cursor = Cursor::Test {
                        block: b,
                        index: i + 1,
                    };
                } else {
                    self.enter_block(b + 1);
                }
                None
            }
            Cursor::Done => unreachable!("pending exists"),
        };

        let record = ResponseRecord {
            item_id: pending.item_id,
            response,
            phase: pending.phase,
            cycle: pending.cycle,
            timestamp,
        };
        self.session.records.push(record.clone());
        Ok(Submission { record, feedback })
    }

    fn enter_block(&mut self, b: usize) {
        let Some(block) = self.spec.blocks.get(b) else {
            self.cursor = Cursor::Done;
            return;
        };
        match QuizState::new(block) {
            Some(state) => self.cursor = Cursor::Quiz { block: b, state },
            None => self.enter_test(b),
        }
    }

    fn enter_test(&mut self, b: usize) {
        if self.spec.blocks[b].test.is_empty() {
            self.enter_block(b + 1);
        } else {
            self.cursor = Cursor::Test { block: b, index: 0 };
        }
    }
}
