//! Experiment generation, study-phase quizzes, session flow and grading.
//!
//! An [`ExperimentSpec`] is a list of [`Block`]s. The curriculum experiment
//! has four blocks sharing one lexicon, the bias experiment fourteen
//! independent trials with their own lexicons, and the free-form experiment a
//! single block of seven unanswered instructions. Everything downstream
//! (quiz, session runner, grading, simulation, the HTTP service) works on
//! blocks, so the three experiments share one code path.

mod exp1;
mod exp2;
mod exp3;
mod grading;
mod quiz;
mod runner;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{ColorSymbol, Instruction, Lexicon, OutputSeq, Pseudoword};

pub use exp1::{exp1_item_sets, generate_exp1, Exp1ItemSets};
pub use exp2::generate_exp2;
pub use exp3::generate_exp3;
pub use grading::{
    aggregate, grade_session, ExclusionReason, ParticipantResult, StageResult, StageSummary,
    Summary,
};
pub use quiz::{run_quiz, QuizAttempt, QuizState, QuizTranscript, MAX_QUIZ_CYCLES};
pub use runner::{Feedback, Pending, SessionRunner, Submission, PRACTICE_ITEM_ID};

pub const SPEC_SCHEMA_VERSION: u32 = 1;
pub const SESSION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("item has no defined answer")]
    NoTarget,
    #[error("expected a response to `{expected}`, got `{got}`")]
    OutOfOrder { expected: String, got: String },
    #[error("session is already complete; got `{0}`")]
    SessionComplete(String),
    #[error("no results to aggregate")]
    EmptyInput,
    #[error("session belongs to {session}, spec is {spec}")]
    SpecMismatch { session: String, spec: String },
    #[error("timestamps must be non-decreasing")]
    NonMonotonicTimestamp,
    #[error("unknown experiment kind `{0}`")]
    UnknownKind(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Few-shot curriculum of three functions and their compositions.
    Exp1,
    /// Fourteen independent bias trials.
    Exp2,
    /// Free-form responses without demonstrations.
    Exp3,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] = [ExperimentKind::Exp1, ExperimentKind::Exp2, ExperimentKind::Exp3];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Exp1 => "exp1",
            ExperimentKind::Exp2 => "exp2",
            ExperimentKind::Exp3 => "exp3",
        }
    }

    /// Missed catch trials that exclude a participant.
    pub fn catch_exclusion_threshold(self) -> usize {
        match self {
            ExperimentKind::Exp1 => 2,
            ExperimentKind::Exp2 => 1,
            ExperimentKind::Exp3 => usize::MAX,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "exp1" => Ok(ExperimentKind::Exp1),
            "2" | "exp2" => Ok(ExperimentKind::Exp2),
            "3" | "exp3" => Ok(ExperimentKind::Exp3),
            _ => Err(ProtocolError::UnknownKind(s.to_string())),
        }
    }
}

/// A study or test item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub instruction: Instruction,
    /// Grammar-defined answer; `None` for free-form and bias probes.
    pub target: Option<OutputSeq>,
    #[serde(default)]
    pub is_catch: bool,
}

pub type StudyItem = Item;
pub type TestItem = Item;

impl Item {
    /// A single primitive word shown on its own.
    pub fn is_primitive_demo(&self) -> bool {
        self.instruction.len() == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    /// Novel word after a familiar demonstration, with `contradictory` extra
    /// words demonstrated with the familiar output.
    MutualExclusivity { contradictory: u8, pool_size: u8 },
    /// Juxtaposed known words with no concatenation demonstration.
    Iconic { variant: u8 },
    /// Novel word while every pool symbol is already claimed.
    Conflict { variant: u8 },
    /// Test instruction identical to a study instruction.
    Catch { variant: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Function1,
    Function2,
    Function3,
    Composition,
    Trial(TrialKind),
    FreeForm,
}

impl BlockKind {
    pub fn label(&self) -> String {
        match self {
            BlockKind::Function1 => "function1".into(),
            BlockKind::Function2 => "function2".into(),
            BlockKind::Function3 => "function3".into(),
            BlockKind::Composition => "composition".into(),
            BlockKind::FreeForm => "free_form".into(),
            BlockKind::Trial(t) => match t {
                TrialKind::MutualExclusivity {
                    contradictory,
                    pool_size,
                } => format!("me_c{contradictory}_p{pool_size}"),
                TrialKind::Iconic { variant } => format!("iconic_{variant}"),
                TrialKind::Conflict { variant } => format!("conflict_{variant}"),
                TrialKind::Catch { variant } => format!("catch_{variant}"),
            },
        }
    }

    /// One of the three single-function curriculum stages.
    pub fn is_function_stage(&self) -> bool {
        matches!(
            self,
            BlockKind::Function1 | BlockKind::Function2 | BlockKind::Function3
        )
    }
}

/// A unit of an experiment: a study set shown for reference and the test
/// items answered against it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub lexicon: Lexicon,
    /// Symbols the responder may use, in display order.
    pub pool: Vec<ColorSymbol>,
    pub study: Vec<StudyItem>,
    pub test: Vec<TestItem>,
    /// Whether the study phase ends with the memory quiz.
    pub quiz: bool,
    /// Output of the familiar demonstration preceding a mutual-exclusivity
    /// probe.
    #[serde(default)]
    pub familiar: Option<ColorSymbol>,
    /// Symbols already claimed by a word, for conflict trials.
    #[serde(default)]
    pub assigned: Vec<ColorSymbol>,
}

impl Block {
    pub fn has_quiz(&self) -> bool {
        self.quiz && self.study.iter().any(|i| !i.is_primitive_demo())
    }

    /// Words of this block's instructions that the lexicon does not define.
    pub fn novel_words(&self) -> Vec<Pseudoword> {
        let mut out: Vec<Pseudoword> = Vec::new();
        for item in self.study.iter().chain(&self.test) {
            for w in item.instruction.words() {
                if self.lexicon.meaning(w.as_str()).is_none() && !out.contains(w) {
                    out.push(w.clone());
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Sequence the responder reproduces to pass the interface practice.
    pub practice: OutputSeq,
    pub blocks: Vec<Block>,
}

/// Where an item id lives in a spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItemLocation {
    Study { block: usize, index: usize },
    Test { block: usize, index: usize },
}

impl ExperimentSpec {
    pub fn generate(kind: ExperimentKind, seed: u64) -> Self {
        match kind {
            ExperimentKind::Exp1 => generate_exp1(seed),
            ExperimentKind::Exp2 => generate_exp2(seed),
            ExperimentKind::Exp3 => generate_exp3(seed),
        }
    }

    pub fn locate(&self, item_id: &str) -> Option<ItemLocation> {
        for (b, block) in self.blocks.iter().enumerate() {
            if let Some(i) = block.study.iter().position(|x| x.id == item_id) {
                return Some(ItemLocation::Study { block: b, index: i });
            }
            if let Some(i) = block.test.iter().position(|x| x.id == item_id) {
                return Some(ItemLocation::Test { block: b, index: i });
            }
        }
        None
    }

    pub fn item(&self, loc: ItemLocation) -> &Item {
        match loc {
            ItemLocation::Study { block, index } => &self.blocks[block].study[index],
            ItemLocation::Test { block, index } => &self.blocks[block].test[index],
        }
    }

    pub fn test_items(&self) -> impl Iterator<Item = (usize, &Item)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, block)| block.test.iter().map(move |i| (b, i)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Interface practice before the first block.
    Practice,
    /// Study-phase memory quiz.
    StudyQuiz,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub item_id: String,
    pub response: OutputSeq,
    pub phase: Phase,
    pub cycle: u32,
    pub timestamp: u64,
}

/// One participant's run through a spec. The spec itself is identified by
/// `(kind, seed)` and regenerated on demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u32,
    pub participant_id: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub records: Vec<ResponseRecord>,
    /// Post-test survey answer about external aids, if asked.
    #[serde(default)]
    pub external_aid: Option<bool>,
}

impl Session {
    pub fn new(participant_id: impl Into<String>, spec: &ExperimentSpec) -> Self {
        Session {
            schema_version: SESSION_SCHEMA_VERSION,
            participant_id: participant_id.into(),
            kind: spec.kind,
            seed: spec.seed,
            records: Vec::new(),
            external_aid: None,
        }
    }

    pub fn matches(&self, spec: &ExperimentSpec) -> Result<(), ProtocolError> {
        if self.kind != spec.kind || self.seed != spec.seed {
            return Err(ProtocolError::SpecMismatch {
                session: format!("{}#{}", self.kind, self.seed),
                spec: format!("{}#{}", spec.kind, spec.seed),
            });
        }
        Ok(())
    }
}

/// Exact-match scoring: every symbol and the length must agree.
pub fn score_response(item: &Item, response: &OutputSeq) -> Result<bool, ProtocolError> {
    let target = item.target.as_ref().ok_or(ProtocolError::NoTarget)?;
    Ok(target == response)
}

/// Number of positions at which two equal-length instructions differ, or
/// `None` when the lengths differ (which always counts as more than one
/// substitution).
pub fn substitution_distance(a: &Instruction, b: &Instruction) -> Option<usize> {
    if a.len() != b.len() {
        return None;
    }
    Some(
        a.words()
            .iter()
            .zip(b.words())
            .filter(|(x, y)| x != y)
            .count(),
    )
}

fn item_id(block: usize, section: char, index: usize) -> String {
    format!("b{block}-{section}{index}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(instr: &str, target: Option<&str>) -> Item {
        Item {
            id: "x".into(),
            instruction: instr.parse().unwrap(),
            target: target.map(|t| t.parse().unwrap()),
            is_catch: false,
        }
    }

    #[test]
    fn exact_match_scoring() {
        let i = item("dax fep", Some("RED RED RED"));
        assert_eq!(score_response(&i, &"RED RED RED".parse().unwrap()), Ok(true));
        let i = item("dax kiki lug", Some("BLUE RED"));
        assert_eq!(score_response(&i, &"RED BLUE".parse().unwrap()), Ok(false));
        let i = item("wif blicket dax", Some("GREEN RED GREEN"));
        assert_eq!(score_response(&i, &"GREEN RED".parse().unwrap()), Ok(false));
        let i = item("fep wif", None);
        assert_eq!(
            score_response(&i, &"RED".parse().unwrap()),
            Err(ProtocolError::NoTarget)
        );
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("2".parse::<ExperimentKind>(), Ok(ExperimentKind::Exp2));
        assert_eq!("EXP3".parse::<ExperimentKind>(), Ok(ExperimentKind::Exp3));
        assert!("exp4".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn distance_between_instructions() {
        let a: Instruction = "zup fep".parse().unwrap();
        let b: Instruction = "dax fep".parse().unwrap();
        let c: Instruction = "dax".parse().unwrap();
        assert_eq!(substitution_distance(&a, &b), Some(1));
        assert_eq!(substitution_distance(&a, &c), None);
    }
}
