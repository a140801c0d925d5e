//! Per-participant grading and population summaries.
//!
//! Two exclusion rules apply. Missing too many catch trials (the threshold
//! depends on the experiment) excludes the whole participant; failing a
//! block's study quiz excludes only that block's test phase. Free-form
//! sessions are excluded when the participant reported using an external
//! aid.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::runner::SessionRunner;
use super::{BlockKind, ExperimentKind, ExperimentSpec, Phase, ProtocolError, Session};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ExclusionReason {
    MissedCatchTrials { missed: usize },
    ExternalAid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub block: usize,
    pub kind: BlockKind,
    pub label: String,
    /// Correct answers among answered non-catch items with a target.
    pub correct: usize,
    pub total: usize,
    /// `correct / total`, or `None` when nothing was scorable.
    pub accuracy: Option<f64>,
    pub quiz_passed: Option<bool>,
    /// Test phase dropped because the study quiz was failed.
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantResult {
    pub participant_id: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub stages: Vec<StageResult>,
    pub catch_total: usize,
    pub catch_missed: usize,
    pub excluded: bool,
    pub exclusion_reason: Option<ExclusionReason>,
    pub complete: bool,
}

impl ParticipantResult {
    /// Pooled accuracy over the stages that survive exclusion.
    pub fn accuracy(&self) -> Option<f64> {
        pooled(self.stages.iter().filter(|s| !s.excluded))
    }

    /// Pooled accuracy ignoring every exclusion.
    pub fn accuracy_no_exclusions(&self) -> Option<f64> {
        pooled(self.stages.iter())
    }
}

fn pooled<'a>(stages: impl Iterator<Item = &'a StageResult>) -> Option<f64> {
    let (c, t) = stages.fold((0, 0), |(c, t), s| (c + s.correct, t + s.total));
    (t > 0).then(|| c as f64 / t as f64)
}

/// Grades one (possibly abandoned) session by replaying it against `spec`.
pub fn grade_session(
    spec: &ExperimentSpec,
    session: &Session,
) -> Result<ParticipantResult, ProtocolError> {
    let runner = SessionRunner::resume(spec, session)?;
    let quiz = runner.quiz_outcomes();

    let mut stages: Vec<StageResult> = spec
        .blocks
        .iter()
        .enumerate()
        .map(|(b, block)| {
            let quiz_passed = if block.has_quiz() { quiz[b] } else { None };
            StageResult {
                block: b,
                kind: block.kind,
                label: block.kind.label(),
                correct: 0,
                total: 0,
                accuracy: None,
                quiz_passed,
                excluded: quiz_passed == Some(false),
            }
        })
        .collect();

    let (mut catch_total, mut catch_missed) = (0, 0);
    for r in session.records.iter().filter(|r| r.phase == Phase::Test) {
        let Some(loc) = spec.locate(&r.item_id) else {
            continue;
        };
        let super::ItemLocation::Test { block, .. } = loc else {
            continue;
        };
        let item = spec.item(loc);
        let Some(target) = &item.target else {
            continue;
        };
        let correct = *target == r.response;
        if item.is_catch {
            catch_total += 1;
            catch_missed += usize::from(!correct);
        } else {
            stages[block].total += 1;
            stages[block].correct += usize::from(correct);
        }
    }
    for s in &mut stages {
        s.accuracy = (s.total > 0).then(|| s.correct as f64 / s.total as f64);
    }

    let exclusion_reason = if catch_missed >= spec.kind.catch_exclusion_threshold() {
        Some(ExclusionReason::MissedCatchTrials {
            missed: catch_missed,
        })
    } else if spec.kind == ExperimentKind::Exp3 && session.external_aid == Some(true) {
        Some(ExclusionReason::ExternalAid)
    } else {
        None
    };

    Ok(ParticipantResult {
        participant_id: session.participant_id.clone(),
        kind: spec.kind,
        seed: spec.seed,
        stages,
        catch_total,
        catch_missed,
        excluded: exclusion_reason.is_some(),
        exclusion_reason,
        complete: runner.is_done(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub label: String,
    /// Mean of per-participant accuracies.
    pub mean: f64,
    /// Participants contributing.
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_participants: usize,
    pub n_excluded: usize,
    pub stages: Vec<StageSummary>,
    /// The three single-function stages pooled.
    pub functions: Option<StageSummary>,
    pub overall: Option<StageSummary>,
    pub overall_no_exclusions: Option<StageSummary>,
}

fn summarize(label: impl Into<String>, xs: &[f64]) -> Option<StageSummary> {
    (!xs.is_empty()).then(|| StageSummary {
        label: label.into(),
        mean: xs.iter().sum::<f64>() / xs.len() as f64,
        n: xs.len(),
    })
}

/// Population means after exclusions, plus an overall figure with none.
pub fn aggregate(results: &[ParticipantResult]) -> Result<Summary, ProtocolError> {
    if results.is_empty() {
        return Err(ProtocolError::EmptyInput);
    }
    let mut by_stage: BTreeMap<BlockKind, Vec<f64>> = BTreeMap::new();
    let mut functions = Vec::new();
    let mut overall = Vec::new();
    let mut raw = Vec::new();
    for r in results {
        if let Some(a) = r.accuracy_no_exclusions() {
            raw.push(a);
        }
        if r.excluded {
            continue;
        }
        if let Some(a) = r.accuracy() {
            overall.push(a);
        }
        for s in r.stages.iter().filter(|s| !s.excluded) {
            if let Some(a) = s.accuracy {
                by_stage.entry(s.kind).or_default().push(a);
                if s.kind.is_function_stage() {
                    functions.push(a);
                }
            }
        }
    }
    Ok(Summary {
        n_participants: results.len(),
        n_excluded: results.iter().filter(|r| r.excluded).count(),
        stages: by_stage
            .iter()
            .filter_map(|(k, xs)| summarize(k.label(), xs))
            .collect(),
        functions: summarize("functions", &functions),
        overall: summarize("overall", &overall),
        overall_no_exclusions: summarize("overall_no_exclusions", &raw),
    })
}
