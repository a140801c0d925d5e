//! Population-level bias summaries.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    check_me_on_model, classify_iconic_concat, classify_kiki_no_reverse, classify_me,
    classify_one_to_one, fit_logistic, infer_segmentation, reuses_assigned, BiasError,
    LogisticFit,
};
use crate::grammar::{GrammarConfig, Instruction, OutputSeq};
use crate::protocol::{
    grade_session, BlockKind, ExperimentKind, ExperimentSpec, ItemLocation, Phase, Session,
    TrialKind,
};

/// Predictor columns of the mutual-exclusivity regression.
pub const ME_PREDICTORS: [&str; 2] = ["n_contradictory", "pool_size"];

fn share(k: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| k as f64 / n as f64)
}

/// Errors on the curriculum's non-catch test items.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurriculumErrors {
    pub n_participants: usize,
    pub n_responses: usize,
    pub n_errors: usize,
    pub accuracy: Option<f64>,
    /// Errors of the one-to-one form.
    pub one_to_one: usize,
    pub one_to_one_share: Option<f64>,
    /// Errors on items containing the scope word.
    pub kiki_errors: usize,
    /// Of those, errors that concatenate without reversing.
    pub kiki_no_reverse: usize,
    pub kiki_no_reverse_share: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRate {
    pub label: String,
    pub n: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConflictSummary {
    pub n: usize,
    /// Responses that hand the novel word a symbol already in use.
    pub me_violations: usize,
    pub me_violation_share: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialBiases {
    pub n_participants: usize,
    /// Share of responses consistent with mutual exclusivity, per cell.
    pub me_cells: Vec<CellRate>,
    /// Share of iconic-trial responses consistent with iconic concatenation.
    pub iconic: Option<CellRate>,
    pub conflict: ConflictSummary,
    /// Outcome: mutual exclusivity violated; predictors as in
    /// [`ME_PREDICTORS`].
    pub regression: Option<LogisticFit>,
    pub regression_error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FreeFormCounts {
    pub n_participants: usize,
    /// A word-level model exists, is one-to-one and respects mutual
    /// exclusivity.
    pub full_bias: usize,
    /// A word-level model exists but is not fully biased.
    pub iconic_only: usize,
    pub no_model: usize,
    /// Participants with a model whose words get distinct sequences.
    pub me_given_model: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub curriculum: Option<CurriculumErrors>,
    pub trials: Option<TrialBiases>,
    pub free_form: Option<FreeFormCounts>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeRow {
    pub participant_id: String,
    pub n_contradictory: u8,
    pub pool_size: u8,
    pub violated: bool,
}

impl MeRow {
    pub fn predictors(&self) -> Vec<f64> {
        alloc::vec![f64::from(self.n_contradictory), f64::from(self.pool_size)]
    }
}

/// Test-phase responses of a session, with their locations.
fn test_responses<'a>(
    spec: &'a ExperimentSpec,
    session: &'a Session,
) -> impl Iterator<Item = (usize, &'a crate::protocol::Item, &'a OutputSeq)> + 'a {
    session
        .records
        .iter()
        .filter(|r| r.phase == Phase::Test)
        .filter_map(move |r| match spec.locate(&r.item_id)? {
            loc @ ItemLocation::Test { block, .. } => Some((block, spec.item(loc), &r.response)),
            ItemLocation::Study { .. } => None,
        })
}

/// Design rows for the mutual-exclusivity regression from non-excluded
/// bias-experiment participants.
pub fn me_regression_rows(entries: &[(&ExperimentSpec, &Session)]) -> Result<Vec<MeRow>, BiasError> {
    let mut rows = Vec::new();
    for (spec, session) in entries.iter().filter(|(s, _)| s.kind == ExperimentKind::Exp2) {
        if grade_session(spec, session)?.excluded {
            continue;
        }
        for (b, _, response) in test_responses(spec, session) {
            let block = &spec.blocks[b];
            if let BlockKind::Trial(TrialKind::MutualExclusivity {
                contradictory,
                pool_size,
            }) = block.kind
            {
                let consistent = classify_me(block.familiar, response).unwrap_or(true);
                rows.push(MeRow {
                    participant_id: session.participant_id.clone(),
                    n_contradictory: contradictory,
                    pool_size,
                    violated: !consistent,
                });
            }
        }
    }
    Ok(rows)
}

/// Summarizes bias-consistent behavior across sessions. Participants
/// excluded at grading are left out, as are curriculum stages whose study
/// quiz was failed.
pub fn bias_report(
    entries: &[(&ExperimentSpec, &Session)],
    cfg: &GrammarConfig,
) -> Result<BiasReport, BiasError> {
    let mut report = BiasReport::default();
    let mut curriculum = CurriculumErrors::default();
    let mut me_cells: BTreeMap<(u8, u8), (usize, usize)> = BTreeMap::new();
    let (mut iconic_n, mut iconic_k) = (0, 0);
    let mut conflict = ConflictSummary::default();
    let mut trial_participants = 0;
    let mut free = FreeFormCounts::default();
    let (mut saw1, mut saw2, mut saw3) = (false, false, false);

    for (spec, session) in entries {
        let graded = grade_session(spec, session)?;
        match spec.kind {
            ExperimentKind::Exp1 => saw1 = true,
            ExperimentKind::Exp2 => saw2 = true,
            ExperimentKind::Exp3 => saw3 = true,
        }
        if graded.excluded {
            continue;
        }
        match spec.kind {
            ExperimentKind::Exp1 => {
                curriculum.n_participants += 1;
                for (b, item, response) in test_responses(spec, session) {
                    if item.is_catch || graded.stages[b].excluded {
                        continue;
                    }
                    let Some(target) = &item.target else { continue };
                    curriculum.n_responses += 1;
                    if target == response {
                        continue;
                    }
                    curriculum.n_errors += 1;
                    let lex = &spec.blocks[b].lexicon;
                    if classify_one_to_one(&item.instruction, response, lex) {
                        curriculum.one_to_one += 1;
                    }
                    if let Some(fwd) = classify_kiki_no_reverse(&item.instruction, response, lex, cfg) {
                        curriculum.kiki_errors += 1;
                        curriculum.kiki_no_reverse += usize::from(fwd);
                    }
                }
            }
            ExperimentKind::Exp2 => {
                trial_participants += 1;
                for (b, item, response) in test_responses(spec, session) {
                    let block = &spec.blocks[b];
                    match block.kind {
                        BlockKind::Trial(TrialKind::MutualExclusivity {
                            contradictory,
                            pool_size,
                        }) => {
                            let cell = me_cells.entry((contradictory, pool_size)).or_default();
                            cell.0 += 1;
                            cell.1 += usize::from(classify_me(block.familiar, response) == Some(true));
                        }
                        BlockKind::Trial(TrialKind::Iconic { .. }) => {
                            iconic_n += 1;
                            iconic_k += usize::from(classify_iconic_concat(
                                &item.instruction,
                                response,
                                &block.lexicon,
                            ));
                        }
                        BlockKind::Trial(TrialKind::Conflict { .. }) => {
                            conflict.n += 1;
                            conflict.me_violations += usize::from(reuses_assigned(&block.assigned, response));
                        }
                        _ => {}
                    }
                }
            }
            ExperimentKind::Exp3 => {
                let pairs: Vec<(Instruction, OutputSeq)> = test_responses(spec, session)
                    .map(|(_, item, r)| (item.instruction.clone(), r.clone()))
                    .collect();
                if pairs.is_empty() {
                    continue;
                }
                free.n_participants += 1;
                match infer_segmentation(&pairs) {
                    None => free.no_model += 1,
                    Some(model) => {
                        let me = check_me_on_model(&model);
                        free.me_given_model += usize::from(me);
                        if me && model.is_one_to_one() {
                            free.full_bias += 1;
                        } else {
                            free.iconic_only += 1;
                        }
                    }
                }
            }
        }
    }

    if saw1 {
        curriculum.accuracy = share(curriculum.n_responses - curriculum.n_errors, curriculum.n_responses);
        curriculum.one_to_one_share = share(curriculum.one_to_one, curriculum.n_errors);
        curriculum.kiki_no_reverse_share = share(curriculum.kiki_no_reverse, curriculum.kiki_errors);
        report.curriculum = Some(curriculum);
    }
    if saw2 {
        conflict.me_violation_share = share(conflict.me_violations, conflict.n);
        let rows = me_regression_rows(entries)?;
        let xs: Vec<Vec<f64>> = rows.iter().map(MeRow::predictors).collect();
        let ys: Vec<bool> = rows.iter().map(|r| r.violated).collect();
        let (regression, regression_error) = match fit_logistic(&xs, &ys) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        };
        report.trials = Some(TrialBiases {
            n_participants: trial_participants,
            me_cells: me_cells
                .iter()
                .map(|(&(c, p), &(n, k))| CellRate {
                    label: BlockKind::Trial(TrialKind::MutualExclusivity {
                        contradictory: c,
                        pool_size: p,
                    })
                    .label(),
                    n,
                    rate: k as f64 / n as f64,
                })
                .collect(),
            iconic: (iconic_n > 0).then(|| CellRate {
                label: "iconic".to_string(),
                n: iconic_n,
                rate: iconic_k as f64 / iconic_n as f64,
            }),
            conflict,
            regression,
            regression_error,
        });
    }
    if saw3 {
        report.free_form = Some(free);
    }
    Ok(report)
}
