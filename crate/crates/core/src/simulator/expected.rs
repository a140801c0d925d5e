//! Closed-form report proportions for a profile.
//!
//! Every non-catch curriculum item errs with the same probability
//! `1 - p_correct`, so pooled error shares are plain averages over items of
//! the per-item conditional shares. Within an item the one-to-one and lapse
//! modes are labelled by construction (lapses match nothing, one-to-one
//! responses always carry a symbol the forward reading cannot produce); the
//! forward mode's single output is labelled by the classifiers directly.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{error_modes, forward_output, BiasProfile, Mode};
use crate::bias::{classify_iconic_concat, classify_one_to_one};
use crate::grammar::GrammarConfig;
use crate::protocol::{BlockKind, ExperimentSpec, TrialKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCell {
    pub label: String,
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedProportions {
    pub accuracy: Option<f64>,
    pub one_to_one_share: Option<f64>,
    pub kiki_no_reverse_share: Option<f64>,
    /// Mutual-exclusivity consistency per cell.
    pub me_cells: Vec<ExpectedCell>,
    pub iconic_rate: Option<f64>,
    pub conflict_me_violation: Option<f64>,
    /// Shares of full-bias, iconic-only and no-model participants.
    pub free_form: Option<[f64; 3]>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Expected report proportions for participants following `profile` on
/// `spec`, assuming nobody is excluded.
pub fn expected_proportions(
    spec: &ExperimentSpec,
    profile: &BiasProfile,
    cfg: &GrammarConfig,
) -> ExpectedProportions {
    let mut out = ExpectedProportions::default();
    let mut one_to_one = Vec::new();
    let mut kiki = Vec::new();
    let mut iconic = Vec::new();
    let mut scored = false;

    for block in &spec.blocks {
        let lex = &block.lexicon;
        for item in block.test.iter().filter(|i| !i.is_catch) {
            match block.kind {
                BlockKind::Trial(TrialKind::MutualExclusivity {
                    contradictory,
                    pool_size,
                }) => out.me_cells.push(ExpectedCell {
                    label: block.kind.label(),
                    rate: 1.0 - profile.me_violation(contradictory, pool_size),
                }),
                BlockKind::Trial(TrialKind::Conflict { .. }) => {
                    out.conflict_me_violation = Some(1.0 - profile.p_me);
                }
                BlockKind::FreeForm => {}
                _ => {
                    let Some(target) = &item.target else { continue };
                    let modes = error_modes(block, item, profile, cfg);
                    let total: f64 = modes.iter().map(|(_, w)| w).sum();
                    let fwd = forward_output(block, &item.instruction, cfg);
                    let (mut p121, mut pfwd, mut picon) = (0.0, 0.0, 0.0);
                    for (m, w) in &modes {
                        let s = w / total;
                        match m {
                            Mode::OneToOne => {
                                p121 += s;
                                picon += s;
                            }
                            Mode::Forward => {
                                let f = fwd.as_ref().expect("forward mode needs the scope word");
                                pfwd += s;
                                if classify_one_to_one(&item.instruction, f, lex) {
                                    p121 += s;
                                }
                                if classify_iconic_concat(&item.instruction, f, lex) {
                                    picon += s;
                                }
                            }
                            Mode::Lapse => {}
                        }
                    }
                    if let BlockKind::Trial(TrialKind::Iconic { .. }) = block.kind {
                        let own = f64::from(u8::from(classify_iconic_concat(&item.instruction, target, lex)));
                        iconic.push(profile.p_correct * own + (1.0 - profile.p_correct) * picon);
                    } else {
                        scored = true;
                        one_to_one.push(p121);
                        if fwd.is_some() {
                            kiki.push(pfwd);
                        }
                    }
                }
            }
        }
    }

    if scored {
        out.accuracy = Some(profile.p_correct);
        out.one_to_one_share = mean(&one_to_one);
        out.kiki_no_reverse_share = mean(&kiki);
    }
    out.iconic_rate = mean(&iconic);
    if spec.blocks.iter().any(|b| b.kind == BlockKind::FreeForm) {
        let m = &profile.free_form;
        let t = m.full_bias + m.iconic_multi + m.no_model;
        out.free_form = Some([m.full_bias / t, m.iconic_multi / t, m.no_model / t]);
    }
    out.me_cells.sort_by(|a, b| a.label.cmp(&b.label));
    out
}
