//! Synthetic participants.
//!
//! A [`BiasProfile`] drives every response. Items with a grammar-defined
//! answer are answered correctly with probability `p_correct`; otherwise one
//! error mode is drawn with probability proportional to its weight among the
//! modes that apply to the item:
//!
//! * one-to-one (`p_one_to_one`): each word becomes one symbol, primitives
//!   their own and other words a symbol no primitive uses. Applies when the
//!   instruction has a non-primitive word and such a symbol is in the pool.
//! * forward concatenation (`p_forward_concat`): the scope word's arguments
//!   in input order. Applies when the scope word is present and the result
//!   differs from the answer.
//! * lapse (`lapse`): a random pool sequence that is neither correct nor
//!   matches any of the bias classifiers.
//!
//! Under this scheme the modes never overlap, so report proportions have the
//! closed forms computed by [`expected_proportions`]. Mutual-exclusivity
//! probes violate with probability `1 - p_me` (or the logistic
//! [`MeEffects`] when given), and conflict probes reuse an assigned symbol
//! with probability `1 - p_me`.

mod expected;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::{
    classify_iconic_concat, classify_kiki_no_reverse, classify_one_to_one, infer_segmentation,
};
use crate::grammar::{
    evaluate_forward_concat, parse, ColorSymbol, GrammarConfig, Instruction, Meaning, OutputSeq,
    Pseudoword,
};
use crate::protocol::{
    Block, BlockKind, ExperimentKind, ExperimentSpec, Item, Phase, ProtocolError, Session,
    SessionRunner, TrialKind,
};
use crate::rng::{self, Rng};

pub use expected::{expected_proportions, ExpectedProportions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Logit of a mutual-exclusivity violation:
/// `intercept + per_contradictory * c + per_pool_symbol * pool_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeEffects {
    pub intercept: f64,
    pub per_contradictory: f64,
    pub per_pool_symbol: f64,
}

impl MeEffects {
    pub fn violation_probability(&self, contradictory: u8, pool_size: u8) -> f64 {
        let eta = self.intercept
            + self.per_contradictory * f64::from(contradictory)
            + self.per_pool_symbol * f64::from(pool_size);
        1.0 / (1.0 + libm::exp(-eta))
    }
}

/// Strategy weights for the free-form experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeFormMix {
    /// One distinct symbol per word, concatenated in order.
    pub full_bias: f64,
    /// Distinct per-word sequences, one single-word item getting two
    /// symbols.
    pub iconic_multi: f64,
    /// Responses no word-level model explains.
    pub no_model: f64,
}

impl Default for FreeFormMix {
    fn default() -> Self {
        FreeFormMix {
            full_bias: 1.0,
            iconic_multi: 0.0,
            no_model: 0.0,
        }
    }
}

/// Missing fields in serialized profiles take their default values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasProfile {
    pub p_correct: f64,
    pub p_one_to_one: f64,
    pub p_forward_concat: f64,
    pub p_me: f64,
    pub lapse: f64,
    /// Chance of answering a catch trial wrongly.
    #[serde(default)]
    pub catch_miss: f64,
    /// Chance of getting a quiz attempt wrong.
    #[serde(default)]
    pub quiz_error: f64,
    #[serde(default)]
    pub me_effects: Option<MeEffects>,
    #[serde(default)]
    pub free_form: FreeFormMix,
}

impl Default for BiasProfile {
    /// Always correct, mutual exclusivity always respected.
    fn default() -> Self {
        BiasProfile {
            p_correct: 1.0,
            p_one_to_one: 1.0,
            p_forward_concat: 1.0,
            p_me: 1.0,
            lapse: 1.0,
            catch_miss: 0.0,
            quiz_error: 0.0,
            me_effects: None,
            free_form: FreeFormMix::default(),
        }
    }
}

impl BiasProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        let probs = [
            ("p_correct", self.p_correct),
            ("p_one_to_one", self.p_one_to_one),
            ("p_forward_concat", self.p_forward_concat),
            ("p_me", self.p_me),
            ("lapse", self.lapse),
            ("catch_miss", self.catch_miss),
            ("quiz_error", self.quiz_error),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidProfile(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        let m = &self.free_form;
        let weights = [m.full_bias, m.iconic_multi, m.no_model];
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(SimError::InvalidProfile("free_form weights must be nonnegative with a positive sum".into()));
        }
        if let Some(e) = &self.me_effects {
            if ![e.intercept, e.per_contradictory, e.per_pool_symbol].iter().all(|x| x.is_finite()) {
                return Err(SimError::InvalidProfile("me_effects must be finite".into()));
            }
        }
        Ok(())
    }

    fn me_violation(&self, contradictory: u8, pool_size: u8) -> f64 {
        match &self.me_effects {
            Some(e) => e.violation_probability(contradictory, pool_size),
            None => 1.0 - self.p_me,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationMember {
    pub profile: BiasProfile,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPopulation {
    pub members: Vec<PopulationMember>,
    pub seed: u64,
}

impl SimulatedPopulation {
    pub fn uniform(profile: BiasProfile, count: usize, seed: u64) -> Self {
        SimulatedPopulation {
            members: alloc::vec![PopulationMember { profile, count }],
            seed,
        }
    }

    /// `(participant index, profile)` in simulation order.
    pub fn participants(&self) -> impl Iterator<Item = (usize, &BiasProfile)> {
        self.members
            .iter()
            .flat_map(|m| core::iter::repeat(&m.profile).take(m.count))
            .enumerate()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.members.is_empty() || self.members.iter().any(|m| m.count == 0) {
            return Err(SimError::InvalidProfile("every member needs count >= 1".into()));
        }
        self.members.iter().try_for_each(|m| m.profile.validate())
    }
}

/// Error modes in a fixed order: one-to-one, forward concatenation, lapse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    OneToOne,
    Forward,
    Lapse,
}

/// Symbols of the block's pool that no primitive uses.
pub(crate) fn free_symbols(block: &Block) -> Vec<ColorSymbol> {
    block
        .pool
        .iter()
        .copied()
        .filter(|c| !block.lexicon.primitives().any(|(_, pc)| pc == *c))
        .collect()
}

pub(crate) fn forward_output(block: &Block, instr: &Instruction, cfg: &GrammarConfig) -> Option<OutputSeq> {
    let kiki = block.lexicon.word_for(Meaning::ReverseConcat)?;
    if !instr.contains(kiki) {
        return None;
    }
    let tree = parse(instr, &block.lexicon, cfg).ok()?;
    evaluate_forward_concat(&tree, &block.lexicon, cfg).ok()
}

/// Applicable error modes with their weights (all zero falls back to lapse).
pub(crate) fn error_modes(
    block: &Block,
    item: &Item,
    profile: &BiasProfile,
    cfg: &GrammarConfig,
) -> Vec<(Mode, f64)> {
    let mut modes = Vec::new();
    let lex = &block.lexicon;
    let has_other = item.instruction.words().iter().any(|w| lex.color_of(w.as_str()).is_none());
    if has_other && !free_symbols(block).is_empty() {
        modes.push((Mode::OneToOne, profile.p_one_to_one));
    }
    if let Some(fwd) = forward_output(block, &item.instruction, cfg) {
        if item.target.as_ref() != Some(&fwd) {
            modes.push((Mode::Forward, profile.p_forward_concat));
        }
    }
    modes.push((Mode::Lapse, profile.lapse));
    if modes.iter().all(|(_, w)| *w <= 0.0) {
        return alloc::vec![(Mode::Lapse, 1.0)];
    }
    modes.retain(|(_, w)| *w > 0.0);
    modes
}

fn one_to_one_response(block: &Block, instr: &Instruction, rng: &mut Rng) -> OutputSeq {
    let free = free_symbols(block);
    OutputSeq(
        instr
            .words()
            .iter()
            .map(|w| match block.lexicon.color_of(w.as_str()) {
                Some(c) => c,
                None => *free.choose(rng).expect("mode requires a free symbol"),
            })
            .collect(),
    )
}

/// A random pool sequence avoiding the answer and every bias pattern.
fn lapse_response(block: &Block, item: &Item, cfg: &GrammarConfig, rng: &mut Rng) -> OutputSeq {
    let lex = &block.lexicon;
    let instr = &item.instruction;
    let target_len = item.target.as_ref().map_or(0, OutputSeq::len);
    let max_len = target_len.max(instr.len()) + 1;
    let acceptable = |r: &OutputSeq| {
        item.target.as_ref() != Some(r)
            && !classify_one_to_one(instr, r, lex)
            && !classify_iconic_concat(instr, r, lex)
            && classify_kiki_no_reverse(instr, r, lex, cfg) != Some(true)
    };
    for _ in 0..1000 {
        let len = rng.gen_range(1..=max_len);
        let r = OutputSeq((0..len).map(|_| *block.pool.choose(rng).expect("pool")).collect());
        if acceptable(&r) {
            return r;
        }
    }
    // A symbol no instruction primitive uses, at a length matching neither
    // the answer nor the instruction.
    let own: Vec<ColorSymbol> = instr.words().iter().filter_map(|w| lex.color_of(w.as_str())).collect();
    let c = block.pool.iter().copied().find(|c| !own.contains(c)).unwrap_or(block.pool[0]);
    OutputSeq(alloc::vec![c; target_len + instr.len() + 1])
}

fn wrong_answer(block: &Block, item: &Item, cfg: &GrammarConfig, rng: &mut Rng) -> OutputSeq {
    lapse_response(block, item, cfg, rng)
}

fn pick_weighted<T: Copy>(options: &[(T, f64)], rng: &mut Rng) -> T {
    let total: f64 = options.iter().map(|(_, w)| w).sum();
    let mut u = rng.gen::<f64>() * total;
    for (x, w) in options {
        if u < *w {
            return *x;
        }
        u -= w;
    }
    options.last().expect("nonempty").0
}

/// One test-phase response to `item` from `block`.
pub fn simulate_response(
    block: &Block,
    item: &Item,
    profile: &BiasProfile,
    cfg: &GrammarConfig,
    rng: &mut Rng,
) -> OutputSeq {
    match block.kind {
        BlockKind::Trial(TrialKind::MutualExclusivity {
            contradictory,
            pool_size,
        }) => {
            let familiar = block.familiar.expect("probe has a familiar symbol");
            if rng.gen_bool(profile.me_violation(contradictory, pool_size).clamp(0.0, 1.0)) {
                OutputSeq(alloc::vec![familiar])
            } else {
                let others: Vec<ColorSymbol> = block.pool.iter().copied().filter(|c| *c != familiar).collect();
                OutputSeq(alloc::vec![*others.choose(rng).expect("pool has another symbol")])
            }
        }
        BlockKind::Trial(TrialKind::Conflict { .. }) => {
            if rng.gen_bool(profile.p_me) {
                let two: Vec<ColorSymbol> = block.assigned.choose_multiple(rng, 2).copied().collect();
                OutputSeq(two)
            } else {
                OutputSeq(alloc::vec![*block.assigned.choose(rng).expect("assigned symbols")])
            }
        }
        _ => {
            let Some(target) = &item.target else {
                return wrong_answer(block, item, cfg, rng);
            };
            if item.is_catch {
                return if rng.gen_bool(profile.catch_miss) {
                    wrong_answer(block, item, cfg, rng)
                } else {
                    target.clone()
                };
            }
            if rng.gen_bool(profile.p_correct) {
                return target.clone();
            }
            match pick_weighted(&error_modes(block, item, profile, cfg), rng) {
                Mode::OneToOne => one_to_one_response(block, &item.instruction, rng),
                Mode::Forward => forward_output(block, &item.instruction, cfg).expect("applicable"),
                Mode::Lapse => lapse_response(block, item, cfg, rng),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FreeStrategy {
    FullBias,
    IconicMulti,
    NoModel,
}

fn free_form_responses(
    block: &Block,
    profile: &BiasProfile,
    rng: &mut Rng,
) -> Vec<OutputSeq> {
    let m = &profile.free_form;
    let strategy = pick_weighted(
        &[
            (FreeStrategy::FullBias, m.full_bias),
            (FreeStrategy::IconicMulti, m.iconic_multi),
            (FreeStrategy::NoModel, m.no_model),
        ],
        rng,
    );
    let mut words: Vec<Pseudoword> = Vec::new();
    for t in &block.test {
        for w in t.instruction.words() {
            if !words.contains(w) {
                words.push(w.clone());
            }
        }
    }
    let mut pool = block.pool.clone();
    pool.shuffle(rng);
    let render = |assign: &[(Pseudoword, Vec<ColorSymbol>)]| -> Vec<OutputSeq> {
        block
            .test
            .iter()
            .map(|t| {
                OutputSeq(
                    t.instruction
                        .words()
                        .iter()
                        .flat_map(|w| assign.iter().find(|(x, _)| x == w).expect("assigned").1.iter().copied())
                        .collect(),
                )
            })
            .collect()
    };
    match strategy {
        FreeStrategy::FullBias => {
            let assign: Vec<(Pseudoword, Vec<ColorSymbol>)> = words
                .iter()
                .enumerate()
                .map(|(i, w)| (w.clone(), alloc::vec![pool[i % pool.len()]]))
                .collect();
            render(&assign)
        }
        FreeStrategy::IconicMulti => {
            let singles: Vec<&Pseudoword> = block
                .test
                .iter()
                .filter(|t| t.instruction.len() == 1)
                .map(|t| &t.instruction.words()[0])
                .collect();
            let long = singles.choose(rng).copied().unwrap_or(&words[0]).clone();
            // The long word takes two symbols, then every other word one of
            // the rest, so sequences stay distinct.
            let mut next = 2;
            let assign: Vec<(Pseudoword, Vec<ColorSymbol>)> = words
                .iter()
                .map(|w| {
                    if *w == long {
                        (w.clone(), alloc::vec![pool[0], pool[1]])
                    } else {
                        let c = pool[next % pool.len()];
                        next += 1;
                        (w.clone(), alloc::vec![c])
                    }
                })
                .collect();
            render(&assign)
        }
        FreeStrategy::NoModel => {
            let mut last = Vec::new();
            for _ in 0..100 {
                let resp: Vec<OutputSeq> = block
                    .test
                    .iter()
                    .map(|_| {
                        let len = rng.gen_range(1..=3);
                        OutputSeq((0..len).map(|_| *pool.choose(rng).expect("pool")).collect())
                    })
                    .collect();
                let pairs: Vec<(Instruction, OutputSeq)> = block
                    .test
                    .iter()
                    .map(|t| t.instruction.clone())
                    .zip(resp.iter().cloned())
                    .collect();
                if infer_segmentation(&pairs).is_none() {
                    return resp;
                }
                last = resp;
            }
            last
        }
    }
}

/// One complete session, seeded by `seed`.
pub fn simulate_session(
    spec: &ExperimentSpec,
    profile: &BiasProfile,
    participant_id: impl Into<String>,
    seed: u64,
    cfg: &GrammarConfig,
) -> Result<Session, SimError> {
    profile.validate()?;
    let mut rng = rng::seeded(seed);
    let mut runner = SessionRunner::new(spec, participant_id);
    let mut free: Vec<Option<Vec<OutputSeq>>> = alloc::vec![None; spec.blocks.len()];
    let mut clock = 0u64;
    while let Some(p) = runner.pending() {
        let response = match (p.phase, runner.pending_item(), p.block) {
            (Phase::Practice, _, _) => spec.practice.clone(),
            (Phase::StudyQuiz, Some(item), Some(b)) => {
                if rng.gen_bool(profile.quiz_error) {
                    wrong_answer(&spec.blocks[b], item, cfg, &mut rng)
                } else {
                    item.target.clone().ok_or(ProtocolError::NoTarget)?
                }
            }
            (Phase::Test, Some(item), Some(b)) => {
                let block = &spec.blocks[b];
                if block.kind == BlockKind::FreeForm {
                    let all = free[b].get_or_insert_with(|| free_form_responses(block, profile, &mut rng));
                    let i = block.test.iter().position(|t| t.id == item.id).expect("item in block");
                    all[i].clone()
                } else {
                    simulate_response(block, item, profile, cfg, &mut rng)
                }
            }
            _ => unreachable!("pending items always resolve"),
        };
        runner.submit(&p.item_id, response, clock)?;
        clock += 1;
    }
    if spec.kind == ExperimentKind::Exp3 {
        runner.set_external_aid(false);
    }
    Ok(runner.into_session())
}

/// Participant id for simulation index `i`.
pub fn participant_id(i: usize) -> String {
    format!("sim-{i:05}")
}

/// Seed of participant `i` in a population seeded with `seed`.
pub fn participant_seed(seed: u64, i: usize) -> u64 {
    rng::derive_seed(seed, i as u64)
}

/// One session per participant, in population order.
pub fn simulate_population(
    spec: &ExperimentSpec,
    population: &SimulatedPopulation,
    cfg: &GrammarConfig,
) -> Result<Vec<Session>, SimError> {
    population.validate()?;
    population
        .participants()
        .map(|(i, profile)| {
            simulate_session(spec, profile, participant_id(i), participant_seed(population.seed, i), cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::{bias_report, classify_one_to_one};
    use crate::grammar::Lexicon;
    use crate::protocol::{aggregate, generate_exp1, generate_exp2, generate_exp3, grade_session};

    fn canonical_block() -> Block {
        let lex = Lexicon::canonical();
        Block {
            kind: BlockKind::Composition,
            pool: lex.color_pool().to_vec(),
            lexicon: lex,
            study: Vec::new(),
            test: Vec::new(),
            quiz: false,
            familiar: None,
            assigned: Vec::new(),
        }
    }

    fn item(instr: &str) -> Item {
        let lex = Lexicon::canonical();
        let instruction: Instruction = instr.parse().unwrap();
        let target = crate::grammar::interpret(&instruction, &lex, &GrammarConfig::default()).ok();
        Item {
            id: "x".into(),
            instruction,
            target,
            is_catch: false,
        }
    }

    fn only(mode: &str) -> BiasProfile {
        BiasProfile {
            p_correct: 0.0,
            p_one_to_one: f64::from(u8::from(mode == "one")),
            p_forward_concat: f64::from(u8::from(mode == "fwd")),
            lapse: f64::from(u8::from(mode == "lapse")),
            ..BiasProfile::default()
        }
    }

    #[test]
    fn perfect_profile_answers_correctly() {
        let block = canonical_block();
        let mut rng = rng::seeded(1);
        let it = item("wif blicket dax kiki lug");
        for _ in 0..20 {
            let r = simulate_response(&block, &it, &BiasProfile::default(), &GrammarConfig::default(), &mut rng);
            assert_eq!(Some(r), it.target);
        }
    }

    #[test]
    fn pure_one_to_one() {
        let block = canonical_block();
        let mut rng = rng::seeded(2);
        let it = item("wif blicket dax");
        let green = ColorSymbol::new(2).unwrap();
        let red = ColorSymbol::new(1).unwrap();
        for _ in 0..50 {
            let r = simulate_response(&block, &it, &only("one"), &GrammarConfig::default(), &mut rng);
            assert_eq!(r.len(), 3);
            assert_eq!((r.0[0], r.0[2]), (green, red));
            assert!(classify_one_to_one(&it.instruction, &r, &block.lexicon));
        }
    }

    #[test]
    fn pure_forward_concatenation() {
        let block = canonical_block();
        let mut rng = rng::seeded(3);
        let it = item("dax kiki lug");
        let r = simulate_response(&block, &it, &only("fwd"), &GrammarConfig::default(), &mut rng);
        assert_eq!(r, "RED BLUE".parse().unwrap());
    }

    #[test]
    fn lapses_avoid_every_pattern() {
        let block = canonical_block();
        let cfg = GrammarConfig::default();
        let mut rng = rng::seeded(4);
        for s in ["dax fep", "lug kiki wif", "zup blicket wif kiki dax fep"] {
            let it = item(s);
            for _ in 0..50 {
                let r = simulate_response(&block, &it, &only("lapse"), &cfg, &mut rng);
                assert_ne!(Some(&r), it.target.as_ref());
                assert!(!classify_one_to_one(&it.instruction, &r, &block.lexicon));
                assert!(!classify_iconic_concat(&it.instruction, &r, &block.lexicon));
                assert_ne!(classify_kiki_no_reverse(&it.instruction, &r, &block.lexicon, &cfg), Some(true));
            }
        }
    }

    #[test]
    fn perfect_population_scores_perfectly() {
        let spec = generate_exp1(10);
        let cfg = GrammarConfig::default();
        let pop = SimulatedPopulation::uniform(BiasProfile::default(), 100, 5);
        let sessions = simulate_population(&spec, &pop, &cfg).unwrap();
        let results: Vec<_> = sessions.iter().map(|s| grade_session(&spec, s).unwrap()).collect();
        let summary = aggregate(&results).unwrap();
        assert_eq!(summary.n_excluded, 0);
        assert_eq!(summary.overall.unwrap().mean, 1.0);
    }

    #[test]
    fn always_missing_catches_excludes_everyone() {
        let cfg = GrammarConfig::default();
        let profile = BiasProfile {
            catch_miss: 1.0,
            ..BiasProfile::default()
        };
        for spec in [generate_exp1(1), generate_exp2(1)] {
            let pop = SimulatedPopulation::uniform(profile.clone(), 20, 9);
            for s in simulate_population(&spec, &pop, &cfg).unwrap() {
                assert!(grade_session(&spec, &s).unwrap().excluded);
            }
        }
    }

    #[test]
    fn free_form_strategies_land_in_their_categories() {
        let spec = generate_exp3(4);
        let cfg = GrammarConfig::default();
        for (mix, want) in [
            (FreeFormMix { full_bias: 1.0, iconic_multi: 0.0, no_model: 0.0 }, (10, 0, 0)),
            (FreeFormMix { full_bias: 0.0, iconic_multi: 1.0, no_model: 0.0 }, (0, 10, 0)),
            (FreeFormMix { full_bias: 0.0, iconic_multi: 0.0, no_model: 1.0 }, (0, 0, 10)),
        ] {
            let profile = BiasProfile {
                free_form: mix,
                ..BiasProfile::default()
            };
            let sessions = simulate_population(&spec, &SimulatedPopulation::uniform(profile, 10, 1), &cfg).unwrap();
            let entries: Vec<_> = sessions.iter().map(|s| (&spec, s)).collect();
            let f = bias_report(&entries, &cfg).unwrap().free_form.unwrap();
            assert_eq!((f.full_bias, f.iconic_only, f.no_model), want);
            assert_eq!(f.me_given_model, want.0 + want.1);
        }
    }

    #[test]
    fn sessions_are_deterministic() {
        let spec = generate_exp2(3);
        let cfg = GrammarConfig::default();
        let profile = BiasProfile {
            p_correct: 0.5,
            p_me: 0.6,
            ..BiasProfile::default()
        };
        let a = simulate_session(&spec, &profile, "a", 11, &cfg).unwrap();
        let b = simulate_session(&spec, &profile, "a", 11, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let p = BiasProfile {
            p_correct: 1.5,
            ..BiasProfile::default()
        };
        assert!(p.validate().is_err());
    }
}
