use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::model::{forward_backward_into, greedy, greedy_trace, Mode, StepTrace};
use super::{init_model, ModelConfig, ModelParams, Seq2SeqError, Vocab};
use crate::grammar::{Instruction, Lexicon, OutputSeq};
use crate::protocol::{exp1_item_sets, score_response, Item};
use crate::rng;

/// Smallest hidden size visited by the halving sweep.
pub const HALVING_FLOOR: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of single-example updates (times `batch_size` examples).
    pub presentations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Global gradient norm cap; non-positive disables clipping.
    pub clip_norm: f64,
    pub teacher_forcing: f64,
    pub seed: u64,
    pub max_output_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            presentations: 10_000,
            batch_size: 1,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            teacher_forcing: 0.5,
            seed: 0,
            max_output_len: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Seq2SeqError> {
        let bad = |m: String| Err(Seq2SeqError::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing) {
            return bad(format!("teacher_forcing must be in [0, 1], got {}", self.teacher_forcing));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step_scaled(params, grad, 1.0);
    }

    /// Update with the gradient multiplied by `scale`. Bias correction is
    /// folded into the step size, with `eps` scaled to match.
    pub fn step_scaled(&mut self, params: &mut [f64], grad: &[f64], scale: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let sc2 = libm::sqrt(1.0 - libm::pow(self.beta2, f64::from(self.t)));
        let lr = self.lr * sc2 / c1;
        let eps = self.eps * sc2;
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            let g = g * scale;
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * *m / (sqrt(*v) + eps);
        }
    }
}

#[cfg(any(test, feature = "std"))]
#[inline]
fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(not(any(test, feature = "std")))]
#[inline]
fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Rescales `grad` so its Euclidean norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = global_norm(grad);
    let s = clip_scale(norm, max_norm);
    if s != 1.0 {
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

fn global_norm(grad: &[f64]) -> f64 {
    libm::sqrt(grad.iter().map(|g| g * g).sum())
}

fn clip_scale(norm: f64, max_norm: f64) -> f64 {
    if max_norm > 0.0 && norm > max_norm {
        max_norm / norm
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Loss of every update, averaged over its batch.
    pub losses: Vec<f64>,
}

/// Trains on `items` with updates drawn uniformly with replacement.
pub fn train(
    params: &ModelParams,
    items: &[(Instruction, OutputSeq)],
    tcfg: &TrainConfig,
) -> Result<TrainOutcome, Seq2SeqError> {
    tcfg.validate()?;
    params.validate()?;
    if items.is_empty() {
        return Err(Seq2SeqError::NoItems);
    }
    let encoded = items
        .iter()
        .map(|(i, o)| Ok((params.vocab.encode_input(i)?, params.vocab.encode_output(o)?)))
        .collect::<Result<Vec<_>, Seq2SeqError>>()?;

    let mut params = params.clone();
    let mut adam = Adam::new(params.values.len(), tcfg.learning_rate);
    let mut rng = rng::seeded(tcfg.seed);
    let mut losses = Vec::with_capacity(tcfg.presentations);
    let mut grad = vec![0.0; params.values.len()];
    for step in 0..tcfg.presentations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for _ in 0..tcfg.batch_size {
            let (x, y) = &encoded[rng.gen_range(0..encoded.len())];
            let teacher_forcing = rng.gen_bool(tcfg.teacher_forcing);
            let mode = Mode::Train { rng: &mut rng, teacher_forcing };
            loss += forward_backward_into(&params, x, y, mode, &mut grad)?.loss;
        }
        let mean = 1.0 / tcfg.batch_size as f64;
        loss *= mean;
        if !loss.is_finite() {
            return Err(Seq2SeqError::Divergence(step));
        }
        let norm = global_norm(&grad) * mean;
        adam.step_scaled(&mut params.values, &grad, mean * clip_scale(norm, tcfg.clip_norm));
        losses.push(loss);
    }
    if params.values.iter().any(|v| !v.is_finite()) {
        return Err(Seq2SeqError::Divergence(tcfg.presentations));
    }
    Ok(TrainOutcome { params, losses })
}

/// Argmax decoding until the end marker, at most `max_len` symbols.
pub fn decode_greedy(params: &ModelParams, input: &Instruction, max_len: usize) -> Result<OutputSeq, Seq2SeqError> {
    let x = params.vocab.encode_input(input)?;
    Ok(OutputSeq(
        greedy(params, &x, max_len)
            .into_iter()
            .filter_map(|c| params.vocab.symbol(c))
            .collect(),
    ))
}

/// Greedy decoding with each step's output distribution and attention
/// weights.
pub fn decode_trace(
    params: &ModelParams,
    input: &Instruction,
    max_len: usize,
) -> Result<(OutputSeq, Vec<StepTrace>), Seq2SeqError> {
    let x = params.vocab.encode_input(input)?;
    let (classes, steps) = greedy_trace(params, &x, max_len);
    let out = classes.into_iter().filter_map(|c| params.vocab.symbol(c)).collect();
    Ok((OutputSeq(out), steps))
}

/// Share of `items` decoded exactly, scored like a human response.
pub fn exact_match(
    params: &ModelParams,
    items: &[(Instruction, OutputSeq)],
    max_len: usize,
) -> Result<f64, Seq2SeqError> {
    if items.is_empty() {
        return Err(Seq2SeqError::NoItems);
    }
    let mut hits = 0;
    for (instruction, target) in items {
        let item = Item {
            id: String::new(),
            instruction: instruction.clone(),
            target: Some(target.clone()),
            is_catch: false,
        };
        let response = decode_greedy(params, instruction, max_len)?;
        if score_response(&item, &response).expect("target present") {
            hits += 1;
        }
    }
    Ok(f64::from(hits) / items.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub name: String,
    pub config: ModelConfig,
}

/// Both baseline configurations, each halved down to [`HALVING_FLOOR`]
/// hidden units.
pub fn baseline_architectures() -> Vec<Architecture> {
    let mut out = Vec::new();
    for (name, start, layers, dropout, attention) in [
        ("lstm2-dropout0.5", 200, 2, 0.5, false),
        ("lstm1-attention-dropout0.1", 100, 1, 0.1, true),
    ] {
        let mut h = start;
        loop {
            out.push(Architecture {
                name: name.into(),
                config: ModelConfig::new(layers, h, dropout, attention),
            });
            if h <= HALVING_FLOOR {
                break;
            }
            h = (h / 2).max(HALVING_FLOOR);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub architecture: String,
    pub hidden: usize,
    pub seed: u64,
    pub train_acc: f64,
    pub test_acc: f64,
}

/// Trains one architecture on the canonical study items and scores it on
/// the study and test items. `tcfg.seed` is replaced by one derived from
/// `seed`.
pub fn train_and_evaluate(arch: &Architecture, seed: u64, tcfg: &TrainConfig) -> Result<RunResult, Seq2SeqError> {
    let lex = Lexicon::canonical();
    let sets = exp1_item_sets(&lex);
    let vocab = Vocab::from_lexicon(&lex);
    let init = init_model(&arch.config, &vocab, rng::derive_seed(seed, 1))?;
    let tcfg = TrainConfig {
        seed: rng::derive_seed(seed, 2),
        ..tcfg.clone()
    };
    let trained = train(&init, &sets.study, &tcfg)?.params;
    Ok(RunResult {
        architecture: arch.name.clone(),
        hidden: arch.config.hidden,
        seed,
        train_acc: exact_match(&trained, &sets.study, tcfg.max_output_len)?,
        test_acc: exact_match(&trained, &sets.test, tcfg.max_output_len)?,
    })
}

/// Every architecture with seeds `0..n_seeds`, ordered by architecture then
/// seed.
pub fn run_generalization_experiment(
    archs: &[Architecture],
    n_seeds: u64,
    tcfg: &TrainConfig,
) -> Result<Vec<RunResult>, Seq2SeqError> {
    let mut out = Vec::new();
    for arch in archs {
        for seed in 0..n_seeds {
            out.push(train_and_evaluate(arch, seed, tcfg)?);
        }
    }
    Ok(out)
}
