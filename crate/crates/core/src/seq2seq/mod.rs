//! LSTM encoder-decoder trained from scratch.
//!
//! The encoder reads the instruction followed by an end marker; its final
//! states seed the decoder, which starts from a start marker and emits
//! symbols until it predicts the end marker. Optional attention scores each
//! encoder output by its dot product with the decoder state, followed by
//! `tanh(W_c [context; h] + b_c)`. Gradients are
//! computed by hand through time and checked against finite differences in
//! the tests.
//!
//! All parameters live in one flat `Vec<f64>`; [`Layout`] maps each tensor
//! to a slice of it.

mod model;
mod train;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{ColorSymbol, Instruction, Lexicon, OutputSeq, Pseudoword};
use crate::rng;

pub use model::{forward, forward_backward, forward_backward_into, Forward, Mode, StepTrace};
pub use train::{
    clip_global_norm, decode_greedy, decode_trace, exact_match, baseline_architectures, run_generalization_experiment,
    train, train_and_evaluate, Adam, Architecture, RunResult, TrainConfig, TrainOutcome,
    HALVING_FLOOR,
};

/// Half-width of the uniform initialization range.
pub const INIT_RANGE: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Seq2SeqError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("training diverged at presentation {0}")]
    Divergence(usize),
    #[error("parameter vector has {got} values, layout needs {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("no training items")]
    NoItems,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    /// Applied to embeddings and between stacked layers during training.
    pub dropout: f64,
    pub attention: bool,
    /// Defaults to `hidden` when absent.
    #[serde(default)]
    pub embedding_dim: Option<usize>,
}

impl ModelConfig {
    pub fn new(layers: usize, hidden: usize, dropout: f64, attention: bool) -> Self {
        ModelConfig {
            layers,
            hidden,
            dropout,
            attention,
            embedding_dim: None,
        }
    }

    pub fn embedding(&self) -> usize {
        self.embedding_dim.unwrap_or(self.hidden)
    }

    pub fn validate(&self) -> Result<(), Seq2SeqError> {
        let bad = |m: String| Err(Seq2SeqError::InvalidConfig(m));
        if !(1..=2).contains(&self.layers) {
            return bad(format!("layers must be 1 or 2, got {}", self.layers));
        }
        if self.hidden < 3 {
            return bad(format!("hidden must be at least 3, got {}", self.hidden));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.embedding() == 0 {
            return bad("embedding_dim must be positive".into());
        }
        Ok(())
    }
}

/// Token maps. Input index 0 is the end marker and words follow; output
/// class 0 is the end marker and symbols follow; the decoder's extra input
/// index after the last symbol is the start marker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub words: Vec<Pseudoword>,
    pub symbols: Vec<ColorSymbol>,
}

impl Vocab {
    pub const EOS: usize = 0;

    pub fn new(words: Vec<Pseudoword>, symbols: Vec<ColorSymbol>) -> Result<Self, Seq2SeqError> {
        if !crate::bias::distinct(&words) || !crate::bias::distinct(&symbols) {
            return Err(Seq2SeqError::InvalidConfig("vocabulary entries must be distinct".into()));
        }
        Ok(Vocab { words, symbols })
    }

    /// Words of the lexicon and every symbol of its pool.
    pub fn from_lexicon(lex: &Lexicon) -> Self {
        Vocab {
            words: lex.vocabulary(),
            symbols: lex.color_pool().to_vec(),
        }
    }

    pub fn n_input(&self) -> usize {
        self.words.len() + 1
    }

    pub fn n_classes(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn sos(&self) -> usize {
        self.symbols.len() + 1
    }

    /// Encoder tokens including the trailing end marker.
    pub fn encode_input(&self, instr: &Instruction) -> Result<Vec<usize>, Seq2SeqError> {
        let mut out = Vec::with_capacity(instr.len() + 1);
        for w in instr.words() {
            let i = self
                .words
                .iter()
                .position(|x| x == w)
                .ok_or_else(|| Seq2SeqError::UnknownToken(w.as_str().into()))?;
            out.push(i + 1);
        }
        out.push(Self::EOS);
        Ok(out)
    }

    /// Decoder targets including the trailing end marker.
    pub fn encode_output(&self, out: &OutputSeq) -> Result<Vec<usize>, Seq2SeqError> {
        let mut v = Vec::with_capacity(out.len() + 1);
        for c in out.symbols() {
            let i = self
                .symbols
                .iter()
                .position(|x| x == c)
                .ok_or_else(|| Seq2SeqError::UnknownToken(format!("{c}")))?;
            v.push(i + 1);
        }
        v.push(Self::EOS);
        Ok(v)
    }

    pub fn symbol(&self, class: usize) -> Option<ColorSymbol> {
        class.checked_sub(1).and_then(|i| self.symbols.get(i).copied())
    }
}

/// A weight matrix (row-major) with an optional bias, as offsets into the
/// flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Affine {
    pub w: usize,
    pub b: Option<usize>,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub enc_embed: Affine,
    /// Gate rows ordered input, forget, candidate, output; columns are the
    /// layer input followed by the previous hidden state.
    pub enc_lstm: Vec<Affine>,
    pub dec_embed: Affine,
    pub dec_lstm: Vec<Affine>,
    /// `W_c` with its bias.
    pub attention: Option<Affine>,
    pub out: Affine,
    pub len: usize,
}

impl Layout {
    pub fn new(cfg: &ModelConfig, vocab: &Vocab) -> Self {
        let mut at = 0;
        let mut take = |rows: usize, cols: usize, bias: bool| {
            let w = at;
            at += rows * cols;
            let b = bias.then(|| {
                let b = at;
                at += rows;
                b
            });
            Affine { w, b, rows, cols }
        };
        let (e, h) = (cfg.embedding(), cfg.hidden);
        let enc_embed = take(vocab.n_input(), e, false);
        let enc_lstm = (0..cfg.layers)
            .map(|l| take(4 * h, if l == 0 { e } else { h } + h, true))
            .collect();
        let dec_embed = take(vocab.n_classes() + 1, e, false);
        let dec_lstm = (0..cfg.layers)
            .map(|l| take(4 * h, if l == 0 { e } else { h } + h, true))
            .collect();
        let attention = cfg.attention.then(|| take(h, 2 * h, true));
        let out = take(vocab.n_classes(), h, true);
        Layout {
            enc_embed,
            enc_lstm,
            dec_embed,
            dec_lstm,
            attention,
            out,
            len: at,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub values: Vec<f64>,
}

impl ModelParams {
    pub fn layout(&self) -> Layout {
        Layout::new(&self.config, &self.vocab)
    }

    /// Checks the configuration, the value count and finiteness.
    pub fn validate(&self) -> Result<(), Seq2SeqError> {
        self.config.validate()?;
        let want = self.layout().len;
        if self.values.len() != want {
            return Err(Seq2SeqError::ShapeMismatch {
                got: self.values.len(),
                want,
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Seq2SeqError::InvalidConfig("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Uniform initialization in `[-INIT_RANGE, INIT_RANGE]`.
pub fn init_model(cfg: &ModelConfig, vocab: &Vocab, seed: u64) -> Result<ModelParams, Seq2SeqError> {
    cfg.validate()?;
    let n = Layout::new(cfg, vocab).len;
    let mut rng = rng::seeded(seed);
    let values = (0..n).map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE)).collect();
    Ok(ModelParams {
        config: cfg.clone(),
        vocab: vocab.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocab {
        Vocab::from_lexicon(&Lexicon::canonical())
    }

    /// Closed-form count for one layer with embedding size equal to hidden.
    fn closed_form(h: usize, n_in: usize, n_cls: usize) -> usize {
        let lstm = 4 * h * (h + h + 1);
        n_in * h + lstm + (n_cls + 1) * h + lstm + n_cls * (h + 1)
    }

    #[test]
    fn parameter_count_matches_the_formula() {
        let v = vocab();
        assert_eq!((v.n_input(), v.n_classes()), (8, 7));
        let p = init_model(&ModelConfig::new(1, 3, 0.0, false), &v, 1).unwrap();
        assert_eq!(p.values.len(), closed_form(3, 8, 7));
        assert_eq!(p.values.len(), 244);
        let att = init_model(&ModelConfig::new(1, 3, 0.0, true), &v, 1).unwrap();
        assert_eq!(att.values.len(), 244 + 18 + 3);
    }

    #[test]
    fn initialization_is_seeded_and_bounded() {
        let v = vocab();
        let cfg = ModelConfig::new(2, 5, 0.5, true);
        let a = init_model(&cfg, &v, 9).unwrap();
        let b = init_model(&cfg, &v, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|x| x.abs() <= INIT_RANGE));
        assert_ne!(a, init_model(&cfg, &v, 10).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let v = vocab();
        for cfg in [
            ModelConfig::new(1, 3, 1.0, false),
            ModelConfig::new(3, 8, 0.0, false),
            ModelConfig::new(1, 2, 0.0, false),
        ] {
            assert!(matches!(init_model(&cfg, &v, 0), Err(Seq2SeqError::InvalidConfig(_))));
        }
    }

    #[test]
    fn unknown_tokens() {
        let v = vocab();
        let i: Instruction = "dax tufa".parse().unwrap();
        assert!(matches!(v.encode_input(&i), Err(Seq2SeqError::UnknownToken(_))));
        assert_eq!(v.encode_input(&"dax".parse().unwrap()).unwrap().len(), 2);
    }
}
