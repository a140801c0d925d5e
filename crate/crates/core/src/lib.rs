//! Few-shot instruction learning toolkit.
//!
//! `instrlearn-core` holds every algorithmic piece of the toolkit and builds
//! without the standard library (it only needs `alloc`):
//!
//! * [`grammar`]: the pseudoword language, its interpretation grammar, lexicon
//!   sampling and a generative instruction enumerator.
//! * [`protocol`]: generators for the three experiments, the study-phase quiz,
//!   the session state machine, scoring, grading and aggregation.
//! * [`bias`]: response classifiers for the inductive biases, segmentation
//!   search for free-form responses and a logistic regression fitted by IRLS.
//! * [`seq2seq`]: a from-scratch LSTM encoder-decoder with optional attention,
//!   manual backpropagation through time and Adam training.
//! * [`simulator`]: synthetic participants with configurable bias profiles.
//!
//! File formats, the CLI and the HTTP service live in the `instrlearn` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod bias;
pub mod grammar;
pub mod protocol;
pub mod rng;
pub mod seq2seq;
pub mod simulator;

pub use protocol::{ExperimentKind, ExperimentSpec, Session};
pub use grammar::{
    ColorSymbol, GrammarConfig, GrammarError, Instruction, Lexicon, Meaning, OutputSeq, ParseTree,
    Pseudoword,
};

