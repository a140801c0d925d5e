//! The pseudoword language and its interpretation grammar.
//!
//! Precedence, from widest to tightest scope:
//!
//! 1. the reverse-concatenation word splits the instruction at its leftmost
//!    occurrence; the right-hand side is parsed recursively, so
//!    `a R b R c` denotes `c b a`;
//! 2. within a segment free of that word, phrases are concatenated left to
//!    right in input order;
//! 3. the alternation word joins the primitive before it with the primitive
//!    after it;
//! 4. the repeat word binds to the single preceding primitive.
//!
//! The leftmost split for repeated reverse-concatenation words is a
//! convention of this crate.

mod enumerate;
mod eval;
mod lexicon;
mod parse;
mod symbols;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enumerate::{enumerate_instructions, MAX_ENUMERATION_WORDS};
pub use eval::{evaluate, evaluate_forward_concat, interpret};
pub use lexicon::{sample_lexicon, LexEntry, Lexicon, Meaning, EXP1_WORD_POOL, EXP2_WORD_POOL};
pub use parse::parse;
pub use symbols::{ColorSymbol, Instruction, OutputSeq, Pseudoword};
pub(crate) use symbols::words;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("malformed instruction: {0}")]
    MalformedInstruction(String),
    #[error("denotation has {len} symbols, more than the limit of {max}")]
    OutputTooLong { len: usize, max: usize },
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("invalid pseudoword `{0}`")]
    InvalidWord(String),
    #[error("unknown output symbol `{0}`")]
    UnknownSymbol(String),
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("pool too small: {words} words and {colors} colors for {primitives} primitives")]
    PoolTooSmall {
        words: usize,
        colors: usize,
        primitives: usize,
    },
    #[error("invalid grammar configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrammarConfig {
    /// Alternation and repetition only take bare primitives as arguments.
    pub strict_blicket_args: bool,
    /// Juxtaposed phrases denote their in-order concatenation.
    pub allow_concat: bool,
    pub max_output_len: usize,
}

/// Shortest output cap that still covers every curriculum test item.
pub const MIN_OUTPUT_LEN: usize = 6;

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            strict_blicket_args: true,
            allow_concat: true,
            max_output_len: 20,
        }
    }
}

impl GrammarConfig {
    pub fn validate(&self) -> Result<(), GrammarError> {
        if self.max_output_len < MIN_OUTPUT_LEN {
            return Err(GrammarError::InvalidConfig(alloc::format!(
                "max_output_len must be at least {MIN_OUTPUT_LEN}"
            )));
        }
        Ok(())
    }
}

/// Structured meaning of an instruction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseTree {
    Primitive(Pseudoword),
    RepeatThree(Box<ParseTree>),
    Alternate(Box<ParseTree>, Box<ParseTree>),
    ReverseConcat(Box<ParseTree>, Box<ParseTree>),
    Concat(Vec<ParseTree>),
}

impl ParseTree {
    /// Number of function applications (repeat, alternate and
    /// reverse-concatenation nodes). Plain concatenation does not count.
    pub fn count_compositions(&self) -> usize {
        match self {
            ParseTree::Primitive(_) => 0,
            ParseTree::RepeatThree(x) => 1 + x.count_compositions(),
            ParseTree::Alternate(x, y) | ParseTree::ReverseConcat(x, y) => {
                1 + x.count_compositions() + y.count_compositions()
            }
            ParseTree::Concat(ts) => ts.iter().map(ParseTree::count_compositions).sum(),
        }
    }

    /// The words of the tree in surface order, function words included.
    pub fn surface(&self, lex: &Lexicon) -> Vec<Pseudoword> {
        let mut out = Vec::new();
        self.push_surface(lex, &mut out);
        out
    }

    fn push_surface(&self, lex: &Lexicon, out: &mut Vec<Pseudoword>) {
        let fword = |m| lex.word_for(m).cloned().expect("function word in lexicon");
        match self {
            ParseTree::Primitive(w) => out.push(w.clone()),
            ParseTree::RepeatThree(x) => {
                x.push_surface(lex, out);
                out.push(fword(Meaning::RepeatThree));
            }
            ParseTree::Alternate(x, y) => {
                x.push_surface(lex, out);
                out.push(fword(Meaning::Alternate));
                y.push_surface(lex, out);
            }
            ParseTree::ReverseConcat(x, y) => {
                x.push_surface(lex, out);
                out.push(fword(Meaning::ReverseConcat));
                y.push_surface(lex, out);
            }
            ParseTree::Concat(ts) => ts.iter().for_each(|t| t.push_surface(lex, out)),
        }
    }
}

/// Number of compositions in a tree; see [`ParseTree::count_compositions`].
pub fn count_compositions(tree: &ParseTree) -> usize {
    tree.count_compositions()
}
