use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::symbols::words;
use super::{ColorSymbol, GrammarError, Pseudoword};
use crate::rng;

/// What a pseudoword denotes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Meaning {
    /// Maps to exactly one output symbol.
    Primitive(ColorSymbol),
    /// `x f` repeats the output of the preceding primitive three times.
    RepeatThree,
    /// `x f y` yields `x y x`.
    Alternate,
    /// `x f y` yields `y` followed by `x`; widest scope.
    ReverseConcat,
}

impl Meaning {
    pub const FUNCTIONS: [Meaning; 3] = [
        Meaning::RepeatThree,
        Meaning::Alternate,
        Meaning::ReverseConcat,
    ];

    pub fn is_primitive(self) -> bool {
        matches!(self, Meaning::Primitive(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexEntry {
    pub word: Pseudoword,
    pub meaning: Meaning,
}

#[derive(Deserialize)]
struct LexiconRepr {
    entries: Vec<LexEntry>,
    word_pool: Vec<Pseudoword>,
    color_pool: Vec<ColorSymbol>,
}

/// Assignment of pseudowords to meanings.
///
/// Entries keep their insertion order: primitives are listed first, in the
/// order they were sampled, which is what experiment templates address by
/// position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LexiconRepr")]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    word_pool: Vec<Pseudoword>,
    color_pool: Vec<ColorSymbol>,
}

impl TryFrom<LexiconRepr> for Lexicon {
    type Error = GrammarError;

    fn try_from(r: LexiconRepr) -> Result<Self, Self::Error> {
        Lexicon::new(r.entries, r.word_pool, r.color_pool)
    }
}

/// The nine nonsense words of the curriculum experiment.
pub const EXP1_WORD_POOL: [&str; 9] = [
    "dax", "wif", "lug", "zup", "fep", "blicket", "kiki", "tufa", "gazzer",
];

/// The twenty words the bias trials draw from.
pub const EXP2_WORD_POOL: [&str; 20] = [
    "dax", "wif", "lug", "zup", "fep", "blicket", "kiki", "tufa", "gazzer", "mip", "rix", "vep",
    "tass", "niv", "kep", "bop", "zeb", "morp", "gluf", "sarn",
];

impl Lexicon {
    pub fn new(
        entries: Vec<LexEntry>,
        word_pool: Vec<Pseudoword>,
        color_pool: Vec<ColorSymbol>,
    ) -> Result<Self, GrammarError> {
        let invalid = |msg: &str| Err(GrammarError::InvalidLexicon(msg.to_string()));
        for (i, w) in word_pool.iter().enumerate() {
            if word_pool[..i].contains(w) {
                return invalid("duplicate word in word pool");
            }
        }
        for (i, c) in color_pool.iter().enumerate() {
            if color_pool[..i].contains(c) {
                return invalid("duplicate color in color pool");
            }
        }
        for (i, e) in entries.iter().enumerate() {
            if !word_pool.contains(&e.word) {
                return invalid("entry word not in word pool");
            }
            if entries[..i].iter().any(|p| p.word == e.word) {
                return invalid("word assigned twice");
            }
            match e.meaning {
                Meaning::Primitive(c) => {
                    if !color_pool.contains(&c) {
                        return invalid("primitive color not in color pool");
                    }
                    if entries[..i].iter().any(|p| p.meaning == e.meaning) {
                        return invalid("two primitives share a color");
                    }
                }
                f => {
                    if entries[..i].iter().any(|p| p.meaning == f) {
                        return invalid("function assigned to two words");
                    }
                }
            }
        }
        Ok(Lexicon {
            entries,
            word_pool,
            color_pool,
        })
    }

    /// `dax`→RED, `wif`→GREEN, `lug`→BLUE, `zup`→COLOR4, `fep`, `blicket`,
    /// `kiki`; six colors in the pool.
    pub fn canonical() -> Self {
        let pool = words(&EXP1_WORD_POOL);
        let colors = ColorSymbol::first(6);
        let meanings = [
            Meaning::Primitive(colors[0]),
            Meaning::Primitive(colors[1]),
            Meaning::Primitive(colors[2]),
            Meaning::Primitive(colors[3]),
            Meaning::RepeatThree,
            Meaning::Alternate,
            Meaning::ReverseConcat,
        ];
        let entries = pool
            .iter()
            .zip(meanings)
            .map(|(w, meaning)| LexEntry {
                word: w.clone(),
                meaning,
            })
            .collect();
        Lexicon::new(entries, pool, colors).expect("canonical lexicon is valid")
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn word_pool(&self) -> &[Pseudoword] {
        &self.word_pool
    }

    pub fn color_pool(&self) -> &[ColorSymbol] {
        &self.color_pool
    }

    pub fn meaning(&self, word: &str) -> Option<Meaning> {
        self.entries
            .iter()
            .find(|e| e.word.as_str() == word)
            .map(|e| e.meaning)
    }

    pub fn color_of(&self, word: &str) -> Option<ColorSymbol> {
        match self.meaning(word)? {
            Meaning::Primitive(c) => Some(c),
            _ => None,
        }
    }

    /// Primitive entries in insertion order.
    pub fn primitives(&self) -> impl Iterator<Item = (&Pseudoword, ColorSymbol)> {
        self.entries.iter().filter_map(|e| match e.meaning {
            Meaning::Primitive(c) => Some((&e.word, c)),
            _ => None,
        })
    }

    pub fn word_for(&self, meaning: Meaning) -> Option<&Pseudoword> {
        self.entries
            .iter()
            .find(|e| e.meaning == meaning)
            .map(|e| &e.word)
    }

    /// Words that carry a meaning, in entry order.
    pub fn vocabulary(&self) -> Vec<Pseudoword> {
        self.entries.iter().map(|e| e.word.clone()).collect()
    }

    /// Pool colors that no primitive uses.
    pub fn unassigned_colors(&self) -> Vec<ColorSymbol> {
        self.color_pool
            .iter()
            .copied()
            .filter(|c| !self.primitives().any(|(_, pc)| pc == *c))
            .collect()
    }
}

/// Draws a random lexicon: `n_primitives` words get distinct colors and three
/// further words take the three functions.
pub fn sample_lexicon(
    word_pool: &[Pseudoword],
    color_pool: &[ColorSymbol],
    n_primitives: usize,
    seed: u64,
) -> Result<Lexicon, GrammarError> {
    if word_pool.len() < n_primitives + Meaning::FUNCTIONS.len() || color_pool.len() < n_primitives
    {
        return Err(GrammarError::PoolTooSmall {
            words: word_pool.len(),
            colors: color_pool.len(),
            primitives: n_primitives,
        });
    }
    let mut rng = rng::seeded(seed);
    let mut ws: Vec<Pseudoword> = word_pool.to_vec();
    ws.shuffle(&mut rng);
    let mut cs: Vec<ColorSymbol> = color_pool.to_vec();
    cs.shuffle(&mut rng);

    let mut entries = Vec::with_capacity(n_primitives + 3);
    for (w, c) in ws.iter().zip(&cs).take(n_primitives) {
        entries.push(LexEntry {
            word: w.clone(),
            meaning: Meaning::Primitive(*c),
        });
    }
    for (w, f) in ws[n_primitives..].iter().zip(Meaning::FUNCTIONS) {
        entries.push(LexEntry {
            word: w.clone(),
            meaning: f,
        });
    }
    Lexicon::new(entries, word_pool.to_vec(), color_pool.to_vec())
}
