use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GrammarError;

/// Abstract output symbol `COLOR1`..`COLOR8`.
///
/// Identity travels as the numeric id; [`ColorSymbol::display_name`] is only
/// meant for the user-facing boundary.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColorSymbol(u8);

const DISPLAY_NAMES: [&str; 8] = [
    "RED", "GREEN", "BLUE", "YELLOW", "PURPLE", "ORANGE", "PINK", "BROWN",
];

impl ColorSymbol {
    pub const MAX_ID: u8 = 8;

    pub const fn new(id: u8) -> Option<Self> {
        if id >= 1 && id <= Self::MAX_ID {
            Some(ColorSymbol(id))
        } else {
            None
        }
    }

    pub const fn id(self) -> u8 {
        self.0
    }

    pub fn display_name(self) -> &'static str {
        DISPLAY_NAMES[(self.0 - 1) as usize]
    }

    /// The first `n` symbols, `COLOR1..COLORn`.
    pub fn first(n: u8) -> Vec<ColorSymbol> {
        (1..=n.min(Self::MAX_ID)).map(ColorSymbol).collect()
    }

    pub fn all() -> Vec<ColorSymbol> {
        Self::first(Self::MAX_ID)
    }
}

impl fmt::Display for ColorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "COLOR{}", self.0)
    }
}

impl fmt::Debug for ColorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "COLOR{}", self.0)
    }
}

impl FromStr for ColorSymbol {
    type Err = GrammarError;

    /// Accepts `COLORk` as well as the display names (`RED`, `green`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        if let Some(rest) = upper.strip_prefix("COLOR") {
            if let Some(c) = rest.parse::<u8>().ok().and_then(ColorSymbol::new) {
                return Ok(c);
            }
        }
        DISPLAY_NAMES
            .iter()
            .position(|n| *n == upper)
            .map(|i| ColorSymbol(i as u8 + 1))
            .ok_or_else(|| GrammarError::UnknownSymbol(s.to_string()))
    }
}

impl Serialize for ColorSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ColorSymbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A nonsense word of the instruction language.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Pseudoword(String);

impl Pseudoword {
    pub fn new(token: &str) -> Result<Self, GrammarError> {
        if token.is_empty() || !token.chars().all(|c| c.is_ascii_lowercase()) {
            return Err(GrammarError::InvalidWord(token.to_string()));
        }
        Ok(Pseudoword(token.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Pseudoword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Pseudoword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Pseudoword {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Pseudoword::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Builds a word list from string literals; panics on invalid tokens, so only
/// use it with constants.
pub(crate) fn words(tokens: &[&str]) -> Vec<Pseudoword> {
    tokens
        .iter()
        .map(|t| Pseudoword::new(t).expect("valid constant pseudoword"))
        .collect()
}

/// A nonempty sequence of pseudowords.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instruction(Vec<Pseudoword>);

impl Instruction {
    pub fn new(words: Vec<Pseudoword>) -> Result<Self, GrammarError> {
        if words.is_empty() {
            return Err(GrammarError::EmptyInstruction);
        }
        Ok(Instruction(words))
    }

    pub fn words(&self) -> &[Pseudoword] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, word: &Pseudoword) -> bool {
        self.0.contains(word)
    }
}

impl FromStr for Instruction {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words = s
            .split_whitespace()
            .map(Pseudoword::new)
            .collect::<Result<Vec<_>, _>>()?;
        Instruction::new(words)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(w.as_str())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl Serialize for Instruction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Instruction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A sequence of output symbols. Denotations are never empty; an empty value
/// only appears as an in-progress response.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutputSeq(pub Vec<ColorSymbol>);

impl OutputSeq {
    pub fn new(symbols: Vec<ColorSymbol>) -> Self {
        OutputSeq(symbols)
    }

    pub fn symbols(&self) -> &[ColorSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Space-separated display names, e.g. `BLUE RED`.
    pub fn display_names(&self) -> String {
        let names: Vec<&str> = self.0.iter().map(|c| c.display_name()).collect();
        names.join(" ")
    }
}

impl From<Vec<ColorSymbol>> for OutputSeq {
    fn from(v: Vec<ColorSymbol>) -> Self {
        OutputSeq(v)
    }
}

impl FromStr for OutputSeq {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()
            .map(OutputSeq)
    }
}

impl fmt::Display for OutputSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for OutputSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}
