//! Domain types: words over a finite alphabet, decision trees, description
//! tuples, problem specifications and local algorithms.

mod algorithm;
mod spec;
mod tree;

pub use algorithm::{
    distance, extract_tuples, hamming, induced_distribution, normalize, replace, run_algorithm,
    LocalAlgorithm,
};
pub use spec::{Code, Label, ProblemSpec, Property, Rule};
pub use tree::{eval_tree, DecisionTree, DescriptionTuple, Node, Path};

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact probabilities and radii.
pub type Prob = Ratio<u64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Alphabet(u8);

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet(2);

    pub fn new(size: u8) -> Result<Self> {
        if size < 2 {
            return Err(Error::structural(format!(
                "alphabet size {size} is below 2"
            )));
        }
        Ok(Alphabet(size))
    }

    pub fn size(self) -> u8 {
        self.0
    }

    pub fn ln(self) -> f64 {
        f64::from(self.0).ln()
    }
}

impl TryFrom<u8> for Alphabet {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Alphabet::new(v).map_err(|e| e.to_string())
    }
}

impl From<Alphabet> for u8 {
    fn from(a: Alphabet) -> u8 {
        a.0
    }
}

/// A string in Σⁿ. Coordinates are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn zeros(n: usize) -> Self {
        Word(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }

    /// Mixed-radix decoding with coordinate 0 as the most significant digit.
    pub fn from_index(mut idx: u64, n: usize, alphabet: Alphabet) -> Self {
        let base = u64::from(alphabet.size());
        let mut v = vec![0u8; n];
        for slot in v.iter_mut().rev() {
            *slot = (idx % base) as u8;
            idx /= base;
        }
        Word(v)
    }

    pub fn index(&self, alphabet: Alphabet) -> u64 {
        let base = u64::from(alphabet.size());
        self.0.iter().fold(0, |acc, &s| acc * base + u64::from(s))
    }

    pub fn check(&self, n: usize, alphabet: Alphabet) -> Result<()> {
        if self.len() != n {
            return Err(Error::structural(format!(
                "word has length {}, expected {n}",
                self.len()
            )));
        }
        if let Some(&s) = self.0.iter().find(|&&s| s >= alphabet.size()) {
            return Err(Error::structural(format!(
                "symbol {s} outside alphabet of size {}",
                alphabet.size()
            )));
        }
        Ok(())
    }

    /// Accepts either a digit string ("0110") or comma-separated symbols.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let symbols: Option<Vec<u8>> = if s.contains(',') {
            s.split(',').map(|t| t.trim().parse::<u8>().ok()).collect()
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as u8)).collect()
        };
        symbols
            .map(Word)
            .ok_or_else(|| Error::structural(format!("cannot parse word {s:?}")))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(u8::to_string).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// |Σ|ⁿ, or `None` on overflow.
pub fn word_count(n: usize, alphabet: Alphabet) -> Option<u64> {
    u64::from(alphabet.size()).checked_pow(u32::try_from(n).ok()?)
}

/// Every word of Σⁿ in lexicographic order.
pub fn all_words(n: usize, alphabet: Alphabet) -> impl Iterator<Item = Word> {
    let total = word_count(n, alphabet).expect("word space overflows u64");
    (0..total).map(move |i| Word::from_index(i, n, alphabet))
}

/// Algorithm output symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Out {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "bot")]
    Bot,
}

impl Out {
    pub const ALL: [Out; 3] = [Out::Zero, Out::One, Out::Bot];

    pub fn from_bit(b: bool) -> Self {
        if b {
            Out::One
        } else {
            Out::Zero
        }
    }

    pub fn index(self) -> usize {
        match self {
            Out::Zero => 0,
            Out::One => 1,
            Out::Bot => 2,
        }
    }
}

impl fmt::Display for Out {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Out::Zero => "0",
            Out::One => "1",
            Out::Bot => "bot",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_index_roundtrip() {
        let a = Alphabet::new(3).unwrap();
        for i in 0..81 {
            let w = Word::from_index(i, 4, a);
            assert_eq!(w.index(a), i);
        }
        assert_eq!(
            Word::from_index(1, 4, Alphabet::BINARY),
            Word(vec![0, 0, 0, 1])
        );
    }

    #[test]
    fn parse_and_display() {
        let w = Word::parse("0110").unwrap();
        assert_eq!(w, Word(vec![0, 1, 1, 0]));
        assert_eq!(w.to_string(), "0110");
        assert_eq!(Word::parse("1, 12,3").unwrap(), Word(vec![1, 12, 3]));
        assert_eq!(Word(vec![1, 12]).to_string(), "1,12");
        assert!(Word::parse("01x").is_err());
    }

    #[test]
    fn alphabet_rejects_unary() {
        assert!(Alphabet::new(1).is_err());
        assert!(serde_json::from_str::<Alphabet>("1").is_err());
        assert_eq!(
            serde_json::from_str::<Alphabet>("2").unwrap(),
            Alphabet::BINARY
        );
    }

    #[test]
    fn word_check() {
        let w = Word(vec![0, 2]);
        assert!(w.check(2, Alphabet::BINARY).is_err());
        assert!(w.check(2, Alphabet::new(3).unwrap()).is_ok());
        assert!(w.check(3, Alphabet::new(3).unwrap()).is_err());
    }
}
