use serde::{Deserialize, Serialize};

use super::{all_words, hamming, word_count, Alphabet, Prob, Word};
use crate::error::{Error, Result};

/// Value of the partial function f(z, x).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "outside")]
    Outside,
}

impl Label {
    pub fn from_bit(b: u8) -> Self {
        if b == 0 {
            Label::Zero
        } else {
            Label::One
        }
    }

    pub fn out(self) -> Option<super::Out> {
        match self {
            Label::Zero => Some(super::Out::Zero),
            Label::One => Some(super::Out::One),
            Label::Outside => None,
        }
    }
}

/// Small binary codes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Code {
    /// Each message bit written `r` times in a contiguous block.
    Repetition { k: usize, r: usize },
    /// Position a ∈ {0,1}^k holds ⟨m, a⟩ mod 2.
    Hadamard { k: usize },
}

impl Code {
    pub fn k(&self) -> usize {
        match *self {
            Code::Repetition { k, .. } | Code::Hadamard { k } => k,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Code::Repetition { k, r } => k * r,
            Code::Hadamard { k } => 1 << k,
        }
    }

    pub fn encode(&self, m: &[u8]) -> Word {
        debug_assert_eq!(m.len(), self.k());
        match *self {
            Code::Repetition { r, .. } => {
                Word(m.iter().flat_map(|&b| std::iter::repeat_n(b, r)).collect())
            }
            Code::Hadamard { k } => {
                let bits: usize = m
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| usize::from(b & 1) << i)
                    .sum();
                Word(
                    (0..1usize << k)
                        .map(|a| ((bits & a).count_ones() % 2) as u8)
                        .collect(),
                )
            }
        }
    }

    pub fn messages(&self) -> impl Iterator<Item = Vec<u8>> {
        let k = self.k();
        all_words(k, Alphabet::BINARY).map(|w| w.0)
    }

    pub fn codewords(&self) -> Vec<(Vec<u8>, Word)> {
        self.messages()
            .map(|m| {
                let c = self.encode(&m);
                (m, c)
            })
            .collect()
    }
}

/// A property Π ⊆ Σⁿ with an enumerable member list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Property {
    Everything,
    AllEqual,
    Code {
        code: Code,
    },
    /// Codewords whose message starts with `prefix`.
    CodePrefix {
        code: Code,
        prefix: Vec<u8>,
    },
}

impl Property {
    fn members(&self, n: usize, alphabet: Alphabet) -> Vec<Word> {
        match self {
            Property::Everything => Vec::new(),
            Property::AllEqual => (0..alphabet.size()).map(|s| Word(vec![s; n])).collect(),
            Property::Code { code } => code.codewords().into_iter().map(|(_, c)| c).collect(),
            Property::CodePrefix { code, prefix } => code
                .codewords()
                .into_iter()
                .filter(|(m, _)| m.starts_with(prefix))
                .map(|(_, c)| c)
                .collect(),
        }
    }

    pub fn contains(&self, x: &Word, alphabet: Alphabet) -> bool {
        match self {
            Property::Everything => true,
            _ => self.members(x.len(), alphabet).contains(x),
        }
    }

    /// Absolute distance from `x` to the closest member.
    pub fn distance(&self, x: &Word, alphabet: Alphabet) -> usize {
        match self {
            Property::Everything => 0,
            _ => self
                .members(x.len(), alphabet)
                .iter()
                .map(|m| hamming(m, x))
                .min()
                .unwrap_or(x.len() + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// f ≡ value.
    Constant { value: Label },
    /// f = 1 on `accept`, f = 0 on inputs whose relative distance to
    /// `far_from` exceeds `far`. `epsilon` is the tester's proximity
    /// parameter; the promise gap is kept explicit.
    Tester {
        accept: Property,
        far_from: Property,
        epsilon: Prob,
        far: Prob,
    },
    /// f(z, w) = m_z when w is within relative distance `radius` of C(m).
    Decoder { code: Code, radius: Prob },
    /// f(z, C(m)) = m_z; the valid set is the code itself.
    Relaxed { code: Code },
    /// Binary weight gap: f = 1 if weight ≥ high, 0 if weight ≤ low.
    Gap { low: usize, high: usize },
}

/// The partial function f: Z × Σⁿ → {0, 1}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub alphabet: Alphabet,
    pub z_count: usize,
    pub rule: Rule,
}

impl ProblemSpec {
    pub fn new(n: usize, alphabet: Alphabet, z_count: usize, rule: Rule) -> Result<Self> {
        if z_count == 0 {
            return Err(Error::structural("explicit-input domain is empty"));
        }
        match &rule {
            Rule::Decoder { code, .. } | Rule::Relaxed { code } => {
                if code.n() != n || alphabet != Alphabet::BINARY {
                    return Err(Error::structural(format!(
                        "code of length {} does not fit n = {n} over a binary alphabet",
                        code.n()
                    )));
                }
                if z_count != code.k() {
                    return Err(Error::structural(
                        "decoders take one explicit input per message bit",
                    ));
                }
            }
            Rule::Tester {
                accept, far_from, ..
            } => {
                for p in [accept, far_from] {
                    if let Property::Code { code } | Property::CodePrefix { code, .. } = p {
                        if code.n() != n {
                            return Err(Error::structural("code length does not match n"));
                        }
                    }
                }
            }
            Rule::Gap { low, high } => {
                if low >= high || *high > n {
                    return Err(Error::structural("gap needs low < high ≤ n"));
                }
            }
            Rule::Constant { .. } => {}
        }
        Ok(ProblemSpec {
            n,
            alphabet,
            z_count,
            rule,
        })
    }

    pub fn relaxed(&self) -> bool {
        matches!(self.rule, Rule::Relaxed { .. })
    }

    pub fn label(&self, z: usize, x: &Word) -> Label {
        let n = self.n as u64;
        match &self.rule {
            Rule::Constant { value } => *value,
            Rule::Tester {
                accept,
                far_from,
                far,
                ..
            } => {
                if accept.contains(x, self.alphabet) {
                    Label::One
                } else if Prob::new(far_from.distance(x, self.alphabet) as u64, n) > *far {
                    Label::Zero
                } else {
                    Label::Outside
                }
            }
            Rule::Decoder { code, radius } => {
                let mut seen = None;
                for (m, c) in code.codewords() {
                    if Prob::new(hamming(&c, x) as u64, n) <= *radius {
                        match seen {
                            None => seen = Some(m[z]),
                            Some(b) if b != m[z] => return Label::Outside,
                            Some(_) => {}
                        }
                    }
                }
                seen.map_or(Label::Outside, Label::from_bit)
            }
            Rule::Relaxed { code } => code
                .codewords()
                .into_iter()
                .find(|(_, c)| c == x)
                .map_or(Label::Outside, |(m, _)| Label::from_bit(m[z])),
            Rule::Gap { low, high } => {
                let w = x.weight();
                if w >= *high {
                    Label::One
                } else if w <= *low {
                    Label::Zero
                } else {
                    Label::Outside
                }
            }
        }
    }

    /// Membership in the valid set V (relaxed specs only; everything else is
    /// treated as valid on its domain).
    pub fn is_valid(&self, z: usize, x: &Word) -> bool {
        match &self.rule {
            Rule::Relaxed { code } => code.codewords().iter().any(|(_, c)| c == x),
            _ => self.label(z, x) != Label::Outside,
        }
    }

    /// All in-domain points for explicit input z, by scanning Σⁿ.
    pub fn domain(&self, z: usize) -> Result<Vec<(Word, Label)>> {
        let total = word_count(self.n, self.alphabet).unwrap_or(u64::MAX);
        if total > 1 << 20 {
            return Err(Error::Infeasible {
                what: "domain scan".into(),
                needed: total as f64,
                budget: 1 << 20,
            });
        }
        Ok(all_words(self.n, self.alphabet)
            .map(|w| {
                let l = self.label(z, &w);
                (w, l)
            })
            .filter(|(_, l)| *l != Label::Outside)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn hadamard_encoding() {
        let c = Code::Hadamard { k: 3 };
        // m = 101 (m0 = 1, m2 = 1): position a has parity of a0 + a2.
        let cw = c.encode(&[1, 0, 1]);
        assert_eq!(cw.len(), 8);
        assert_eq!(cw, w("01011010"));
        let spec = ProblemSpec::new(
            8,
            Alphabet::BINARY,
            3,
            Rule::Decoder {
                code: c,
                radius: Prob::new(1, 16),
            },
        )
        .unwrap();
        assert_eq!(spec.label(0, &cw), Label::One);
        assert_eq!(spec.label(1, &cw), Label::Zero);
        assert_eq!(spec.label(2, &cw), Label::One);
    }

    #[test]
    fn repetition_encoding() {
        let c = Code::Repetition { k: 2, r: 3 };
        assert_eq!(c.encode(&[1, 0]), w("111000"));
        assert_eq!(c.codewords().len(), 4);
    }

    #[test]
    fn all_equal_labels() {
        let spec = ProblemSpec::new(
            4,
            Alphabet::BINARY,
            1,
            Rule::Tester {
                accept: Property::AllEqual,
                far_from: Property::AllEqual,
                epsilon: Prob::new(1, 8),
                far: Prob::new(1, 4),
            },
        )
        .unwrap();
        assert_eq!(spec.label(0, &w("0000")), Label::One);
        // Distance 1/4 is not strictly more than 2ε = 1/4.
        assert_eq!(spec.label(0, &w("0001")), Label::Outside);
        assert_eq!(spec.label(0, &w("0011")), Label::Zero);
    }

    #[test]
    fn decoder_radius_and_outside() {
        let c = Code::Repetition { k: 1, r: 4 };
        let spec = ProblemSpec::new(
            4,
            Alphabet::BINARY,
            1,
            Rule::Decoder {
                code: c,
                radius: Prob::new(1, 4),
            },
        )
        .unwrap();
        assert_eq!(spec.label(0, &w("0100")), Label::Zero);
        assert_eq!(spec.label(0, &w("1101")), Label::One);
        assert_eq!(spec.label(0, &w("0110")), Label::Outside);
    }

    #[test]
    fn relaxed_valid_set() {
        let c = Code::Repetition { k: 2, r: 3 };
        let spec = ProblemSpec::new(6, Alphabet::BINARY, 2, Rule::Relaxed { code: c }).unwrap();
        assert!(spec.is_valid(0, &w("000111")));
        assert!(!spec.is_valid(0, &w("010111")));
        assert_eq!(spec.label(1, &w("000111")), Label::One);
        assert_eq!(spec.label(1, &w("010111")), Label::Outside);
        assert!(spec.relaxed());
    }

    #[test]
    fn spec_validation() {
        let c = Code::Hadamard { k: 2 };
        assert!(
            ProblemSpec::new(8, Alphabet::BINARY, 2, Rule::Relaxed { code: c.clone() }).is_err()
        );
        assert!(ProblemSpec::new(4, Alphabet::BINARY, 1, Rule::Relaxed { code: c }).is_err());
        assert!(ProblemSpec::new(4, Alphabet::BINARY, 1, Rule::Gap { low: 3, high: 2 }).is_err());
    }

    #[test]
    fn domain_scan() {
        let spec = ProblemSpec::new(3, Alphabet::BINARY, 1, Rule::Gap { low: 0, high: 3 }).unwrap();
        let d = spec.domain(0).unwrap();
        assert_eq!(d, vec![(w("000"), Label::Zero), (w("111"), Label::One)]);
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = ProblemSpec::new(
            6,
            Alphabet::BINARY,
            1,
            Rule::Tester {
                accept: Property::CodePrefix {
                    code: Code::Repetition { k: 3, r: 2 },
                    prefix: vec![1],
                },
                far_from: Property::Code {
                    code: Code::Repetition { k: 3, r: 2 },
                },
                epsilon: Prob::new(1, 6),
                far: Prob::new(1, 3),
            },
        )
        .unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        let back: ProblemSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
