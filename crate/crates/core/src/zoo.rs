//! Small robust local algorithms used as pipeline inputs: testers, decoders,
//! a toy relaxed decoder, a weight-gap reader and partial testers for a
//! proof-aided family. Every instance is binary with n ≤ 16 so the oracles
//! can check it exhaustively.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    normalize, Alphabet, Code, Label, LocalAlgorithm, Node, Out, Prob, ProblemSpec, Property, Rule,
    Word,
};
use crate::oracle::{check_robustness, RobustnessOptions, RobustnessReport};
use crate::rng::derive;
use crate::sampler::{
    preprocess, shared_sample_multirun, Counters, PreparedSampler, SamplerOptions,
};
use crate::transforms::{repetitions, to_f64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Tester,
    Decoder,
    Relaxed,
    Gap,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZooInstance {
    pub name: String,
    pub kind: Kind,
    pub notes: String,
    /// Declared radii live on the algorithm (ρ₀, ρ₁).
    pub algorithm: LocalAlgorithm,
}

impl ZooInstance {
    pub fn spec(&self) -> &ProblemSpec {
        &self.algorithm.spec
    }

    pub fn n(&self) -> usize {
        self.algorithm.n()
    }

    /// Exhaustive robustness check at the declared radii.
    pub fn certify(&self) -> Result<RobustnessReport> {
        let a = &self.algorithm;
        check_robustness(a, a.rho0, a.rho1, &RobustnessOptions::default())
    }
}

fn leaf(o: Out) -> Node {
    Node::leaf(o)
}

/// Query `a` then `b` (binary); the leaf is `f(x_a, x_b)`.
fn pair(a: usize, b: usize, f: impl Fn(u8, u8) -> Out) -> Node {
    let inner = |va: u8| Node::query(b, (0..2).map(|vb| leaf(f(va, vb))).collect());
    Node::query(a, (0..2).map(inner).collect())
}

fn equal(a: u8, b: u8) -> Out {
    Out::from_bit(a == b)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tester", rename_all = "snake_case")]
pub enum BuiltinTester {
    /// Π = Σⁿ.
    Everything,
    /// Π = {0ⁿ, 1ⁿ}; compares coordinate 0 with a random other coordinate.
    AllEqual,
    /// Π = a doubled repetition code; checks a random block.
    Repetition { k: usize },
}

/// A tester cast as an (ε, 0)-robust algorithm: f = 1 on Π and 0 on inputs
/// more than 2ε from Π.
pub fn make_tester_instance(
    tester: &BuiltinTester,
    epsilon: Prob,
    n: usize,
) -> Result<ZooInstance> {
    let third = Prob::new(1, 3);
    let zero = Prob::from_integer(0);
    if epsilon <= zero || epsilon > Prob::from_integer(1) {
        return Err(Error::precondition("ε must lie in (0, 1]"));
    }
    let far = epsilon * 2;
    let (accept, q, trees, name) = match tester {
        BuiltinTester::Everything => (
            Property::Everything,
            1,
            vec![Node::constant(Out::One)],
            format!("everything-{n}"),
        ),
        BuiltinTester::AllEqual => {
            if n < 2 {
                return Err(Error::precondition("all-equal tester needs n ≥ 2"));
            }
            let trees = (1..n).map(|i| pair(0, i, equal)).collect();
            (Property::AllEqual, 2, trees, format!("all-equal-{n}"))
        }
        BuiltinTester::Repetition { k } => {
            let code = Code::Repetition { k: *k, r: 2 };
            if code.n() != n {
                return Err(Error::precondition(format!(
                    "doubled repetition of {k} bits has length {}",
                    code.n()
                )));
            }
            let trees = (0..*k).map(|j| pair(2 * j, 2 * j + 1, equal)).collect();
            (
                Property::Code { code },
                2,
                trees,
                format!("rep2-membership-{n}"),
            )
        }
    };
    let spec = ProblemSpec::new(
        n,
        Alphabet::BINARY,
        1,
        Rule::Tester {
            far_from: accept.clone(),
            accept,
            epsilon,
            far,
        },
    )?;
    let alg = normalize(&LocalAlgorithm::new(
        spec,
        q,
        third,
        epsilon,
        zero,
        vec![trees],
    )?)?;
    Ok(ZooInstance {
        name,
        kind: Kind::Tester,
        notes: "tester cast with radii (ε, 0)".into(),
        algorithm: alg,
    })
}

/// A local decoder cast with radii (δ/2, δ/2); the spec covers the
/// δ/2-neighbourhood of the code.
pub fn make_decoder_instance(code: &Code, delta: Prob) -> Result<ZooInstance> {
    let half = delta / 2;
    let n = code.n();
    let (q, trees, name): (usize, Vec<Vec<Node>>, String) = match *code {
        Code::Hadamard { k } if (1..=4).contains(&k) => {
            // For bit z, the unordered pairs {a, a ⊕ e_z}: w_a ⊕ w_{a⊕e_z}.
            let trees = (0..k)
                .map(|z| {
                    (0..n)
                        .filter(|a| a & (1 << z) == 0)
                        .map(|a| pair(a, a | (1 << z), |x, y| Out::from_bit(x != y)))
                        .collect()
                })
                .collect();
            (2, trees, format!("hadamard-{k}"))
        }
        Code::Repetition { k, r: 3 } if (1..=5).contains(&k) => {
            let trees = (0..k)
                .map(|z| {
                    let b = 3 * z;
                    let maj = |v0: u8| {
                        Node::query(
                            b + 1,
                            (0..2u8)
                                .map(|v1| {
                                    if v0 == v1 {
                                        leaf(Out::from_bit(v0 == 1))
                                    } else {
                                        Node::query(
                                            b + 2,
                                            (0..2u8)
                                                .map(|v2| leaf(Out::from_bit(v2 == 1)))
                                                .collect(),
                                        )
                                    }
                                })
                                .collect(),
                        )
                    };
                    vec![Node::query(b, (0..2u8).map(maj).collect())]
                })
                .collect();
            (3, trees, format!("rep3-decoder-{k}"))
        }
        _ => {
            return Err(Error::precondition(format!(
                "no built-in decoder for {code:?}"
            )))
        }
    };
    let spec = ProblemSpec::new(
        n,
        Alphabet::BINARY,
        code.k(),
        Rule::Decoder {
            code: code.clone(),
            radius: half,
        },
    )?;
    let alg = normalize(&LocalAlgorithm::new(
        spec,
        q,
        Prob::new(1, 3),
        half,
        half,
        trees,
    )?)?;
    Ok(ZooInstance {
        name,
        kind: Kind::Decoder,
        notes: "decoder cast with radii (δ/2, δ/2)".into(),
        algorithm: alg,
    })
}

/// Toy relaxed decoder for the triple repetition code: read two of the three
/// copies of bit z, output the common value, or ⊥ when they disagree.
pub fn make_relaxed_decoder_instance(k: usize) -> Result<ZooInstance> {
    if !(1..=5).contains(&k) {
        return Err(Error::precondition(
            "toy relaxed decoder supports 1 ≤ k ≤ 5",
        ));
    }
    let code = Code::Repetition { k, r: 3 };
    let n = code.n();
    let trees = (0..k)
        .map(|z| {
            let b = 3 * z;
            [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(i, j)| {
                    pair(b + i, b + j, |x, y| {
                        if x == y {
                            Out::from_bit(x == 1)
                        } else {
                            Out::Bot
                        }
                    })
                })
                .collect()
        })
        .collect();
    let spec = ProblemSpec::new(n, Alphabet::BINARY, k, Rule::Relaxed { code })?;
    let rho = Prob::new(1, n as u64);
    // Exact error on codewords is 0, so σ = 1/(3k) is a valid declaration
    // that already meets the per-index target of a global decoder.
    let alg = normalize(&LocalAlgorithm::new(
        spec,
        2,
        Prob::new(1, 3 * k as u64),
        rho,
        rho,
        trees,
    )?)?;
    Ok(ZooInstance {
        name: format!("relaxed-rep3-{k}"),
        kind: Kind::Relaxed,
        notes: "toy relaxed decoder: two of three copies, ⊥ on disagreement".into(),
        algorithm: alg,
    })
}

/// Read one uniformly random coordinate; f = 1 on 1ⁿ and 0 on 0ⁿ.
pub fn make_weight_gap_instance(n: usize) -> Result<ZooInstance> {
    let spec = ProblemSpec::new(n, Alphabet::BINARY, 1, Rule::Gap { low: 0, high: n })?;
    let trees = (0..n)
        .map(|i| Node::query(i, vec![leaf(Out::Zero), leaf(Out::One)]))
        .collect();
    let quarter = Prob::new(1, 4);
    let alg = LocalAlgorithm::new(spec, 1, quarter, quarter, quarter, vec![trees])?;
    Ok(ZooInstance {
        name: format!("weight-gap-{n}"),
        kind: Kind::Gap,
        notes: "single random read".into(),
        algorithm: alg,
    })
}

/// Partial tester for the doubled repetition code with k = 3, relative to
/// the proof `prefix`: accepts codewords whose message starts with it.
pub fn make_partial_tester(prefix: &[u8]) -> Result<ZooInstance> {
    let k = 3;
    let code = Code::Repetition { k, r: 2 };
    if prefix.len() > k || prefix.iter().any(|&b| b > 1) {
        return Err(Error::precondition(
            "proof must be a binary string of length ≤ 3",
        ));
    }
    let trees = (0..k)
        .map(|j| match prefix.get(j) {
            Some(&pi) => pair(2 * j, 2 * j + 1, move |x, y| {
                Out::from_bit(x == pi && y == pi)
            }),
            None => pair(2 * j, 2 * j + 1, equal),
        })
        .collect();
    let epsilon = Prob::new(1, 6);
    let spec = ProblemSpec::new(
        code.n(),
        Alphabet::BINARY,
        1,
        Rule::Tester {
            accept: Property::CodePrefix {
                code: code.clone(),
                prefix: prefix.to_vec(),
            },
            far_from: Property::Code { code },
            epsilon,
            far: epsilon * 2,
        },
    )?;
    let alg = normalize(&LocalAlgorithm::new(
        spec,
        2,
        Prob::new(1, 3),
        epsilon,
        Prob::from_integer(0),
        vec![trees],
    )?)?;
    let p: String = prefix.iter().map(|b| b.to_string()).collect();
    Ok(ZooInstance {
        name: format!("partial-rep2-{p}"),
        kind: Kind::Partial,
        notes: "partial tester for one proof string".into(),
        algorithm: alg,
    })
}

/// The 2^m partial testers for proofs of length m, in lexicographic order.
pub fn map_family(m: usize) -> Result<Vec<ZooInstance>> {
    (0..1u64 << m)
        .map(|i| make_partial_tester(&Word::from_index(i, m, Alphabet::BINARY).0))
        .collect()
}

pub const NAMES: &[&str] = &[
    "all-equal-8",
    "rep2-membership-6",
    "hadamard-3",
    "hadamard-4",
    "rep3-decoder-3",
    "relaxed-rep3-2",
    "relaxed-rep3-5",
    "weight-gap-8",
    "partial-rep2-0",
    "partial-rep2-1",
    "partial-rep2-00",
    "partial-rep2-01",
    "partial-rep2-10",
    "partial-rep2-11",
];

pub fn by_name(name: &str) -> Result<ZooInstance> {
    match name {
        "all-equal-8" => make_tester_instance(&BuiltinTester::AllEqual, Prob::new(1, 4), 8),
        "rep2-membership-6" => {
            make_tester_instance(&BuiltinTester::Repetition { k: 3 }, Prob::new(1, 6), 6)
        }
        "hadamard-3" => make_decoder_instance(&Code::Hadamard { k: 3 }, Prob::new(1, 8)),
        "hadamard-4" => make_decoder_instance(&Code::Hadamard { k: 4 }, Prob::new(1, 8)),
        "rep3-decoder-3" => {
            make_decoder_instance(&Code::Repetition { k: 3, r: 3 }, Prob::new(1, 9))
        }
        "relaxed-rep3-2" => make_relaxed_decoder_instance(2),
        "relaxed-rep3-5" => make_relaxed_decoder_instance(5),
        "weight-gap-8" => make_weight_gap_instance(8),
        _ => match name.strip_prefix("partial-rep2-") {
            Some(p) if !p.is_empty() && p.len() <= 2 && p.chars().all(|c| c == '0' || c == '1') => {
                make_partial_tester(&Word::parse(p)?.0)
            }
            _ => Err(Error::precondition(format!(
                "unknown zoo instance {name:?}"
            ))),
        },
    }
}

pub fn all() -> Result<Vec<ZooInstance>> {
    NAMES.iter().map(|n| by_name(n)).collect()
}

/// A proof-aided tester compiled into one sample-based tester: every
/// repetition draws a single sample shared by all partial testers; each
/// proof's verdict is the majority over repetitions; accept iff some proof
/// is accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapTester {
    pub m: usize,
    pub repetitions: u64,
    pub samplers: Vec<PreparedSampler>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapVerdict {
    pub accept: bool,
    /// Majority output per proof.
    pub per_proof: Vec<Out>,
    pub repetitions: u64,
    pub sampling_steps: u64,
}

pub fn map_to_tester(
    partials: &[ZooInstance],
    m: usize,
    opts: &SamplerOptions,
) -> Result<MapTester> {
    let first = partials
        .first()
        .ok_or_else(|| Error::precondition("no partial testers"))?;
    let proofs = 2u64.pow(m as u32);
    if partials.len() as u64 != proofs {
        return Err(Error::structural(format!(
            "{} partial testers for {proofs} proofs",
            partials.len()
        )));
    }
    let epsilon = |z: &ZooInstance| match &z.spec().rule {
        Rule::Tester { epsilon, .. } => Some(*epsilon),
        _ => None,
    };
    for p in partials {
        if p.n() != first.n()
            || p.spec().alphabet != first.spec().alphabet
            || epsilon(p) != epsilon(first)
            || epsilon(p).is_none()
        {
            return Err(Error::structural(format!(
                "partial tester {} does not match {}",
                p.name, first.name
            )));
        }
    }
    let sigma = partials
        .iter()
        .map(|p| p.algorithm.sigma)
        .max()
        .expect("nonempty");
    let target = 1.0 / (3.0 * proofs as f64);
    let reps = if m == 0 {
        1
    } else {
        repetitions(to_f64(sigma), target)
    };
    let samplers = partials
        .iter()
        .map(|p| preprocess(&p.algorithm, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(MapTester {
        m,
        repetitions: reps,
        samplers,
    })
}

impl MapTester {
    pub fn decide(&self, x: &Word, seed: u64, counters: &Counters) -> Result<MapVerdict> {
        let refs: Vec<&PreparedSampler> = self.samplers.iter().collect();
        let zs = vec![0; refs.len()];
        let before = counters.sampling_steps();
        let mut ones = vec![0u64; refs.len()];
        for r in 0..self.repetitions {
            let runs = shared_sample_multirun(&refs, &zs, x, derive(seed, r), counters)?;
            for (i, run) in runs.iter().enumerate() {
                if run.output == Out::One {
                    ones[i] += 1;
                }
            }
        }
        let per_proof: Vec<Out> = ones
            .iter()
            .map(|&c| Out::from_bit(2 * c > self.repetitions))
            .collect();
        Ok(MapVerdict {
            accept: per_proof.contains(&Out::One),
            per_proof,
            repetitions: self.repetitions,
            sampling_steps: counters.sampling_steps() - before,
        })
    }
}

/// Membership in the union property the partial testers cover.
pub fn union_label(partials: &[ZooInstance], x: &Word) -> Label {
    let labels: Vec<Label> = partials.iter().map(|p| p.spec().label(0, x)).collect();
    if labels.contains(&Label::One) {
        Label::One
    } else if labels.iter().all(|&l| l == Label::Zero) {
        Label::Zero
    } else {
        Label::Outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::all_words;
    use crate::oracle::exact_output_dist;

    #[test]
    fn registry_builds_everything() {
        let all = all().unwrap();
        assert_eq!(all.len(), NAMES.len());
        for (inst, name) in all.iter().zip(NAMES) {
            assert_eq!(&inst.name, name);
            assert!(inst.n() <= 16);
            assert!(inst.algorithm.is_normalized());
        }
        assert!(by_name("nope").is_err());
        assert!(by_name("partial-rep2-012").is_err());
    }

    #[test]
    fn small_instances_certify() {
        for name in [
            "all-equal-8",
            "rep2-membership-6",
            "hadamard-3",
            "relaxed-rep3-2",
            "weight-gap-8",
            "partial-rep2-1",
        ] {
            let r = by_name(name).unwrap().certify().unwrap();
            assert!(r.holds, "{name}: {:?}", r.counterexample);
            assert!(r.exhaustive);
        }
    }

    #[test]
    fn everything_is_trivially_accepted() {
        let t = make_tester_instance(&BuiltinTester::Everything, Prob::new(1, 4), 4).unwrap();
        for x in all_words(4, Alphabet::BINARY) {
            assert_eq!(t.spec().label(0, &x), Label::One);
            assert_eq!(
                exact_output_dist(&t.algorithm, 0, &x)
                    .unwrap()
                    .prob(Out::One),
                Prob::from_integer(1)
            );
        }
        assert!(t.certify().unwrap().holds);
    }

    #[test]
    fn hadamard_reads_the_message_bit() {
        let inst = by_name("hadamard-3").unwrap();
        let w = Code::Hadamard { k: 3 }.encode(&[1, 0, 1]);
        for (z, bit) in [(0, Out::One), (1, Out::Zero), (2, Out::One)] {
            assert_eq!(
                exact_output_dist(&inst.algorithm, z, &w).unwrap().prob(bit),
                Prob::from_integer(1)
            );
        }
    }

    #[test]
    fn hadamard_one_corruption() {
        // n = 16, radius 1: one flip ruins one of the 8 pairs for each bit.
        let inst = by_name("hadamard-4").unwrap();
        let code = Code::Hadamard { k: 4 };
        let mut w = code.encode(&[0, 1, 1, 0]);
        w.0[5] ^= 1;
        for z in 0..4 {
            let d = exact_output_dist(&inst.algorithm, z, &w).unwrap();
            let want = Out::from_bit([0, 1, 1, 0][z] == 1);
            assert_eq!(d.prob(want), Prob::new(7, 8));
        }
    }

    #[test]
    fn relaxed_decoder_contract() {
        let inst = by_name("relaxed-rep3-2").unwrap();
        let code = Code::Repetition { k: 2, r: 3 };
        let w = code.encode(&[1, 0]);
        for z in 0..2 {
            let d = exact_output_dist(&inst.algorithm, z, &w).unwrap();
            assert_eq!(d.prob(Out::Bot), Prob::from_integer(0));
        }
        let mut bad = w.clone();
        bad.0[1] = 0;
        let d = exact_output_dist(&inst.algorithm, 0, &bad).unwrap();
        assert_eq!(d.prob(Out::One), Prob::new(1, 3));
        assert_eq!(d.prob(Out::Bot), Prob::new(2, 3));
    }

    #[test]
    fn partial_testers_cover_the_code() {
        let fam = map_family(1).unwrap();
        let code = Code::Repetition { k: 3, r: 2 };
        for (_, c) in code.codewords() {
            assert_eq!(union_label(&fam, &c), Label::One);
        }
        assert_eq!(
            union_label(&fam, &Word::parse("010101").unwrap()),
            Label::Zero
        );
    }

    #[test]
    fn single_proof_map_is_plain_tester() {
        let fam = map_family(0).unwrap();
        let t = map_to_tester(&fam, 0, &SamplerOptions::default()).unwrap();
        assert_eq!(t.repetitions, 1);
        let c = Counters::default();
        let v = t.decide(&Word::parse("110011").unwrap(), 1, &c).unwrap();
        assert!(v.accept);
        assert_eq!(v.sampling_steps, 1);
    }

    #[test]
    fn map_repetitions_formula() {
        let fam = map_family(1).unwrap();
        let t = map_to_tester(&fam, 1, &SamplerOptions::default()).unwrap();
        // 108·log₂(6)·3 = 837.6
        assert_eq!(t.repetitions, 838);
        assert!(map_to_tester(&fam, 2, &SamplerOptions::default()).is_err());
    }
}
