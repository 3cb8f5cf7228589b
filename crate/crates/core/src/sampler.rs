//! The sample-based algorithm: one binomial sampling step, then for each
//! daisy D_j (j ≥ 1) an enumeration over assignments κ to its kernel,
//! counting the description tuples that the sample and κ together confirm.
//!
//! The relaxed variant runs both output sides on one sample. The global
//! decoder and shared-sample multi-runs reuse one sample across explicit
//! inputs or across samplers.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::daisy::{partition, DaisyPartition};
use crate::error::{Error, Result};
use crate::model::{
    extract_tuples, Alphabet, DescriptionTuple, LocalAlgorithm, Out, ProblemSpec, Word,
};
use crate::par;
use crate::rng::{stream, Purpose};
use crate::transforms::to_f64;

/// Default cap on kernel assignments enumerated per daisy.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

/// γ = 48·|Σ|^q·ln|Σ|.
pub fn gamma(alphabet: Alphabet, q: usize) -> f64 {
    48.0 * f64::from(alphabet.size()).powi(q as i32) * alphabet.ln()
}

/// γ·n^{−1/(2q²)}, unclamped.
pub fn sampling_probability(gamma: f64, n: usize, q: usize) -> f64 {
    gamma * (n as f64).powf(-1.0 / (2.0 * (q * q) as f64))
}

/// τ_j = (|μ̃|/(4q))·p^j for j = 1..=q (index j−1).
pub fn thresholds(support: usize, q: usize, p: f64) -> Vec<f64> {
    (1..=q)
        .map(|j| support as f64 / (4.0 * q as f64) * p.powi(j as i32))
        .collect()
}

/// α = 12·ln|Σ|/(ρσ); `None` (no capping) when ρ or σ is zero.
pub fn alpha(alphabet: Alphabet, rho: f64, sigma: f64) -> Option<f64> {
    if rho <= 0.0 || sigma <= 0.0 {
        None
    } else {
        Some(12.0 * alphabet.ln() / (rho * sigma))
    }
}

/// γ·q²·n^{1 − max(1,i)/q}.
pub fn kernel_bound(gamma: f64, q: usize, n: usize, i: usize) -> f64 {
    gamma * (q * q) as f64 * (n as f64).powf(1.0 - i.max(1) as f64 / q as f64)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub override_p: Option<f64>,
    pub override_gamma: Option<f64>,
    /// Replaces the abort cap 2pn.
    pub override_cap: Option<f64>,
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub gamma_formula: f64,
    pub gamma: f64,
    pub p_formula: f64,
    pub p: f64,
    /// The formula value exceeded 1 and was clamped.
    pub clamped: bool,
    /// γ, p or the cap was overridden; guarantees no longer apply.
    pub overridden: bool,
    pub alpha: Option<f64>,
    /// Sampling aborts once |Q| ≥ cap = 2pn.
    pub cap: f64,
    pub budget: u64,
}

impl SamplerConfig {
    pub fn new(alg: &LocalAlgorithm, opts: &SamplerOptions) -> Result<Self> {
        let (n, q, a) = (alg.n(), alg.q, alg.alphabet());
        if q == 0 {
            return Err(Error::precondition("the sampler needs q ≥ 1"));
        }
        let gamma_formula = gamma(a, q);
        let g = opts.override_gamma.unwrap_or(gamma_formula);
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::precondition(format!("γ must be positive, got {g}")));
        }
        let p_formula = sampling_probability(g, n, q);
        let p = match opts.override_p {
            Some(p) if p > 0.0 && p <= 1.0 => p,
            Some(p) => {
                return Err(Error::precondition(format!(
                    "p must lie in (0, 1], got {p}"
                )))
            }
            None => p_formula.min(1.0),
        };
        Ok(SamplerConfig {
            gamma_formula,
            gamma: g,
            p_formula,
            p,
            clamped: opts.override_p.is_none() && p_formula > 1.0,
            overridden: opts.override_p.is_some()
                || opts.override_gamma.is_some()
                || opts.override_cap.is_some(),
            alpha: alpha(a, to_f64(alg.robust_radius()), to_f64(alg.sigma)),
            cap: opts.override_cap.unwrap_or(2.0 * p * n as f64),
            budget: opts.budget.unwrap_or(DEFAULT_BUDGET),
        })
    }
}

/// The b-tuples of one explicit input and their daisy partition. Tuple i
/// corresponds to `partition.sets[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub out: Out,
    pub tuples: Vec<DescriptionTuple>,
    pub partition: DaisyPartition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZSampler {
    pub z: usize,
    /// |μ̃| for this explicit input.
    pub support: usize,
    pub thresholds: Vec<f64>,
    /// The 1-side, preceded by the 0-side in relaxed mode.
    pub sides: Vec<Side>,
}

impl ZSampler {
    pub fn side(&self, b: Out) -> Result<&Side> {
        self.sides
            .iter()
            .find(|s| s.out == b)
            .ok_or_else(|| Error::structural(format!("no {b}-side in this sampler")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedSampler {
    pub n: usize,
    pub q: usize,
    pub alphabet: Alphabet,
    pub relaxed: bool,
    pub spec: ProblemSpec,
    pub config: SamplerConfig,
    pub per_z: Vec<ZSampler>,
}

impl PreparedSampler {
    pub fn for_z(&self, z: usize) -> Result<&ZSampler> {
        self.per_z
            .get(z)
            .ok_or_else(|| Error::structural(format!("explicit input {z} out of range")))
    }
}

pub fn preprocess(alg: &LocalAlgorithm, opts: &SamplerOptions) -> Result<PreparedSampler> {
    if !alg.is_normalized() {
        return Err(Error::structural("preprocess needs a normalized algorithm"));
    }
    let config = SamplerConfig::new(alg, opts)?;
    let (n, q, a) = (alg.n(), alg.q, alg.alphabet());
    let relaxed = alg.relaxed();
    let sides_out: &[Out] = if relaxed {
        &[Out::Zero, Out::One]
    } else {
        &[Out::One]
    };
    let mut per_z = Vec::with_capacity(alg.trees.len());
    for z in 0..alg.trees.len() {
        let all = extract_tuples(alg, z)?;
        let support = alg.support_size(z);
        let mut sides = Vec::new();
        for &b in sides_out {
            let tuples: Vec<DescriptionTuple> =
                all.iter().filter(|t| t.out == b).cloned().collect();
            let sets: Vec<Vec<usize>> = tuples.iter().map(|t| t.set.clone()).collect();
            let partition = partition(&sets, n, q)?;
            check_side(&partition, &config, a, z)?;
            sides.push(Side {
                out: b,
                tuples,
                partition,
            });
        }
        per_z.push(ZSampler {
            z,
            support,
            thresholds: thresholds(support, q, config.p),
            sides,
        });
    }
    Ok(PreparedSampler {
        n,
        q,
        alphabet: a,
        relaxed,
        spec: alg.spec.clone(),
        config,
        per_z,
    })
}

fn check_side(p: &DaisyPartition, config: &SamplerConfig, a: Alphabet, z: usize) -> Result<()> {
    let (n, q) = (p.n, p.q);
    for i in 1..=q {
        let bound = kernel_bound(config.gamma_formula, q, n, i);
        if p.kernels[i].len() as f64 > bound {
            return Err(Error::Invariant(format!(
                "explicit input {z}: |K_{i}| = {} exceeds γq²n^(1−max(1,i)/q) = {bound:.2}",
                p.kernels[i].len()
            )));
        }
        // An empty daisy never votes, so its kernel need not be enumerated.
        if p.daisies[i].is_empty() {
            continue;
        }
        let assignments = f64::from(a.size()).powi(p.kernels[i].len() as i32);
        if assignments > config.budget as f64 {
            return Err(Error::Budget {
                j: i,
                kernel: p.kernels[i].len(),
                assignments,
                budget: config.budget,
            });
        }
    }
    Ok(())
}

/// Instrumentation shared across runs.
#[derive(Debug, Default)]
pub struct Counters {
    pub sampling_steps: AtomicU64,
    pub enumerations: AtomicU64,
}

impl Counters {
    pub fn sampling_steps(&self) -> u64 {
        self.sampling_steps.load(Ordering::Relaxed)
    }

    pub fn enumerations(&self) -> u64 {
        self.enumerations.load(Ordering::Relaxed)
    }
}

/// The sampled coordinate set Q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleView {
    pub coords: Vec<usize>,
    pub mask: Vec<bool>,
    pub aborted: bool,
}

impl SampleView {
    pub fn draw(n: usize, p: f64, cap: f64, seed: u64, counters: &Counters) -> Self {
        counters.sampling_steps.fetch_add(1, Ordering::Relaxed);
        let mut rng = stream(seed, Purpose::Sampling, 0);
        let mask: Vec<bool> = (0..n).map(|_| rng.random_bool(p.clamp(0.0, 1.0))).collect();
        Self::from_mask(mask, cap)
    }

    pub fn from_mask(mask: Vec<bool>, cap: f64) -> Self {
        let coords: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let aborted = coords.len() as f64 >= cap && !coords.is_empty();
        SampleView {
            coords,
            mask,
            aborted,
        }
    }

    pub fn full(n: usize) -> Self {
        Self::from_mask(vec![true; n], 2.0 * n as f64)
    }
}

/// Q and the abort flag for a seeded sampling step.
pub fn sample_coords(n: usize, p: f64, seed: u64) -> (Vec<usize>, bool) {
    let v = SampleView::draw(n, p, 2.0 * p * n as f64, seed, &Counters::default());
    (v.coords, v.aborted)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub side: Out,
    pub j: usize,
    pub kappa: Word,
    pub votes: u64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub z: usize,
    pub seed: u64,
    pub output: Out,
    pub aborted: bool,
    pub sample: Vec<usize>,
    /// Threshold crossings that decided the output, one per crossing side.
    pub triggers: Vec<Trigger>,
}

/// Kernel pattern of a surviving tuple: (position in K_j, symbol) pairs,
/// plus its petal coordinate when j = 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Pattern {
    fixed: Vec<(usize, u8)>,
    petal: Option<usize>,
}

/// Survivors of D_j under (Q, x): petal inside Q and consistent with x,
/// grouped by kernel pattern.
fn survivors(side: &Side, j: usize, view: &SampleView, x: &Word) -> Vec<(Pattern, u64)> {
    let p = &side.partition;
    let kernel = &p.kernels[j];
    let mut groups: BTreeMap<Pattern, u64> = BTreeMap::new();
    'member: for &m in &p.daisies[j] {
        let t = &side.tuples[m];
        let mut fixed = Vec::new();
        let mut petal = None;
        for (&c, &v) in t.set.iter().zip(&t.values) {
            match kernel.binary_search(&c) {
                Ok(pos) => fixed.push((pos, v)),
                Err(_) => {
                    if !view.mask[c] || x.get(c) != v {
                        continue 'member;
                    }
                    petal = Some(c);
                }
            }
        }
        let key = Pattern {
            fixed,
            petal: if j == 1 { petal } else { None },
        };
        *groups.entry(key).or_default() += 1;
    }
    groups.into_iter().collect()
}

fn votes(groups: &[(Pattern, u64)], kappa: &[u8], alpha: Option<f64>) -> u64 {
    let matching = groups
        .iter()
        .filter(|(pat, _)| pat.fixed.iter().all(|&(pos, v)| kappa[pos] == v));
    match alpha {
        Some(a) if groups.iter().any(|(pat, _)| pat.petal.is_some()) => {
            let mut by_petal: BTreeMap<usize, u64> = BTreeMap::new();
            for (pat, c) in matching {
                *by_petal
                    .entry(pat.petal.expect("j = 1 patterns carry a petal"))
                    .or_default() += c;
            }
            by_petal.values().filter(|&&c| (c as f64) < a).sum()
        }
        _ => matching.map(|(_, c)| c).sum(),
    }
}

/// v_j for one kernel assignment κ, as the enumeration computes it.
pub fn count_votes(
    pre: &PreparedSampler,
    z: usize,
    b: Out,
    j: usize,
    kappa: &[u8],
    view: &SampleView,
    x: &Word,
) -> Result<u64> {
    x.check(pre.n, pre.alphabet)?;
    if j == 0 || j > pre.q {
        return Err(Error::structural(format!(
            "daisy index {j} outside 1..={}",
            pre.q
        )));
    }
    let side = pre.for_z(z)?.side(b)?;
    let k = side.partition.kernels[j].len();
    if kappa.len() != k {
        return Err(Error::structural(format!(
            "assignment has {} symbols for a kernel of size {k}",
            kappa.len()
        )));
    }
    let alpha = if j == 1 { pre.config.alpha } else { None };
    Ok(votes(&survivors(side, j, view, x), kappa, alpha))
}

/// First (j, κ) in enumeration order whose count reaches τ_j.
fn enumerate(
    pre: &PreparedSampler,
    zs: &ZSampler,
    side: &Side,
    view: &SampleView,
    x: &Word,
) -> Option<Trigger> {
    let a = pre.alphabet;
    for j in 1..=pre.q {
        if side.partition.daisies[j].is_empty() {
            continue;
        }
        let groups = survivors(side, j, view, x);
        let tau = zs.thresholds[j - 1];
        let total: u64 = groups.iter().map(|(_, c)| c).sum();
        if (total as f64) < tau {
            continue;
        }
        let k = side.partition.kernels[j].len();
        let count = u64::from(a.size()).pow(k as u32);
        let alpha = if j == 1 { pre.config.alpha } else { None };
        let hit = par::find_first(count, |idx| {
            let kappa = Word::from_index(idx, k, a);
            votes(&groups, &kappa.0, alpha) as f64 >= tau
        });
        if let Some(idx) = hit {
            let kappa = Word::from_index(idx, k, a);
            return Some(Trigger {
                side: side.out,
                j,
                votes: votes(&groups, &kappa.0, alpha),
                kappa,
                threshold: tau,
            });
        }
    }
    None
}

/// The enumeration stage for one explicit input on a fixed sample.
pub fn decide(
    pre: &PreparedSampler,
    z: usize,
    x: &Word,
    view: &SampleView,
    counters: &Counters,
) -> Result<(Out, Vec<Trigger>)> {
    x.check(pre.n, pre.alphabet)?;
    let zs = pre.for_z(z)?;
    counters.enumerations.fetch_add(1, Ordering::Relaxed);
    if !pre.relaxed {
        if view.aborted {
            return Ok((Out::Zero, Vec::new()));
        }
        let t = enumerate(pre, zs, zs.side(Out::One)?, view, x);
        let out = if t.is_some() { Out::One } else { Out::Zero };
        return Ok((out, t.into_iter().collect()));
    }
    if view.aborted {
        return Ok((Out::Bot, Vec::new()));
    }
    let crossed: Vec<Trigger> = zs
        .sides
        .iter()
        .filter_map(|s| enumerate(pre, zs, s, view, x))
        .collect();
    let out = match crossed.as_slice() {
        [only] => only.side,
        _ => Out::Bot,
    };
    Ok((out, crossed))
}

fn result(
    z: usize,
    seed: u64,
    view: &SampleView,
    (output, triggers): (Out, Vec<Trigger>),
) -> RunResult {
    RunResult {
        z,
        seed,
        output,
        aborted: view.aborted,
        sample: view.coords.clone(),
        triggers,
    }
}

/// One full run: sampling, then enumeration. Relaxed samplers run both
/// sides on the shared sample.
pub fn run(pre: &PreparedSampler, z: usize, x: &Word, seed: u64) -> Result<RunResult> {
    let counters = Counters::default();
    let view = SampleView::draw(pre.n, pre.config.p, pre.config.cap, seed, &counters);
    Ok(result(z, seed, &view, decide(pre, z, x, &view, &counters)?))
}

pub fn run_sample_based(pre: &PreparedSampler, z: usize, x: &Word, seed: u64) -> Result<RunResult> {
    if pre.relaxed {
        return Err(Error::precondition(
            "run_sample_based needs a standard sampler",
        ));
    }
    run(pre, z, x, seed)
}

pub fn run_relaxed(pre: &PreparedSampler, z: usize, x: &Word, seed: u64) -> Result<RunResult> {
    if !pre.relaxed {
        return Err(Error::precondition("run_relaxed needs a relaxed sampler"));
    }
    run(pre, z, x, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalDecode {
    pub seed: u64,
    pub outputs: Vec<Out>,
    pub aborted: bool,
    pub sample: Vec<usize>,
}

/// Decode every explicit input from one sample.
pub fn global_decode(
    pre: &PreparedSampler,
    w: &Word,
    seed: u64,
    counters: &Counters,
) -> Result<GlobalDecode> {
    if !pre.relaxed {
        return Err(Error::precondition(
            "global decoding needs a relaxed sampler",
        ));
    }
    let view = SampleView::draw(pre.n, pre.config.p, pre.config.cap, seed, counters);
    let outputs = (0..pre.per_z.len())
        .map(|z| decide(pre, z, w, &view, counters).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(GlobalDecode {
        seed,
        outputs,
        aborted: view.aborted,
        sample: view.coords,
    })
}

/// Run several samplers (with their explicit inputs) on one sample.
pub fn shared_sample_multirun(
    pres: &[&PreparedSampler],
    zs: &[usize],
    x: &Word,
    seed: u64,
    counters: &Counters,
) -> Result<Vec<RunResult>> {
    let first = pres
        .first()
        .ok_or_else(|| Error::structural("no samplers given"))?;
    if pres.len() != zs.len() {
        return Err(Error::structural("one explicit input per sampler"));
    }
    if let Some(bad) = pres.iter().find(|p| {
        p.n != first.n
            || p.alphabet != first.alphabet
            || p.config.p != first.config.p
            || p.config.cap != first.config.cap
    }) {
        return Err(Error::structural(format!(
            "samplers disagree on (n, |Σ|, p, cap): ({}, {}, {}, {}) vs ({}, {}, {}, {})",
            first.n,
            first.alphabet.size(),
            first.config.p,
            first.config.cap,
            bad.n,
            bad.alphabet.size(),
            bad.config.p,
            bad.config.cap
        )));
    }
    let view = SampleView::draw(first.n, first.config.p, first.config.cap, seed, counters);
    pres.iter()
        .zip(zs)
        .map(|(pre, &z)| Ok(result(z, seed, &view, decide(pre, z, x, &view, counters)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{all_words, normalize, Label, Node, Prob, Rule};

    fn spec(n: usize) -> ProblemSpec {
        ProblemSpec::new(n, Alphabet::BINARY, 1, Rule::Constant { value: Label::One }).unwrap()
    }

    fn constant(n: usize, q: usize, out: Out) -> LocalAlgorithm {
        let s = Prob::new(1, 3);
        let a =
            LocalAlgorithm::new(spec(n), q, s, s, s, vec![vec![Node::constant(out); 4]]).unwrap();
        normalize(&a).unwrap()
    }

    #[test]
    fn formulas() {
        assert!((gamma(Alphabet::BINARY, 2) - 192.0 * 2f64.ln()).abs() < 1e-9);
        let t = thresholds(1064, 2, 1.0);
        assert_eq!(t, vec![133.0, 133.0]);
        let a = alpha(Alphabet::BINARY, 0.25, 1.0 / 16.0).unwrap();
        assert_eq!(a.round(), 532.0);
        assert_eq!(alpha(Alphabet::BINARY, 0.0, 0.1), None);
        assert!(sampling_probability(gamma(Alphabet::BINARY, 2), 16, 2) > 1.0);
    }

    #[test]
    fn constant_zero_has_no_tuples() {
        let pre = preprocess(&constant(4, 2, Out::Zero), &SamplerOptions::default()).unwrap();
        let side = pre.for_z(0).unwrap().side(Out::One).unwrap();
        assert!(side.tuples.is_empty());
        assert!(side.partition.daisies.iter().all(Vec::is_empty));
        for x in all_words(4, Alphabet::BINARY) {
            for seed in 0..5 {
                assert_eq!(
                    run_sample_based(&pre, 0, &x, seed).unwrap().output,
                    Out::Zero
                );
            }
        }
    }

    #[test]
    fn constant_one_outputs_one() {
        // q = 1: each of the 4 padded trees reads x_0, giving tuples
        // ({0}, a) for both a; d_0 = 8 < h(1) = 16 keeps K_1 empty.
        let pre = preprocess(&constant(16, 1, Out::One), &SamplerOptions::default()).unwrap();
        assert!(pre.config.clamped);
        assert_eq!(pre.config.p, 1.0);
        for x in [Word::zeros(16), Word(vec![1; 16])] {
            let r = run_sample_based(&pre, 0, &x, 3).unwrap();
            assert_eq!(r.output, Out::One);
            assert_eq!(r.triggers[0].j, 1);
            assert!(r.triggers[0].votes as f64 >= r.triggers[0].threshold);
        }
    }

    #[test]
    fn sampling_edge_cases() {
        let (q, aborted) = sample_coords(10, 1.0, 9);
        assert_eq!(q, (0..10).collect::<Vec<_>>());
        assert!(!aborted);
        let (q, aborted) = sample_coords(10, 1e-12, 9);
        assert!(q.is_empty() && !aborted);
        assert_eq!(sample_coords(50, 0.3, 4), sample_coords(50, 0.3, 4));
    }

    #[test]
    fn abort_frequency_is_tiny() {
        let aborts = (0..10_000)
            .filter(|&s| sample_coords(1000, 0.1, s).1)
            .count();
        assert!(aborts < 10, "{aborts} aborts");
    }

    fn read(c: usize, kids: [Node; 2]) -> Node {
        let [a, b] = kids;
        Node::query(c, vec![a, b])
    }

    /// n = 16, q = 2 (h(1) = 4): `heavy` copies of a tree reading 0 then 1
    /// and outputting 1, plus `light` copies of a tree that outputs 1 only on
    /// x_0 = 0, x_5 = 1. Coordinates 0 and 1 become kernel; {5} is a petal.
    fn heavy_and_light(heavy: usize, light: usize) -> LocalAlgorithm {
        let one = || Node::leaf(Out::One);
        let zero = || Node::leaf(Out::Zero);
        let h = read(0, [read(1, [one(), one()]), read(1, [one(), one()])]);
        let l = read(0, [read(5, [zero(), one()]), read(5, [zero(), zero()])]);
        let mut trees = vec![h; heavy];
        trees.extend(std::iter::repeat_n(l, light));
        let s = Prob::new(1, 3);
        LocalAlgorithm::new(spec(16), 2, s, s, s, vec![trees]).unwrap()
    }

    #[test]
    fn capping_drops_heavy_petals() {
        let mut pre = preprocess(&heavy_and_light(2, 3), &SamplerOptions::default()).unwrap();
        let side = pre.for_z(0).unwrap().side(Out::One).unwrap();
        assert_eq!(side.partition.kernels[1], vec![0, 1]);
        assert_eq!(side.partition.daisies[1].len(), 3);
        let mut x = Word::zeros(16);
        x.0[5] = 1;
        let view = SampleView::full(16);
        pre.config.alpha = None;
        assert_eq!(
            count_votes(&pre, 0, Out::One, 1, &[0, 0], &view, &x).unwrap(),
            3
        );
        assert_eq!(
            count_votes(&pre, 0, Out::One, 1, &[1, 0], &view, &x).unwrap(),
            0
        );
        pre.config.alpha = Some(2.0);
        assert_eq!(
            count_votes(&pre, 0, Out::One, 1, &[0, 0], &view, &x).unwrap(),
            0
        );
        pre.config.alpha = Some(4.0);
        assert_eq!(
            count_votes(&pre, 0, Out::One, 1, &[0, 0], &view, &x).unwrap(),
            3
        );
        assert!(count_votes(&pre, 0, Out::One, 1, &[0], &view, &x).is_err());
        // Coordinate 5 unsampled: nothing survives.
        let mut mask = vec![true; 16];
        mask[5] = false;
        let partial = SampleView::from_mask(mask, 32.0);
        assert_eq!(
            count_votes(&pre, 0, Out::One, 1, &[0, 0], &partial, &x).unwrap(),
            0
        );
    }

    #[test]
    fn budget_is_enforced() {
        let opts = SamplerOptions {
            budget: Some(3),
            ..SamplerOptions::default()
        };
        let err = preprocess(&heavy_and_light(2, 1), &opts).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Budget {
                    j: 1,
                    kernel: 2,
                    budget: 3,
                    ..
                }
            ),
            "{err:?}"
        );
        // Only padded constants: every set lands in D_0, nothing to enumerate.
        let s = Prob::new(1, 3);
        let c = LocalAlgorithm::new(
            spec(16),
            2,
            s,
            s,
            s,
            vec![vec![Node::constant(Out::One); 3]],
        )
        .unwrap();
        let pre = preprocess(&normalize(&c).unwrap(), &opts).unwrap();
        assert_eq!(pre.per_z[0].sides[0].partition.daisies[0].len(), 12);
    }

    #[test]
    fn overrides_are_flagged() {
        let a = constant(8, 2, Out::One);
        let c = SamplerConfig::new(
            &a,
            &SamplerOptions {
                override_p: Some(0.5),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(c.overridden && !c.clamped);
        assert_eq!(c.p, 0.5);
        assert_eq!(c.cap, 8.0);
        let c = SamplerConfig::new(
            &a,
            &SamplerOptions {
                override_cap: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(c.overridden && c.cap == 1.0);
        assert!(SamplerConfig::new(
            &a,
            &SamplerOptions {
                override_p: Some(1.5),
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn relaxed_with_no_tuples_is_bot() {
        let spec = ProblemSpec::new(
            4,
            Alphabet::BINARY,
            1,
            Rule::Relaxed {
                code: crate::model::Code::Repetition { k: 1, r: 4 },
            },
        )
        .unwrap();
        let s = Prob::new(1, 3);
        let a = normalize(
            &LocalAlgorithm::new(spec, 1, s, s, s, vec![vec![Node::constant(Out::Bot)]]).unwrap(),
        )
        .unwrap();
        let pre = preprocess(&a, &SamplerOptions::default()).unwrap();
        assert_eq!(pre.per_z[0].sides.len(), 2);
        for x in all_words(4, Alphabet::BINARY) {
            assert_eq!(run_relaxed(&pre, 0, &x, 1).unwrap().output, Out::Bot);
        }
        assert!(run_sample_based(&pre, 0, &Word::zeros(4), 1).is_err());
    }

    #[test]
    fn shared_sampling_checks_parameters() {
        let a = preprocess(&constant(8, 2, Out::One), &SamplerOptions::default()).unwrap();
        let b = preprocess(&constant(6, 2, Out::One), &SamplerOptions::default()).unwrap();
        let counters = Counters::default();
        assert!(shared_sample_multirun(&[&a, &b], &[0, 0], &Word::zeros(8), 1, &counters).is_err());
        let runs =
            shared_sample_multirun(&[&a, &a], &[0, 0], &Word::zeros(8), 1, &counters).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(counters.sampling_steps(), 1);
        let single = run_sample_based(&a, 0, &Word::zeros(8), 1).unwrap();
        assert_eq!(runs[0], single);
    }
}
