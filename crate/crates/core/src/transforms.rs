//! Error reduction, randomness reduction and the combined preparation step.
//!
//! Both reductions are materialized: the output is another explicit tree
//! multi-collection. Error reduction builds one composed tree per t-tuple of
//! original trees, so it is only feasible when |μ̃|^t is small; see
//! [`plan_preparation`] for the formula-only view.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    all_words, eval_tree, normalize, word_count, LocalAlgorithm, Node, Out, Prob, Word,
};
use crate::par;
use crate::rng::{stream, Purpose};

pub const DEFAULT_TREE_BUDGET: u64 = 1 << 16;
pub const EXHAUSTIVE_SCOPE_LIMIT: u64 = 1 << 16;

pub fn to_f64(p: Prob) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

/// t = 108·log₂(1/σ')/σ, rounded to nearest.
pub fn repetitions(sigma: f64, target: f64) -> u64 {
    (108.0 * (1.0 / target).log2() / sigma).round() as u64
}

/// Support of the derandomized collection: 3n·ln|Σ|/σ, rounded to nearest.
pub fn randomness_support(n: usize, alphabet_ln: f64, sigma: f64) -> u64 {
    (3.0 * n as f64 * alphabet_ln / sigma).round() as u64
}

/// 48·q'·n·ln|Σ|, rounded to nearest.
pub fn prepared_support(q_prime: u64, n: usize, alphabet_ln: f64) -> u64 {
    (48.0 * q_prime as f64 * n as f64 * alphabet_ln).round() as u64
}

pub fn prepared_sigma(q_prime: u64) -> Prob {
    Prob::new(1, 8 * q_prime)
}

/// Plurality with ties broken 0, then 1, then ⊥.
pub fn plurality(outs: &[Out]) -> Out {
    let mut c = [0usize; 3];
    for o in outs {
        c[o.index()] += 1;
    }
    let mut best = Out::Zero;
    for o in [Out::One, Out::Bot] {
        if c[o.index()] > c[best.index()] {
            best = o;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReduction {
    pub repetitions: u64,
    pub noop: bool,
}

/// Error reduction to `target` by plurality over t independent runs.
/// A target at or above the current σ leaves the algorithm unchanged.
pub fn error_reduce(
    alg: &LocalAlgorithm,
    target: Prob,
    tree_budget: u64,
) -> Result<(LocalAlgorithm, ErrorReduction)> {
    if alg.sigma > Prob::new(1, 3) {
        return Err(Error::precondition("error reduction needs σ ≤ 1/3"));
    }
    if target <= Prob::from_integer(0) {
        return Err(Error::precondition("target error must be positive"));
    }
    if target >= alg.sigma {
        return Ok((
            alg.clone(),
            ErrorReduction {
                repetitions: 1,
                noop: true,
            },
        ));
    }
    let t = repetitions(to_f64(alg.sigma), to_f64(target));
    let reduced = error_reduce_runs(alg, t, target, tree_budget)?;
    Ok((
        reduced,
        ErrorReduction {
            repetitions: t,
            noop: false,
        },
    ))
}

/// Plurality over exactly `t` runs, declaring `sigma` for the result. The
/// caller is responsible for the declared error; tests use small t and check
/// it against the exact distribution.
pub fn error_reduce_runs(
    alg: &LocalAlgorithm,
    t: u64,
    sigma: Prob,
    tree_budget: u64,
) -> Result<LocalAlgorithm> {
    if t == 0 {
        return Err(Error::precondition("need at least one run"));
    }
    let size = alg.alphabet().size();
    let mut trees = Vec::with_capacity(alg.trees.len());
    for (z, col) in alg.trees.iter().enumerate() {
        let m = col.len() as u64;
        let count = (m as f64).powf(t as f64);
        if count > tree_budget as f64 {
            return Err(Error::Infeasible {
                what: format!(
                    "error reduction for explicit input {z}: |μ̃|^t trees with |μ̃| = {m}, t = {t}"
                ),
                needed: count,
                budget: tree_budget,
            });
        }
        let total = m.pow(t as u32);
        let composed = par::map_range(total, |idx| {
            let mut pick = Vec::with_capacity(t as usize);
            let mut r = idx;
            for _ in 0..t {
                pick.push(&col[(r % m) as usize]);
                r /= m;
            }
            pick.reverse();
            let mut known = Vec::new();
            let mut outs = Vec::with_capacity(t as usize);
            compose(&pick, 0, pick[0], &mut known, &mut outs, size)
        });
        trees.push(composed);
    }
    let q = (alg.q as u64 * t).min(alg.n() as u64) as usize;
    LocalAlgorithm::new(alg.spec.clone(), q, sigma, alg.rho0, alg.rho1, trees)
}

enum Step<'a> {
    Done,
    Read(usize, usize, &'a [Node]),
}

/// Walk forward through trees whose next query is already known, collecting
/// leaf outputs, until an unread coordinate is needed or every tree is done.
fn advance<'a>(
    trees: &[&'a Node],
    mut i: usize,
    mut node: &'a Node,
    known: &[(usize, u8)],
    outs: &mut Vec<Out>,
) -> Step<'a> {
    loop {
        match node {
            Node::Leaf { leaf } => {
                outs.push(*leaf);
                i += 1;
                if i == trees.len() {
                    return Step::Done;
                }
                node = trees[i];
            }
            Node::Query { query, children } => match known.iter().find(|(c, _)| c == query) {
                Some(&(_, v)) => node = &children[v as usize],
                None => return Step::Read(i, *query, children),
            },
        }
    }
}

fn compose(
    trees: &[&Node],
    i: usize,
    node: &Node,
    known: &mut Vec<(usize, u8)>,
    outs: &mut Vec<Out>,
    size: u8,
) -> Node {
    let mark = outs.len();
    let result = match advance(trees, i, node, known, outs) {
        Step::Done => Node::leaf(plurality(outs)),
        Step::Read(i, c, children) => {
            let kids = (0..size)
                .map(|s| {
                    known.push((c, s));
                    let k = compose(trees, i, &children[s as usize], known, outs, size);
                    known.pop();
                    k
                })
                .collect();
            Node::query(c, kids)
        }
    };
    outs.truncate(mark);
    result
}

#[derive(Clone, Debug)]
pub struct DerandOptions {
    pub max_attempts: u32,
    /// Inputs to verify against when |Σ|ⁿ exceeds [`EXHAUSTIVE_SCOPE_LIMIT`].
    pub witnesses: Option<Vec<Word>>,
}

impl Default for DerandOptions {
    fn default() -> Self {
        DerandOptions {
            max_attempts: 32,
            witnesses: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerandReport {
    pub support: u64,
    pub exhaustive: bool,
    pub scope: u64,
    /// Attempts used per explicit input.
    pub attempts: Vec<u32>,
    /// Largest error on a majority input, per explicit input.
    pub worst_error: Vec<Prob>,
}

/// Replace each tree collection by a uniform multi-sample of size
/// 3n·ln|Σ|/σ drawn with replacement, retried until every verified input
/// that had a (1−σ)-majority keeps error at most 2σ.
pub fn randomness_reduce(
    alg: &LocalAlgorithm,
    seed: u64,
    opts: &DerandOptions,
) -> Result<(LocalAlgorithm, DerandReport)> {
    if !alg.is_normalized() {
        return Err(Error::precondition(
            "randomness reduction needs a normalized algorithm",
        ));
    }
    if alg.sigma == Prob::from_integer(0) {
        return Err(Error::precondition("randomness reduction needs σ > 0"));
    }
    let (n, a) = (alg.n(), alg.alphabet());
    let support = randomness_support(n, a.ln(), to_f64(alg.sigma));
    if support == 0 {
        return Err(Error::precondition("derived support size is zero"));
    }
    let scope: Vec<Word> = match word_count(n, a) {
        Some(c) if c <= EXHAUSTIVE_SCOPE_LIMIT => all_words(n, a).collect(),
        _ => opts.witnesses.clone().ok_or_else(|| {
            Error::precondition("input space too large to verify exhaustively; supply witnesses")
        })?,
    };
    for x in &scope {
        x.check(n, a)?;
    }
    let exhaustive = opts.witnesses.is_none();
    let allowed = (alg.sigma * 2).min(Prob::from_integer(1));
    let need = Prob::from_integer(1) - alg.sigma;

    let mut trees = Vec::with_capacity(alg.trees.len());
    let mut attempts = Vec::new();
    let mut worst_error = Vec::new();
    for z in 0..alg.trees.len() {
        let col = alg.trees_for(z)?;
        let m = col.len() as u64;
        // (input, majority label, per-tree outputs) for inputs with a majority.
        let table: Vec<(usize, Out, Vec<Out>)> = par::map_slice(&scope, |x| {
            col.iter()
                .map(|t| eval_tree(t, x).map(|p| p.out))
                .collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .enumerate()
        .map(|(i, outs)| outs.map(|o| (i, o)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|(i, outs)| {
            let ones = outs.iter().filter(|&&o| o == Out::One).count() as u64;
            let zeros = outs.iter().filter(|&&o| o == Out::Zero).count() as u64;
            [(Out::Zero, zeros), (Out::One, ones)]
                .into_iter()
                .find(|&(_, c)| Prob::new(c, m) >= need)
                .map(|(b, _)| (i, b, outs))
        })
        .collect();

        let mut worst: Option<(Prob, usize)> = None;
        let mut accepted = None;
        for attempt in 0..opts.max_attempts {
            let mut rng = stream(
                seed,
                Purpose::Derandomize,
                ((z as u64) << 32) | attempt as u64,
            );
            let picks: Vec<usize> = (0..support)
                .map(|_| rng.random_range(0..col.len()))
                .collect();
            let errors = par::map_slice(&table, |(i, b, outs)| {
                let hit = picks.iter().filter(|&&s| outs[s] == *b).count() as u64;
                (Prob::from_integer(1) - Prob::new(hit, support), *i)
            });
            let round_worst = errors.into_iter().max();
            if let Some(w) = round_worst {
                if worst.is_none_or(|cur| w.0 > cur.0) {
                    worst = Some(w);
                }
            }
            if round_worst.is_none_or(|(e, _)| e <= allowed) {
                accepted = Some((
                    attempt + 1,
                    picks,
                    round_worst.map_or(Prob::from_integer(0), |w| w.0),
                ));
                break;
            }
        }
        match accepted {
            Some((used, picks, err)) => {
                attempts.push(used);
                worst_error.push(err);
                trees.push(picks.into_iter().map(|s| col[s].clone()).collect());
            }
            None => {
                let (error, i) = worst.expect("at least one attempt ran");
                return Err(Error::Derandomization {
                    z,
                    attempts: opts.max_attempts,
                    worst: scope[i].clone(),
                    error,
                });
            }
        }
    }
    let out = LocalAlgorithm::new(alg.spec.clone(), alg.q, allowed, alg.rho0, alg.rho1, trees)?;
    Ok((
        out,
        DerandReport {
            support,
            exhaustive,
            scope: scope.len() as u64,
            attempts,
            worst_error,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreparePolicy {
    /// Materialize both reductions.
    Full,
    /// Use the normalized algorithm as is; only the plan is reported.
    Direct,
}

/// Formula-only view of preparation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparationPlan {
    pub sigma_in: Prob,
    pub q: usize,
    /// Query complexity after error reduction (t·q, before collapsing).
    pub q_prime: u64,
    pub repetitions: u64,
    pub error_reduction_noop: bool,
    pub intermediate_sigma: Prob,
    pub target_sigma: Prob,
    pub support: u64,
    /// log₂ |μ̃|^t per explicit input; the count itself overflows quickly.
    pub composed_trees_log2: Vec<f64>,
}

/// Solve q' = t(q')·q with t(q') the repetitions needed to reach 1/(16q').
pub fn plan_preparation(alg: &LocalAlgorithm) -> Result<PreparationPlan> {
    if alg.q == 0 {
        return Err(Error::precondition("preparation needs q ≥ 1"));
    }
    if alg.sigma > Prob::new(1, 3) || alg.sigma == Prob::from_integer(0) {
        return Err(Error::precondition("preparation needs 0 < σ ≤ 1/3"));
    }
    let q = alg.q as u64;
    let sigma = to_f64(alg.sigma);
    let (q_prime, t, noop) = if alg.sigma <= Prob::new(1, 16 * q) {
        (q, 1, true)
    } else {
        let mut qp = q;
        loop {
            let t = repetitions(sigma, 1.0 / (16.0 * qp as f64));
            let next = t * q;
            if next == qp {
                break (qp, t, false);
            }
            qp = next;
        }
    };
    let (intermediate, support) = if noop {
        (
            alg.sigma,
            randomness_support(alg.n(), alg.alphabet().ln(), sigma),
        )
    } else {
        (
            Prob::new(1, 16 * q_prime),
            prepared_support(q_prime, alg.n(), alg.alphabet().ln()),
        )
    };
    Ok(PreparationPlan {
        sigma_in: alg.sigma,
        q: alg.q,
        q_prime,
        repetitions: t,
        error_reduction_noop: noop,
        intermediate_sigma: intermediate,
        target_sigma: prepared_sigma(q_prime),
        support,
        composed_trees_log2: alg
            .trees
            .iter()
            .map(|c| t as f64 * (c.len() as f64).log2())
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparationReport {
    pub policy: PreparePolicy,
    pub plan: PreparationPlan,
    pub achieved_sigma: Prob,
    pub q_effective: usize,
    pub support: Vec<usize>,
    pub derandomization: Option<DerandReport>,
}

#[derive(Clone, Debug)]
pub struct PrepareOptions {
    pub policy: PreparePolicy,
    pub seed: u64,
    pub tree_budget: u64,
    pub derand: DerandOptions,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            policy: PreparePolicy::Full,
            seed: 0,
            tree_budget: DEFAULT_TREE_BUDGET,
            derand: DerandOptions::default(),
        }
    }
}

/// Normalize, reduce error to 1/(16q'), then reduce randomness. Under
/// [`PreparePolicy::Direct`] only normalization happens.
pub fn prepare(
    alg: &LocalAlgorithm,
    opts: &PrepareOptions,
) -> Result<(LocalAlgorithm, PreparationReport)> {
    let plan = plan_preparation(alg)?;
    let base = normalize(alg)?;
    if opts.policy == PreparePolicy::Direct {
        let report = PreparationReport {
            policy: PreparePolicy::Direct,
            achieved_sigma: base.sigma,
            q_effective: base.q,
            support: base.trees.iter().map(Vec::len).collect(),
            derandomization: None,
            plan,
        };
        return Ok((base, report));
    }
    let reduced = if plan.error_reduction_noop {
        base
    } else {
        let r = error_reduce_runs(
            &base,
            plan.repetitions,
            plan.intermediate_sigma,
            opts.tree_budget,
        )?;
        normalize(&r)?
    };
    let (out, derand) = randomness_reduce(&reduced, opts.seed, &opts.derand)?;
    let report = PreparationReport {
        policy: PreparePolicy::Full,
        achieved_sigma: out.sigma,
        q_effective: out.q,
        support: out.trees.iter().map(Vec::len).collect(),
        derandomization: Some(derand),
        plan,
    };
    Ok((out, report))
}
