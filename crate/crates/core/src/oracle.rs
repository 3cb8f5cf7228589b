//! Exhaustive verification oracles: exact output distributions, robustness
//! radii, the volume bound and direct spec labels.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    all_words, eval_tree, hamming, induced_distribution, word_count, Alphabet, Label,
    LocalAlgorithm, Out, Prob, ProblemSpec, Word,
};
use crate::par;

/// Exact output distribution of a uniform tree multi-collection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDist {
    pub counts: [u64; 3],
    pub total: u64,
}

impl OutputDist {
    pub fn prob(&self, o: Out) -> Prob {
        Prob::new(self.counts[o.index()], self.total)
    }

    pub fn mass(&self, outs: &[Out]) -> Prob {
        Prob::new(
            outs.iter().map(|o| self.counts[o.index()]).sum(),
            self.total,
        )
    }

    pub fn sums_to_one(&self) -> bool {
        Out::ALL.iter().map(|&o| self.prob(o)).sum::<Prob>() == Prob::from_integer(1)
    }

    /// Some b ∈ {0,1} with probability ≥ 1 − σ, if any.
    pub fn majority(&self, sigma: Prob) -> Option<Out> {
        let need = Prob::from_integer(1) - sigma;
        [Out::Zero, Out::One]
            .into_iter()
            .find(|&b| self.prob(b) >= need)
    }
}

pub fn exact_output_dist(alg: &LocalAlgorithm, z: usize, x: &Word) -> Result<OutputDist> {
    let trees = alg.trees_for(z)?;
    let mut counts = [0u64; 3];
    for t in trees {
        counts[eval_tree(t, x)?.out.index()] += 1;
    }
    Ok(OutputDist {
        counts,
        total: trees.len() as u64,
    })
}

pub fn brute_force_label(spec: &ProblemSpec, z: usize, x: &Word) -> Label {
    spec.label(z, x)
}

/// Whether `d` satisfies the output contract for label `b`. Relaxed
/// algorithms may answer ⊥ off the center.
fn contract_holds(d: &OutputDist, b: Out, sigma: Prob, relaxed: bool, at_center: bool) -> bool {
    contract_mass(d, b, relaxed, at_center) >= Prob::from_integer(1) - sigma
}

fn contract_mass(d: &OutputDist, b: Out, relaxed: bool, at_center: bool) -> Prob {
    if relaxed && !at_center {
        d.mass(&[b, Out::Bot])
    } else {
        d.prob(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub z: usize,
    pub center: Word,
    pub word: Word,
    pub expected: Out,
    pub mass: Prob,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointReport {
    pub z: usize,
    pub center: Word,
    pub label: Out,
    /// Smallest contract mass over the declared ball.
    pub worst_mass: Prob,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub exhaustive: bool,
    pub declared: [Prob; 2],
    /// Largest absolute radius per side at which every checked ball passes.
    pub certified_abs: [usize; 2],
    pub certified: [Prob; 2],
    pub centers: [usize; 2],
    pub points: Vec<PointReport>,
    pub counterexample: Option<Counterexample>,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct RobustnessOptions {
    /// Largest |Σ|ⁿ enumerated exhaustively.
    pub budget: u64,
    /// Words sampled per explicit input when over budget.
    pub samples: u64,
    pub seed: u64,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        RobustnessOptions {
            budget: 1 << 20,
            samples: 4096,
            seed: 0,
        }
    }
}

/// Check robustness: for every z and domain point x with
/// f(z, x) = b, every w within ⌊ρ_b·n⌋ of x gets mass ≥ 1 − σ on b
/// (on {b, ⊥} for relaxed algorithms away from the center).
pub fn check_robustness(
    alg: &LocalAlgorithm,
    rho0: Prob,
    rho1: Prob,
    opts: &RobustnessOptions,
) -> Result<RobustnessReport> {
    let n = alg.n();
    let alphabet = alg.alphabet();
    let relaxed = alg.relaxed();
    let radius = [floor_mul(rho0, n), floor_mul(rho1, n)];
    let total = word_count(n, alphabet).unwrap_or(u64::MAX);
    let exhaustive = total <= opts.budget;

    let mut first_bad = [n + 1; 2];
    let mut centers = [0usize; 2];
    let mut points = Vec::new();
    let mut counterexample: Option<(usize, Counterexample)> = None;

    for z in 0..alg.spec.z_count {
        let words: Vec<Word> = if exhaustive {
            all_words(n, alphabet).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ z as u64);
            (0..opts.samples)
                .map(|_| {
                    Word(
                        (0..n)
                            .map(|_| rng.random_range(0..alphabet.size()))
                            .collect(),
                    )
                })
                .collect()
        };
        let dists: Vec<OutputDist> = par::map_slice(&words, |w| {
            exact_output_dist(alg, z, w).expect("validated algorithm")
        });
        let labelled: Vec<(usize, Out)> = words
            .iter()
            .enumerate()
            .filter_map(|(i, w)| alg.spec.label(z, w).out().map(|b| (i, b)))
            .collect();

        // Per word and side: contract mass off-center and whether it fails.
        let off: [Vec<(Prob, bool)>; 2] = [Out::Zero, Out::One].map(|b| {
            dists
                .iter()
                .map(|d| {
                    let m = contract_mass(d, b, relaxed, false);
                    (m, m < Prob::from_integer(1) - alg.sigma)
                })
                .collect()
        });
        let failing: [Vec<usize>; 2] =
            [0, 1].map(|s| (0..words.len()).filter(|&i| off[s][i].1).collect());

        let per_center = par::map_slice(&labelled, |&(ci, b)| {
            let c = &words[ci];
            let side = b.index();
            let at_center = contract_mass(&dists[ci], b, relaxed, true);
            let mut worst = at_center.min(Prob::from_integer(1));
            for (wi, w) in words.iter().enumerate() {
                if wi != ci && hamming(c, w) <= radius[side] {
                    worst = worst.min(off[side][wi].0);
                }
            }
            let mut bad: Option<(usize, usize, Prob)> = None;
            if !contract_holds(&dists[ci], b, alg.sigma, relaxed, true) {
                bad = Some((0, ci, at_center));
            } else {
                for &wi in &failing[side] {
                    let d = hamming(c, &words[wi]);
                    if d > 0 && bad.is_none_or(|(bd, _, _)| d < bd) {
                        bad = Some((d, wi, off[side][wi].0));
                    }
                }
            }
            (ci, b, worst, bad)
        });

        for (ci, b, worst, bad) in per_center {
            let side = b.index();
            centers[side] += 1;
            points.push(PointReport {
                z,
                center: words[ci].clone(),
                label: b,
                worst_mass: worst,
            });
            if let Some((d, wi, mass)) = bad {
                first_bad[side] = first_bad[side].min(d);
                if d <= radius[side] && counterexample.as_ref().is_none_or(|(cd, _)| d < *cd) {
                    counterexample = Some((
                        d,
                        Counterexample {
                            z,
                            center: words[ci].clone(),
                            word: words[wi].clone(),
                            expected: b,
                            mass,
                        },
                    ));
                }
            }
        }
    }

    let certified_abs = [
        first_bad[0].saturating_sub(1).min(n),
        first_bad[1].saturating_sub(1).min(n),
    ];
    let nn = n.max(1) as u64;
    Ok(RobustnessReport {
        exhaustive,
        declared: [rho0, rho1],
        certified_abs,
        certified: [
            Prob::new(certified_abs[0] as u64, nn),
            Prob::new(certified_abs[1] as u64, nn),
        ],
        centers,
        points,
        holds: counterexample.is_none(),
        counterexample: counterexample.map(|(_, c)| c),
    })
}

/// ⌊ρ·n⌋.
pub fn floor_mul(rho: Prob, n: usize) -> usize {
    (rho * Prob::from_integer(n as u64)).to_integer() as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub exhaustive: bool,
    /// Distinct sets in supp(μ_x).
    pub distinct_sets: usize,
    /// Sub-collections must cover strictly fewer than ρn coordinates.
    pub rho: Prob,
    pub max_weight: Prob,
    pub bound: Prob,
    pub heaviest: Vec<Vec<usize>>,
    pub holds: bool,
}

/// Every word within Hamming distance r of `center`.
pub fn ball(center: &Word, r: usize, alphabet: Alphabet) -> Vec<Word> {
    fn grow(
        w: &mut Word,
        from: usize,
        left: usize,
        alphabet: Alphabet,
        out: &mut Vec<Word>,
        orig: &Word,
    ) {
        out.push(w.clone());
        if left == 0 {
            return;
        }
        for i in from..w.len() {
            for a in (0..alphabet.size()).filter(|&a| a != orig.get(i)) {
                w.0[i] = a;
                grow(w, i + 1, left - 1, alphabet, out, orig);
            }
            w.0[i] = orig.get(i);
        }
    }
    let mut out = Vec::new();
    grow(&mut center.clone(), 0, r, alphabet, &mut out, center);
    out
}

/// Largest support handled by exhaustive sub-collection search.
pub const VOLUME_EXHAUSTIVE_LIMIT: usize = 12;

/// Search sub-collections of supp(μ_x) covering fewer than ρn coordinates
/// for one with μ_x-weight above 2σ, where ρ is the radius of the witness y.
pub fn check_volume_lemma(
    alg: &LocalAlgorithm,
    z: usize,
    x: &Word,
    y: &Word,
) -> Result<VolumeReport> {
    let n = alg.n();
    let fx = alg.spec.label(z, x).out();
    let fy = alg.spec.label(z, y).out();
    let (Some(fx), Some(fy)) = (fx, fy) else {
        return Err(Error::precondition("x and y must both lie in the domain"));
    };
    if fx == fy {
        return Err(Error::precondition("witness y must have f(y) ≠ f(x)"));
    }
    let rho = if fy == Out::Zero { alg.rho0 } else { alg.rho1 };
    let r = floor_mul(rho, n);
    for w in ball(y, r, alg.alphabet()) {
        let d = exact_output_dist(alg, z, &w)?;
        if !contract_holds(&d, fy, alg.sigma, alg.relaxed(), w == *y) {
            return Err(Error::precondition(format!(
                "witness {y} is not robust: {w} breaks the contract"
            )));
        }
    }

    let mu = induced_distribution(alg, z, x)?;
    let total = mu.len() as u64;
    let mut support: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for s in mu {
        *support.entry(s).or_default() += 1;
    }
    let sets: Vec<(Vec<usize>, u64)> = support.into_iter().collect();
    // |∪| < ρn  ⇔  |∪|·den < num·n
    let fits = |cover: usize| (cover as u64) * *rho.denom() < *rho.numer() * n as u64;

    let exhaustive = sets.len() <= VOLUME_EXHAUSTIVE_LIMIT;
    let (best_weight, best_pick) = if exhaustive {
        exhaustive_heaviest(&sets, &fits)
    } else {
        heuristic_heaviest(&sets, &fits, n)
    };
    let max_weight = Prob::new(best_weight, total);
    let bound = alg.sigma * Prob::from_integer(2);
    Ok(VolumeReport {
        exhaustive,
        distinct_sets: sets.len(),
        rho,
        max_weight,
        bound,
        heaviest: best_pick.into_iter().map(|i| sets[i].0.clone()).collect(),
        holds: max_weight <= bound,
    })
}

fn cover_of(sets: &[(Vec<usize>, u64)], pick: &[usize]) -> usize {
    let mut u: Vec<usize> = pick
        .iter()
        .flat_map(|&i| sets[i].0.iter().copied())
        .collect();
    u.sort_unstable();
    u.dedup();
    u.len()
}

fn exhaustive_heaviest(
    sets: &[(Vec<usize>, u64)],
    fits: &(dyn Fn(usize) -> bool + Sync),
) -> (u64, Vec<usize>) {
    let m = sets.len();
    let best = par::map_range(1u64 << m, |mask| {
        let pick: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        if !fits(cover_of(sets, &pick)) {
            return (0, Vec::new());
        }
        (pick.iter().map(|&i| sets[i].1).sum::<u64>(), pick)
    });
    best.into_iter()
        .max_by_key(|(w, _)| *w)
        .unwrap_or((0, Vec::new()))
}

/// Greedy packing by weight per newly covered coordinate, with seeded
/// random restarts. Only a lower bound on the true maximum.
fn heuristic_heaviest(
    sets: &[(Vec<usize>, u64)],
    fits: &(dyn Fn(usize) -> bool + Sync),
    n: usize,
) -> (u64, Vec<usize>) {
    let mut best = (0u64, Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let mut order: Vec<usize> = (0..sets.len()).collect();
    for round in 0..64 {
        if round == 0 {
            order.sort_by_key(|&i| (std::cmp::Reverse(sets[i].1), sets[i].0.len()));
        } else {
            order.shuffle(&mut rng);
        }
        let mut pick = Vec::new();
        for &i in &order {
            pick.push(i);
            if !fits(cover_of(sets, &pick)) {
                pick.pop();
            }
        }
        let w: u64 = pick.iter().map(|&i| sets[i].1).sum();
        if w > best.0 {
            best = (w, pick);
        }
    }
    best
}
