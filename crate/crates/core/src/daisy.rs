//! Daisy partitions of q-set multi-collections and their decomposition into
//! simple daisies (pairwise-disjoint petals).
//!
//! Coordinates are 0-based. h is kept real; every comparison between an
//! integer quantity and a power of n is done exactly via [`cmp_powers`].

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::coloring::{equitable_color, Graph};
use crate::error::{Error, Result};

/// h(k) = n^{max(1, k−1)/q}.
pub fn h_bound(k: usize, n: usize, q: usize) -> f64 {
    (n as f64).powf(h_exponent(k) as f64 / q as f64)
}

fn h_exponent(k: usize) -> u32 {
    k.saturating_sub(1).max(1) as u32
}

/// Compare ∏ aᵢ^xᵢ with ∏ bᵢ^yᵢ. Exact in u128 when both fit, otherwise
/// by logarithms.
pub fn cmp_powers(lhs: &[(u64, u32)], rhs: &[(u64, u32)]) -> Ordering {
    fn exact(f: &[(u64, u32)]) -> Option<u128> {
        f.iter().try_fold(1u128, |acc, &(a, x)| {
            (a as u128).checked_pow(x).and_then(|p| acc.checked_mul(p))
        })
    }
    fn log(f: &[(u64, u32)]) -> f64 {
        f.iter()
            .map(|&(a, x)| {
                if a == 0 {
                    f64::NEG_INFINITY
                } else {
                    x as f64 * (a as f64).ln()
                }
            })
            .sum()
    }
    match (exact(lhs), exact(rhs)) {
        (Some(l), Some(r)) => l.cmp(&r),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => log(lhs).partial_cmp(&log(rhs)).unwrap_or(Ordering::Equal),
    }
}

/// d ≥ h(k) for an integer d, exactly: d^q ≥ n^{max(1,k−1)}.
pub fn degree_at_least_h(d: u64, k: usize, n: usize, q: usize) -> bool {
    cmp_powers(&[(d, q as u32)], &[(n as u64, h_exponent(k))]) != Ordering::Less
}

/// d ≤ h(k), exactly.
pub fn degree_at_most_h(d: u64, k: usize, n: usize, q: usize) -> bool {
    cmp_powers(&[(d, q as u32)], &[(n as u64, h_exponent(k))]) != Ordering::Greater
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaisyPartition {
    pub n: usize,
    pub q: usize,
    /// The input multi-collection, each set sorted.
    pub sets: Vec<Vec<usize>>,
    /// d_i: number of members containing coordinate i.
    pub degrees: Vec<u64>,
    /// K_0..K_q, each sorted.
    pub kernels: Vec<Vec<usize>>,
    /// D_0..D_q as indices into `sets`.
    pub daisies: Vec<Vec<usize>>,
}

impl DaisyPartition {
    pub fn petal(&self, j: usize, member: usize) -> Vec<usize> {
        let k = &self.kernels[j];
        self.sets[member]
            .iter()
            .copied()
            .filter(|c| k.binary_search(c).is_err())
            .collect()
    }

    /// Which daisy each member landed in.
    pub fn daisy_of(&self) -> Vec<usize> {
        let mut of = vec![usize::MAX; self.sets.len()];
        for (j, d) in self.daisies.iter().enumerate() {
            for &s in d {
                of[s] = j;
            }
        }
        of
    }

    /// Disjoint cover, petal sizes, kernel chain, kernel size bound and the
    /// degree criterion for h-daisies.
    pub fn check_invariants(&self) -> Result<()> {
        let (n, q, m) = (self.n, self.q, self.sets.len());
        if self.kernels.len() != q + 1 || self.daisies.len() != q + 1 {
            return Err(Error::Invariant(format!(
                "expected {} daisies and kernels",
                q + 1
            )));
        }
        let mut seen = vec![0u32; m];
        for &s in self.daisies.iter().flatten() {
            if s >= m {
                return Err(Error::Invariant(format!("member index {s} out of range")));
            }
            seen[s] += 1;
        }
        if let Some(s) = seen.iter().position(|&c| c != 1) {
            return Err(Error::Invariant(format!(
                "member {s} appears {} times",
                seen[s]
            )));
        }
        for (j, d) in self.daisies.iter().enumerate() {
            for &s in d {
                if self.petal(j, s).len() != j {
                    return Err(Error::Invariant(format!(
                        "member {s} in D_{j} has petal {:?}",
                        self.petal(j, s)
                    )));
                }
            }
        }
        if !self.kernels[q].is_empty() {
            return Err(Error::Invariant("K_q is not empty".into()));
        }
        for j in 0..q {
            if !self.kernels[j + 1]
                .iter()
                .all(|c| self.kernels[j].binary_search(c).is_ok())
            {
                return Err(Error::Invariant(format!("K_{} ⊄ K_{j}", j + 1)));
            }
        }
        if q >= 2 && self.kernels[0] != self.kernels[1] {
            return Err(Error::Invariant("K_0 ≠ K_1".into()));
        }
        for (j, k) in self.kernels.iter().enumerate() {
            // |K_j| ≤ q·|S|·n^{−max(1,j)/q}  ⟺  |K_j|^q·n^{max(1,j)} ≤ (q·|S|)^q
            let e = j.max(1) as u32;
            let lhs = [(k.len() as u64, q as u32), (n as u64, e)];
            let rhs = [((q * m) as u64, q as u32)];
            if cmp_powers(&lhs, &rhs) == Ordering::Greater {
                return Err(Error::Invariant(format!(
                    "|K_{j}| = {} exceeds its bound",
                    k.len()
                )));
            }
        }
        for (j, d) in self.daisies.iter().enumerate() {
            for &s in d {
                let petal = self.petal(j, s);
                for k in 1..=j {
                    let light = petal
                        .iter()
                        .filter(|&&c| degree_at_most_h(self.degrees[c], k, n, q))
                        .count();
                    if light < k {
                        return Err(Error::Invariant(format!(
                            "member {s} of D_{j}: only {light} petal coordinates of degree ≤ h({k})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Greedy daisy partition.
pub fn partition(sets: &[Vec<usize>], n: usize, q: usize) -> Result<DaisyPartition> {
    let mut sorted = Vec::with_capacity(sets.len());
    for s in sets {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != q || s.iter().any(|&c| c >= n) {
            return Err(Error::structural(format!(
                "{s:?} is not a {q}-set over {n} coordinates"
            )));
        }
        sorted.push(s);
    }
    let mut degrees = vec![0u64; n];
    for &c in sorted.iter().flatten() {
        degrees[c] += 1;
    }
    let mut kernels = Vec::with_capacity(q + 1);
    let mut daisies = Vec::with_capacity(q + 1);
    let mut remaining: Vec<usize> = (0..sorted.len()).collect();
    for j in 0..q {
        let kernel: Vec<usize> = (0..n)
            .filter(|&c| degree_at_least_h(degrees[c], j + 1, n, q))
            .collect();
        let (taken, rest): (Vec<usize>, Vec<usize>) = remaining.into_iter().partition(|&s| {
            let petal = sorted[s]
                .iter()
                .filter(|c| kernel.binary_search(c).is_err())
                .count();
            debug_assert!(petal >= j, "greedy order leaves petals of size ≥ j");
            petal == j
        });
        kernels.push(kernel);
        daisies.push(taken);
        remaining = rest;
    }
    kernels.push(Vec::new());
    daisies.push(remaining);
    Ok(DaisyPartition {
        n,
        q,
        sets: sorted,
        degrees,
        kernels,
        daisies,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// Index j: largest count over members of D_j (0 when empty or j = 0).
    pub max_overlap: Vec<usize>,
    /// Index j: 2h(j) − 1.
    pub bound: Vec<f64>,
}

/// For S ∈ D_j, the members of D_j (S included) whose petals meet S \ K_j.
pub fn petal_overlaps(p: &DaisyPartition, j: usize) -> Vec<usize> {
    let d = &p.daisies[j];
    let petals: Vec<Vec<usize>> = d.iter().map(|&s| p.petal(j, s)).collect();
    let mut by_coord: Vec<Vec<usize>> = vec![Vec::new(); p.n];
    for (i, pet) in petals.iter().enumerate() {
        for &c in pet {
            by_coord[c].push(i);
        }
    }
    let mut stamp = vec![usize::MAX; d.len()];
    petals
        .iter()
        .enumerate()
        .map(|(i, pet)| {
            let mut count = 0;
            for &c in pet {
                for &o in &by_coord[c] {
                    if stamp[o] != i {
                        stamp[o] = i;
                        count += 1;
                    }
                }
            }
            count
        })
        .collect()
}

pub fn petal_overlap_bound_check(p: &DaisyPartition) -> Result<OverlapReport> {
    let (n, q) = (p.n, p.q);
    let mut max_overlap = vec![0; q + 1];
    let mut bound = vec![0.0; q + 1];
    for j in 1..=q {
        bound[j] = 2.0 * h_bound(j, n, q) - 1.0;
        let counts = petal_overlaps(p, j);
        for (i, &c) in counts.iter().enumerate() {
            // c ≤ 2h(j) − 1  ⟺  (c+1)^q ≤ 2^q·n^{max(1,j−1)}
            let lhs = [(c as u64 + 1, q as u32)];
            let rhs = [(2, q as u32), (n as u64, h_exponent(j))];
            if cmp_powers(&lhs, &rhs) == Ordering::Greater {
                return Err(Error::Invariant(format!(
                    "member {} of D_{j} ({:?}) meets {c} petals, bound {:.3}",
                    p.daisies[j][i], p.sets[p.daisies[j][i]], bound[j]
                )));
            }
            max_overlap[j] = max_overlap[j].max(c);
        }
    }
    Ok(OverlapReport { max_overlap, bound })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleDaisyFamily {
    pub parent: usize,
    /// Each class indexes into the daisy passed to [`simplify`].
    pub classes: Vec<Vec<usize>>,
}

/// Split a daisy with kernel `kernel` into t+1 simple daisies of equal size
/// up to one, given that each petal meets at most t other petals.
pub fn simplify(
    parent: usize,
    daisy: &[Vec<usize>],
    kernel: &[usize],
    t: usize,
) -> Result<SimpleDaisyFamily> {
    let petals: Vec<Vec<usize>> = daisy
        .iter()
        .map(|s| s.iter().copied().filter(|c| !kernel.contains(c)).collect())
        .collect();
    let g = petal_graph(&petals);
    if g.max_degree() > t {
        return Err(Error::precondition(format!(
            "a petal meets {} others, more than t = {t}",
            g.max_degree()
        )));
    }
    let colors = equitable_color(&g, t + 1)?;
    let mut classes = vec![Vec::new(); t + 1];
    for (v, &c) in colors.iter().enumerate() {
        classes[c].push(v);
    }
    Ok(SimpleDaisyFamily { parent, classes })
}

/// Petal-intersection graph; identical sets are distinct vertices.
pub fn petal_graph(petals: &[Vec<usize>]) -> Graph {
    let mut g = Graph::new(petals.len());
    let mut by_coord: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, p) in petals.iter().enumerate() {
        for &c in p {
            by_coord.entry(c).or_default().push(i);
        }
    }
    for members in by_coord.values() {
        for (a, &x) in members.iter().enumerate() {
            for &y in &members[a + 1..] {
                g.add_edge(x, y);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::{class_sizes, is_equitable};

    #[test]
    fn h_values() {
        assert!((h_bound(1, 64, 3) - 4.0).abs() < 1e-9);
        assert!((h_bound(2, 64, 3) - 4.0).abs() < 1e-9);
        assert!((h_bound(3, 64, 3) - 16.0).abs() < 1e-9);
        assert_eq!(h_bound(5, 1, 3), 1.0);
        assert_eq!(h_bound(1, 4, 2), 2.0);
        assert_eq!(h_bound(3, 4, 2), 4.0);
        // Exact comparison does not depend on float rounding of 64^{1/3}.
        assert!(degree_at_least_h(4, 1, 64, 3));
        assert!(!degree_at_least_h(3, 1, 64, 3));
        assert!(degree_at_most_h(16, 3, 64, 3));
    }

    #[test]
    fn shared_coordinate_becomes_kernel() {
        let p = partition(&[vec![0, 1], vec![0, 2], vec![0, 3]], 4, 2).unwrap();
        assert_eq!(p.kernels, vec![vec![0], vec![0], vec![]]);
        assert_eq!(p.daisies, vec![vec![], vec![0, 1, 2], vec![]]);
        p.check_invariants().unwrap();
        let r = petal_overlap_bound_check(&p).unwrap();
        assert_eq!(r.max_overlap[1], 1);
    }

    #[test]
    fn disjoint_pairs_stay_in_last_daisy() {
        let p = partition(&[vec![0, 1], vec![2, 3]], 4, 2).unwrap();
        assert!(p.kernels.iter().all(Vec::is_empty));
        assert_eq!(p.daisies[2], vec![0, 1]);
        p.check_invariants().unwrap();
    }

    #[test]
    fn empty_collection() {
        let p = partition(&[], 5, 3).unwrap();
        assert!(p.kernels.iter().all(Vec::is_empty));
        assert!(p.daisies.iter().all(Vec::is_empty));
        p.check_invariants().unwrap();
    }

    #[test]
    fn wrong_set_size_is_structural() {
        assert!(matches!(
            partition(&[vec![0, 1, 2]], 4, 2),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            partition(&[vec![0, 0]], 4, 2),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            partition(&[vec![0, 9]], 4, 2),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn tampered_partition_fails_check() {
        let mut p = partition(&[vec![0, 1], vec![0, 2], vec![0, 3]], 4, 2).unwrap();
        p.daisies[2].push(0);
        assert!(matches!(p.check_invariants(), Err(Error::Invariant(_))));
    }

    #[test]
    fn simple_daisy_is_one_class() {
        let d = vec![vec![0, 1], vec![0, 2], vec![0, 3]];
        let f = simplify(1, &d, &[0], 0).unwrap();
        assert_eq!(f.classes, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn shared_petal_element_gives_singletons() {
        let d = vec![vec![0, 5], vec![1, 5], vec![2, 5]];
        let f = simplify(1, &d, &[0, 1, 2], 2).unwrap();
        let mut sizes: Vec<usize> = f.classes.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 1]);
        assert!(matches!(
            simplify(1, &d, &[0, 1, 2], 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn twelve_sets_on_a_cycle() {
        // Petal i = {i, i+1 mod 12}: each meets exactly two neighbours.
        let d: Vec<Vec<usize>> = (0..12).map(|i| vec![i, (i + 1) % 12]).collect();
        let f = simplify(2, &d, &[], 2).unwrap();
        let g = petal_graph(&d);
        assert_eq!(g.max_degree(), 2);
        let mut colors = vec![0; 12];
        for (c, class) in f.classes.iter().enumerate() {
            for &v in class {
                colors[v] = c;
            }
        }
        assert!(is_equitable(&g, &colors, 3));
        assert_eq!(class_sizes(&colors, 3), vec![4, 4, 4]);
    }

    #[test]
    fn identical_sets_conflict() {
        let d = vec![vec![0, 1], vec![0, 1]];
        let g = petal_graph(&d);
        assert_eq!(g.adj[0], vec![1]);
        let f = simplify(2, &d, &[], 1).unwrap();
        assert!(f.classes.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn cmp_powers_overflow_paths() {
        assert_eq!(cmp_powers(&[(2, 200)], &[(3, 2)]), Ordering::Greater);
        assert_eq!(cmp_powers(&[(3, 2)], &[(2, 200)]), Ordering::Less);
        assert_eq!(cmp_powers(&[(2, 200)], &[(2, 201)]), Ordering::Less);
        assert_eq!(cmp_powers(&[(0, 3), (5, 1)], &[(1, 1)]), Ordering::Less);
    }
}
