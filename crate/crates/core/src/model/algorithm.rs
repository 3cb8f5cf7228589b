use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{eval_tree, DescriptionTuple, Node};
use super::{Alphabet, Out, Prob, ProblemSpec, Word};
use crate::error::{Error, Result};

/// A q-local algorithm: for each explicit input z, a uniform multi-collection
/// of decision trees (multiplicity preserved, index = random-string id).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalAlgorithm {
    pub q: usize,
    pub sigma: Prob,
    pub rho0: Prob,
    pub rho1: Prob,
    pub spec: ProblemSpec,
    pub trees: Vec<Vec<Node>>,
}

impl LocalAlgorithm {
    pub fn new(
        spec: ProblemSpec,
        q: usize,
        sigma: Prob,
        rho0: Prob,
        rho1: Prob,
        trees: Vec<Vec<Node>>,
    ) -> Result<Self> {
        let alg = LocalAlgorithm {
            q,
            sigma,
            rho0,
            rho1,
            spec,
            trees,
        };
        alg.validate()?;
        Ok(alg)
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn alphabet(&self) -> Alphabet {
        self.spec.alphabet
    }

    pub fn relaxed(&self) -> bool {
        self.spec.relaxed()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees.len() != self.spec.z_count {
            return Err(Error::structural(format!(
                "{} tree collections for {} explicit inputs",
                self.trees.len(),
                self.spec.z_count
            )));
        }
        let one = Prob::from_integer(1);
        if self.sigma > one || self.rho0 > one || self.rho1 > one {
            return Err(Error::structural("σ and radii must lie in [0, 1]"));
        }
        for tree in self.trees.iter().flatten() {
            tree.validate(self.n(), self.alphabet(), self.q, self.relaxed())?;
        }
        Ok(())
    }

    pub fn trees_for(&self, z: usize) -> Result<&[Node]> {
        let trees = self.trees.get(z).ok_or_else(|| {
            Error::structural(format!(
                "explicit input {z} out of range ({} inputs)",
                self.trees.len()
            ))
        })?;
        if trees.is_empty() {
            return Err(Error::structural(format!(
                "no trees for explicit input {z}"
            )));
        }
        Ok(trees)
    }

    /// |μ̃| for explicit input z.
    pub fn support_size(&self, z: usize) -> usize {
        self.trees.get(z).map_or(0, Vec::len)
    }

    pub fn is_normalized(&self) -> bool {
        self.trees.iter().flatten().all(|t| t.is_normal(self.q))
    }

    /// The ρ used by the capping parameter: the larger declared radius.
    pub fn robust_radius(&self) -> Prob {
        self.rho0.max(self.rho1)
    }
}

/// Draw one tree uniformly (seeded) and evaluate it on x.
pub fn run_algorithm(alg: &LocalAlgorithm, z: usize, x: &Word, seed: u64) -> Result<Out> {
    let trees = alg.trees_for(z)?;
    x.check(alg.n(), alg.alphabet())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = rng.random_range(0..trees.len());
    Ok(eval_tree(&trees[s], x)?.out)
}

/// Rewrite every tree so each branch makes exactly q distinct queries.
/// Repeated queries follow the symbol already read; short branches are
/// padded with the smallest unused coordinates, whose answers are ignored.
pub fn normalize(alg: &LocalAlgorithm) -> Result<LocalAlgorithm> {
    alg.validate()?;
    let (n, q) = (alg.n(), alg.q);
    if q > n {
        return Err(Error::structural(format!(
            "cannot pad to q = {q} distinct queries with n = {n}"
        )));
    }
    let size = alg.alphabet().size();
    let mut known = Vec::with_capacity(q);
    let trees = alg
        .trees
        .iter()
        .map(|col| {
            col.iter()
                .map(|t| normalize_node(t, &mut known, q, n, size))
                .collect()
        })
        .collect();
    Ok(LocalAlgorithm {
        trees,
        ..alg.clone()
    })
}

fn normalize_node(node: &Node, known: &mut Vec<(usize, u8)>, q: usize, n: usize, size: u8) -> Node {
    match node {
        Node::Query { query, children } => {
            if let Some(&(_, v)) = known.iter().find(|(c, _)| c == query) {
                return normalize_node(&children[v as usize], known, q, n, size);
            }
            let kids = (0..size)
                .map(|s| {
                    known.push((*query, s));
                    let k = normalize_node(&children[s as usize], known, q, n, size);
                    known.pop();
                    k
                })
                .collect();
            Node::query(*query, kids)
        }
        Node::Leaf { leaf } => pad(*leaf, known, q, n, size),
    }
}

fn pad(out: Out, known: &mut Vec<(usize, u8)>, q: usize, n: usize, size: u8) -> Node {
    if known.len() >= q {
        return Node::leaf(out);
    }
    let fresh = (0..n)
        .find(|c| !known.iter().any(|(k, _)| k == c))
        .expect("q ≤ n leaves a free coordinate");
    let kids = (0..size)
        .map(|s| {
            known.push((fresh, s));
            let k = pad(out, known, q, n, size);
            known.pop();
            k
        })
        .collect();
    Node::query(fresh, kids)
}

/// One description tuple per (tree, branch) for explicit input z.
pub fn extract_tuples(alg: &LocalAlgorithm, z: usize) -> Result<Vec<DescriptionTuple>> {
    let trees = alg.trees_for(z)?;
    if !trees.iter().all(|t| t.is_normal(alg.q)) {
        return Err(Error::structural(
            "extract_tuples needs a normalized algorithm",
        ));
    }
    let mut out =
        Vec::with_capacity(trees.len() * (alg.alphabet().size() as usize).pow(alg.q as u32));
    for (s, tree) in trees.iter().enumerate() {
        for (t, path) in tree.branches().into_iter().enumerate() {
            let mut pairs = path.queries;
            pairs.sort_unstable();
            out.push(DescriptionTuple {
                set: pairs.iter().map(|&(c, _)| c).collect(),
                values: pairs.iter().map(|&(_, v)| v).collect(),
                out: path.out,
                s,
                t,
            });
        }
    }
    Ok(out)
}

/// μ_x: the query set of the branch x follows, one per tree.
pub fn induced_distribution(alg: &LocalAlgorithm, z: usize, x: &Word) -> Result<Vec<Vec<usize>>> {
    alg.trees_for(z)?
        .iter()
        .map(|t| eval_tree(t, x).map(|p| p.set()))
        .collect()
}

/// x_κ: κ on `kernel`, x elsewhere.
pub fn replace(x: &Word, kernel: &[usize], kappa: &[u8]) -> Word {
    debug_assert_eq!(kernel.len(), kappa.len());
    let mut y = x.clone();
    for (&c, &v) in kernel.iter().zip(kappa) {
        y.0[c] = v;
    }
    y
}

pub fn hamming(x: &Word, y: &Word) -> usize {
    x.0.iter().zip(&y.0).filter(|(a, b)| a != b).count()
}

/// Relative Hamming distance.
pub fn distance(x: &Word, y: &Word) -> Result<Prob> {
    if x.len() != y.len() {
        return Err(Error::structural(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Ok(Prob::from_integer(0));
    }
    Ok(Prob::new(hamming(x, y) as u64, x.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::super::tree::tests::figure_tree;
    use super::super::{all_words, Label, Rule};
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn constant_spec(n: usize) -> ProblemSpec {
        ProblemSpec::new(
            n,
            Alphabet::BINARY,
            1,
            Rule::Constant {
                value: Label::Outside,
            },
        )
        .unwrap()
    }

    fn alg(n: usize, q: usize, trees: Vec<Node>) -> LocalAlgorithm {
        let third = Prob::new(1, 3);
        LocalAlgorithm::new(constant_spec(n), q, third, third, third, vec![trees]).unwrap()
    }

    fn dist(a: &LocalAlgorithm, x: &Word) -> [usize; 3] {
        let mut c = [0; 3];
        for t in &a.trees[0] {
            c[eval_tree(t, x).unwrap().out.index()] += 1;
        }
        c
    }

    #[test]
    fn constant_zero_always_zero() {
        let a = alg(3, 0, vec![Node::constant(Out::Zero)]);
        for seed in 0..20 {
            assert_eq!(run_algorithm(&a, 0, &w("101"), seed).unwrap(), Out::Zero);
        }
    }

    #[test]
    fn run_is_seeded() {
        let a = alg(
            2,
            0,
            vec![Node::constant(Out::Zero), Node::constant(Out::One)],
        );
        let x = w("00");
        let first: Vec<Out> = (0..50)
            .map(|s| run_algorithm(&a, 0, &x, s).unwrap())
            .collect();
        let again: Vec<Out> = (0..50)
            .map(|s| run_algorithm(&a, 0, &x, s).unwrap())
            .collect();
        assert_eq!(first, again);
        assert!(first.contains(&Out::Zero) && first.contains(&Out::One));
    }

    #[test]
    fn empty_collection_is_structural() {
        let mut a = alg(2, 0, vec![Node::constant(Out::Zero)]);
        a.trees[0].clear();
        assert!(matches!(
            run_algorithm(&a, 0, &w("00"), 1),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn repeated_query_collapses() {
        // Reads coordinate 1 twice; the inner read must follow the outer value.
        let inner0 = Node::query(1, vec![Node::leaf(Out::Zero), Node::leaf(Out::One)]);
        let inner1 = Node::query(1, vec![Node::leaf(Out::One), Node::leaf(Out::Zero)]);
        let a = alg(4, 2, vec![Node::query(1, vec![inner0, inner1])]);
        let na = normalize(&a).unwrap();
        assert!(na.is_normalized());
        for x in all_words(4, Alphabet::BINARY) {
            assert_eq!(dist(&a, &x), dist(&na, &x));
        }
    }

    #[test]
    fn constant_tree_is_padded() {
        let a = alg(5, 2, vec![Node::constant(Out::One)]);
        let na = normalize(&a).unwrap();
        assert_eq!(na.trees[0][0].depth(), 2);
        assert!(na.trees[0][0].branches().iter().all(|p| p.out == Out::One));
        assert_eq!(na.trees[0][0].branches()[0].set(), vec![0, 1]);
    }

    #[test]
    fn padding_impossible_when_q_exceeds_n() {
        let a = alg(2, 3, vec![Node::constant(Out::One)]);
        assert!(matches!(normalize(&a), Err(Error::Structural(_))));
    }

    #[test]
    fn tuple_counts() {
        let full = Node::query(
            0,
            vec![
                Node::query(1, vec![Node::leaf(Out::Zero), Node::leaf(Out::One)]),
                Node::query(2, vec![Node::leaf(Out::One), Node::leaf(Out::One)]),
            ],
        );
        let a = alg(3, 2, vec![full]);
        let tuples = extract_tuples(&a, 0).unwrap();
        assert_eq!(tuples.len(), 4);
        assert_eq!(tuples.iter().filter(|t| t.out == Out::One).count(), 3);
        let zeros = normalize(&alg(3, 2, vec![Node::constant(Out::Zero)])).unwrap();
        assert!(extract_tuples(&zeros, 0)
            .unwrap()
            .iter()
            .all(|t| t.out != Out::One));
    }

    #[test]
    fn extract_rejects_unnormalized() {
        let a = alg(3, 2, vec![Node::constant(Out::One)]);
        assert!(extract_tuples(&a, 0).is_err());
    }

    #[test]
    fn induced_distribution_of_figure_tree() {
        let a = alg(6, 3, vec![figure_tree(); 3]);
        let mu = induced_distribution(&a, 0, &w("100000")).unwrap();
        assert_eq!(mu, vec![vec![0, 2, 4]; 3]);
    }

    #[test]
    fn replace_examples() {
        let x = w("0000");
        assert_eq!(replace(&x, &[], &[]), x);
        assert_eq!(replace(&w("0110"), &[1, 3], &[1, 0]), w("0110"));
        assert_eq!(replace(&x, &[0, 2], &[1, 1]), w("1010"));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            distance(&w("0101"), &w("0101")).unwrap(),
            Prob::from_integer(0)
        );
        assert_eq!(
            distance(&w("0000"), &w("1111")).unwrap(),
            Prob::from_integer(1)
        );
        assert_eq!(distance(&w("0101"), &w("0111")).unwrap(), Prob::new(1, 4));
        assert!(distance(&w("01"), &w("011")).is_err());
    }

    #[test]
    fn algorithm_json_roundtrip() {
        let a = alg(6, 3, vec![figure_tree()]);
        let s = serde_json::to_string(&a).unwrap();
        let back: LocalAlgorithm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }
}
