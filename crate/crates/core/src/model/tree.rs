use serde::{Deserialize, Serialize};

use super::{Alphabet, Out, Word};
use crate::error::{Error, Result};

/// A decision tree node. Children are indexed by symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf { leaf: Out },
    Query { query: usize, children: Vec<Node> },
}

pub type DecisionTree = Node;

/// One root-to-leaf walk: the queries in order and the leaf label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub queries: Vec<(usize, u8)>,
    pub out: Out,
}

impl Path {
    /// Distinct queried coordinates, sorted.
    pub fn set(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.queries.iter().map(|&(c, _)| c).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// A flattened branch (S, a_S, b, s) plus its branch index t inside tree s.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DescriptionTuple {
    pub set: Vec<usize>,
    pub values: Vec<u8>,
    pub out: Out,
    pub s: usize,
    pub t: usize,
}

impl DescriptionTuple {
    pub fn value_at(&self, coord: usize) -> Option<u8> {
        self.set.binary_search(&coord).ok().map(|i| self.values[i])
    }

    /// a_S = x|_S.
    pub fn consistent_with(&self, x: &Word) -> bool {
        self.set
            .iter()
            .zip(&self.values)
            .all(|(&c, &v)| x.0[c] == v)
    }
}

impl Node {
    pub fn leaf(out: Out) -> Self {
        Node::Leaf { leaf: out }
    }

    pub fn query(coord: usize, children: Vec<Node>) -> Self {
        Node::Query {
            query: coord,
            children,
        }
    }

    pub fn constant(out: Out) -> Self {
        Node::leaf(out)
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Query { children, .. } => 1 + children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    pub fn validate(&self, n: usize, alphabet: Alphabet, q: usize, allow_bot: bool) -> Result<()> {
        if self.depth() > q {
            return Err(Error::structural(format!(
                "tree depth {} exceeds q = {q}",
                self.depth()
            )));
        }
        self.validate_nodes(n, alphabet, allow_bot)
    }

    fn validate_nodes(&self, n: usize, alphabet: Alphabet, allow_bot: bool) -> Result<()> {
        match self {
            Node::Leaf { leaf } => {
                if *leaf == Out::Bot && !allow_bot {
                    return Err(Error::structural("leaf ⊥ in a non-relaxed algorithm"));
                }
                Ok(())
            }
            Node::Query { query, children } => {
                if *query >= n {
                    return Err(Error::structural(format!(
                        "coordinate {query} out of range for n = {n}"
                    )));
                }
                if children.len() != alphabet.size() as usize {
                    return Err(Error::structural(format!(
                        "node on coordinate {query} has {} children, alphabet has {}",
                        children.len(),
                        alphabet.size()
                    )));
                }
                children
                    .iter()
                    .try_for_each(|c| c.validate_nodes(n, alphabet, allow_bot))
            }
        }
    }

    /// Every branch in depth-first order, children visited by symbol.
    pub fn branches(&self) -> Vec<Path> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.collect_branches(&mut stack, &mut out);
        out
    }

    fn collect_branches(&self, stack: &mut Vec<(usize, u8)>, out: &mut Vec<Path>) {
        match self {
            Node::Leaf { leaf } => out.push(Path {
                queries: stack.clone(),
                out: *leaf,
            }),
            Node::Query { query, children } => {
                for (s, child) in children.iter().enumerate() {
                    stack.push((*query, s as u8));
                    child.collect_branches(stack, out);
                    stack.pop();
                }
            }
        }
    }

    /// True when every branch queries exactly `q` pairwise-distinct coordinates.
    pub fn is_normal(&self, q: usize) -> bool {
        self.branches()
            .iter()
            .all(|p| p.queries.len() == q && p.set().len() == q)
    }
}

/// Follow the unique branch consistent with `x`.
pub fn eval_tree(tree: &Node, x: &Word) -> Result<Path> {
    let mut queries = Vec::new();
    let mut node = tree;
    loop {
        match node {
            Node::Leaf { leaf } => {
                return Ok(Path {
                    queries,
                    out: *leaf,
                })
            }
            Node::Query { query, children } => {
                let sym = *x.0.get(*query).ok_or_else(|| {
                    Error::structural(format!(
                        "coordinate {query} out of range for a word of length {}",
                        x.len()
                    ))
                })?;
                let child = children.get(sym as usize).ok_or_else(|| {
                    Error::structural(format!("no child for symbol {sym} at coordinate {query}"))
                })?;
                queries.push((*query, sym));
                node = child;
            }
        }
    }
}
