//! Equitable graph coloring: a proper k-coloring whose class sizes differ by
//! at most one, for any k > Δ.
//!
//! Greedy start, then single-vertex shifts along paths in the class
//! accessibility digraph (X → Y when some vertex of X has no neighbour in Y).
//! Shifting along a path from an oversized to an undersized class keeps the
//! coloring proper and moves one unit of size. When no such path exists we
//! try a two-vertex swap, and finally restart from a shuffled greedy order.

use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Undirected simple graph as adjacency lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    pub adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(m: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); m],
        }
    }

    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::new(m);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Ignores loops and duplicates.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b && !self.adj[a].contains(&b) {
            self.adj[a].push(b);
            self.adj[b].push(a);
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn class_sizes(colors: &[usize], k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    for &c in colors {
        s[c] += 1;
    }
    s
}

pub fn is_proper(g: &Graph, colors: &[usize]) -> bool {
    g.adj
        .iter()
        .enumerate()
        .all(|(v, ns)| ns.iter().all(|&u| colors[u] != colors[v]))
}

pub fn is_equitable(g: &Graph, colors: &[usize], k: usize) -> bool {
    let s = class_sizes(colors, k);
    colors.len() == g.len()
        && colors.iter().all(|&c| c < k)
        && is_proper(g, colors)
        && s.iter().max().unwrap_or(&0) - s.iter().min().unwrap_or(&0) <= 1
}

const RESTARTS: u64 = 64;

pub fn equitable_color(g: &Graph, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k <= g.max_degree() {
        return Err(Error::precondition(format!(
            "equitable coloring needs k > Δ (k = {k}, Δ = {})",
            g.max_degree()
        )));
    }
    let m = g.len();
    let mut order: Vec<usize> = (0..m).collect();
    let step_budget = 4 * (m as u64 + k as u64);
    for attempt in 0..RESTARTS {
        if attempt > 0 {
            order.shuffle(&mut stream(0, Purpose::Coloring, attempt));
        }
        let mut st = State::greedy(g, k, &order);
        if st.rebalance(step_budget) {
            debug_assert!(is_equitable(g, &st.color, k));
            return Ok(st.color);
        }
    }
    Err(Error::ColoringBudget(RESTARTS * step_budget))
}

struct State<'g> {
    g: &'g Graph,
    k: usize,
    color: Vec<usize>,
    size: Vec<usize>,
    /// conflicts[v][c]: neighbours of v currently colored c.
    conflicts: Vec<Vec<u32>>,
}

impl<'g> State<'g> {
    fn greedy(g: &'g Graph, k: usize, order: &[usize]) -> Self {
        let m = g.len();
        let mut st = State {
            g,
            k,
            color: vec![usize::MAX; m],
            size: vec![0; k],
            conflicts: vec![vec![0; k]; m],
        };
        for &v in order {
            let c = (0..k)
                .filter(|&c| st.conflicts[v][c] == 0)
                .min_by_key(|&c| st.size[c])
                .expect("k > Δ leaves a free color");
            st.assign(v, c);
        }
        st
    }

    fn assign(&mut self, v: usize, c: usize) {
        let old = self.color[v];
        if old != usize::MAX {
            self.size[old] -= 1;
            for &u in &self.g.adj[v] {
                self.conflicts[u][old] -= 1;
            }
        }
        self.color[v] = c;
        self.size[c] += 1;
        for &u in &self.g.adj[v] {
            self.conflicts[u][c] += 1;
        }
    }

    fn spread(&self) -> (usize, usize) {
        (
            *self.size.iter().max().unwrap(),
            *self.size.iter().min().unwrap(),
        )
    }

    fn rebalance(&mut self, budget: u64) -> bool {
        for _ in 0..budget {
            let (hi, lo) = self.spread();
            if hi - lo <= 1 {
                return true;
            }
            if !self.shift(hi) && !self.swap(hi, lo) {
                return false;
            }
        }
        false
    }

    /// Some vertex of class x that could move to y.
    fn mover(&self, x: usize, y: usize) -> Option<usize> {
        (0..self.color.len()).find(|&v| self.color[v] == x && self.conflicts[v][y] == 0)
    }

    /// BFS from every maximum class; shift along a path to a class at least
    /// two smaller than the maximum.
    fn shift(&mut self, hi: usize) -> bool {
        let k = self.k;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; k];
        let mut seen: Vec<bool> = self.size.iter().map(|&s| s == hi).collect();
        let mut queue: VecDeque<usize> = (0..k).filter(|&c| seen[c]).collect();
        while let Some(x) = queue.pop_front() {
            for y in 0..k {
                if seen[y] {
                    continue;
                }
                let Some(v) = self.mover(x, y) else { continue };
                seen[y] = true;
                prev[y] = Some((x, v));
                if self.size[y] + 2 <= hi {
                    // Collect moves first: each vertex is an original member
                    // of its source class.
                    let mut moves = Vec::new();
                    let mut cur = y;
                    while let Some((from, v)) = prev[cur] {
                        moves.push((v, cur));
                        cur = from;
                    }
                    for (v, to) in moves {
                        self.assign(v, to);
                    }
                    return true;
                }
                queue.push_back(y);
            }
        }
        false
    }

    /// Move v (from a maximum class) into a small class y where it has a
    /// single neighbour u, then move u anywhere it fits except back into y.
    fn swap(&mut self, hi: usize, lo: usize) -> bool {
        let k = self.k;
        for v in 0..self.color.len() {
            let x = self.color[v];
            if self.size[x] != hi {
                continue;
            }
            for y in 0..k {
                if self.size[y] != lo || self.conflicts[v][y] != 1 {
                    continue;
                }
                let u = *self.g.adj[v].iter().find(|&&u| self.color[u] == y).unwrap();
                let target = (0..k).find(|&w| {
                    w != y && w != x && self.conflicts[u][w] == 0 && self.size[w] + 2 <= hi
                });
                if let Some(w) = target {
                    self.assign(v, y);
                    self.assign(u, w);
                    return true;
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(m: usize) -> Graph {
        let edges: Vec<_> = (0..m).map(|i| (i, (i + 1) % m)).collect();
        Graph::from_edges(m, &edges)
    }

    #[test]
    fn edgeless_five_two_colors() {
        let g = Graph::new(5);
        let c = equitable_color(&g, 2).unwrap();
        let mut s = class_sizes(&c, 2);
        s.sort();
        assert_eq!(s, vec![2, 3]);
    }

    #[test]
    fn six_cycle_three_colors() {
        let g = cycle(6);
        let c = equitable_color(&g, 3).unwrap();
        assert!(is_proper(&g, &c));
        assert_eq!(class_sizes(&c, 3), vec![2, 2, 2]);
    }

    #[test]
    fn star_with_k_equal_m() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]);
        let c = equitable_color(&g, 4).unwrap();
        assert_eq!(class_sizes(&c, 4), vec![1, 1, 1, 1]);
    }

    #[test]
    fn k_at_most_delta_is_rejected() {
        let g = cycle(5);
        assert!(matches!(
            equitable_color(&g, 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn star_needs_rebalancing() {
        let g = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let c = equitable_color(&g, 6).unwrap();
        assert!(is_equitable(&g, &c, 6));
    }

    #[test]
    fn greedy_imbalance_is_repaired() {
        // Two disjoint stars K_{1,3}: greedy by index order piles leaves up.
        let g = Graph::from_edges(8, &[(0, 1), (0, 2), (0, 3), (4, 5), (4, 6), (4, 7)]);
        let c = equitable_color(&g, 4).unwrap();
        assert!(is_equitable(&g, &c, 4));
    }
}
