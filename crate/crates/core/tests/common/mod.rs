//! Seeded random corpora shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samplebased::coloring::Graph;

/// A skewed random multi-collection of q-sets over [n]: coordinate i is
/// drawn with weight (i+1)^{−s}, and some sets are repeated.
pub fn random_collection(rng: &mut ChaCha8Rng, n: usize, q: usize, size: usize) -> Vec<Vec<usize>> {
    let s: f64 = rng.random_range(0.0..2.0);
    let weights: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-s)).collect();
    let total: f64 = weights.iter().sum();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(size);
    while out.len() < size {
        if !out.is_empty() && rng.random_bool(0.1) {
            let dup = out[rng.random_range(0..out.len())].clone();
            out.push(dup);
            continue;
        }
        let mut set = Vec::with_capacity(q);
        while set.len() < q {
            let mut r = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, w) in weights.iter().enumerate() {
                if r < *w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            let c = perm[pick];
            if !set.contains(&c) {
                set.push(c);
            }
        }
        out.push(set);
    }
    out
}

/// (n, q, collection) for corpus member `i`.
pub fn daisy_corpus_member(i: u64) -> (usize, usize, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDA15 + i);
    let n = rng.random_range(8..=64);
    let q = rng.random_range(2..=4);
    let size = rng.random_range(0..=2000);
    let sets = random_collection(&mut rng, n, q, size);
    (n, q, sets)
}

/// Random graph with m ≤ 200 vertices and maximum degree ≤ delta_max.
pub fn random_graph(seed: u64, delta_max: usize) -> (Graph, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6EA9 + seed);
    let m = rng.random_range(1..=200);
    let cap = rng.random_range(0..=delta_max);
    let mut g = Graph::new(m);
    let tries = rng.random_range(0..=m * cap.max(1));
    for _ in 0..tries {
        let a = rng.random_range(0..m);
        let b = rng.random_range(0..m);
        if a != b && g.adj[a].len() < cap && g.adj[b].len() < cap {
            g.add_edge(a, b);
        }
    }
    (g, cap)
}
