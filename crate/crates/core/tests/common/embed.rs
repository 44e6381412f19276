//! Random graphs and dense-eigendecomposition oracles for the embeddings.

use autocas::cascade::{CascadeEdge, CascadeGraph, GlobalGraph};
use autocas::global::{randomized_tsvd, Tsvd};
use autocas::graph::CsrMatrix;
use autocas::local::{local_embed, LocalEmbedConfig, WaveletPath};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense node `u` gets user id `7u + 3`.
pub fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> CascadeGraph {
    CascadeGraph {
        users: (0..n).map(|u| (u as u64 * 7 + 3, u as f64)).collect(),
        edges: edges
            .iter()
            .map(|&(a, b)| CascadeEdge::new(a as u64 * 7 + 3, b as u64 * 7 + 3, b as f64).unwrap())
            .collect(),
        observation_time: n as f64,
    }
}

pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> CascadeGraph {
    let edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    graph_from_edges(n, &edges)
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> CascadeGraph {
    let p = rng.random_range(0.05..0.3);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    graph_from_edges(n, &edges)
}

pub fn random_global(rng: &mut ChaCha8Rng, n: u64) -> GlobalGraph {
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.random_range(0..v), v));
        if rng.random_bool(0.5) {
            pairs.push((rng.random_range(0..v), v));
        }
    }
    GlobalGraph::from_pairs(pairs)
}

pub fn local_cfg(path: WaveletPath) -> LocalEmbedConfig {
    LocalEmbedConfig {
        path,
        ..Default::default()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst coordinate gap between Chebyshev and exact local embeddings over
/// `count` random graphs and trees with at most 50 nodes.
pub fn wavelet_worst(count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let n = rng.random_range(1..=50);
        let g = if i % 2 == 0 {
            random_graph(&mut rng, n)
        } else {
            random_tree(&mut rng, n)
        };
        let exact = local_embed(&g, &local_cfg(WaveletPath::Exact)).unwrap();
        let cheb = local_embed(&g, &local_cfg(WaveletPath::Chebyshev)).unwrap();
        worst = worst.max(max_abs_diff(&exact.data, &cheb.data));
    }
    worst
}

/// Largest gap between rows of automorphic leaves.
pub fn symmetry_worst() -> f64 {
    let mut worst: f64 = 0.0;
    for path in [WaveletPath::Exact, WaveletPath::Chebyshev] {
        let g = graph_from_edges(3, &[(0, 1), (0, 2)]);
        let e = local_embed(&g, &local_cfg(path)).unwrap();
        worst = worst.max(max_abs_diff(e.row(1), e.row(2)));
        let g = graph_from_edges(6, &[(0, 1), (0, 2), (0, 3), (3, 4), (3, 5)]);
        let e = local_embed(&g, &local_cfg(path)).unwrap();
        worst = worst.max(max_abs_diff(e.row(4), e.row(5)));
        worst = worst.max(max_abs_diff(e.row(1), e.row(2)));
    }
    worst
}

fn bits(t: &Tsvd) -> Vec<u64> {
    t.u.iter().chain(t.sigma.iter()).chain(t.v.iter()).map(|x| x.to_bits()).collect()
}

/// Worst relative Frobenius error on exactly low-rank matrices with at most
/// 100 rows, and whether every repeat was bitwise identical.
pub fn tsvd_low_rank(trials: usize) -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut deterministic = true;
    for trial in 0..trials {
        let n = rng.random_range(20..=100);
        let m_cols = rng.random_range(20..=100);
        let k = rng.random_range(1..=8);
        let a = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(k, m_cols, |_, _| rng.random_range(-1.0..1.0));
        let m = &a * &b;
        let sparse = CsrMatrix::from_dense(&m);
        let p = 5.min(n.min(m_cols) - k);
        let t = randomized_tsvd(&sparse, k, p, 2, trial as u64).unwrap();
        worst = worst.max((t.reconstruct() - &m).norm() / m.norm());
        let again = randomized_tsvd(&sparse, k, p, 2, trial as u64).unwrap();
        deterministic &= bits(&t) == bits(&again);
    }
    (worst, deterministic)
}
