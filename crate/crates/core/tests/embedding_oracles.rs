//! Local and global embeddings against dense eigendecomposition oracles.

mod common;

use autocas::cascade::{CascadeEdge, CascadeGraph, GlobalGraph};
use autocas::global::{global_embed_dense, randomized_tsvd, GlobalEmbedConfig};
use autocas::graph::{dense_filter, eig_small, normalized_laplacian, IsolatedNodes};
use autocas::local::{local_embed, WaveletPath};
use common::embed::{local_cfg as cfg, max_abs_diff, random_global, random_graph, random_tree, symmetry_worst, tsvd_low_rank, wavelet_worst};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn chebyshev_matches_exact_on_random_graphs_and_trees() {
    let worst = wavelet_worst(100);
    assert!(worst <= 1e-3, "worst coordinate difference {worst:e}");
}

#[test]
fn automorphic_leaves_are_identical() {
    assert!(symmetry_worst() <= 1e-9);
}

#[test]
fn characteristic_function_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let n = rng.random_range(2..30);
        let e = local_embed(&random_graph(&mut rng, n), &cfg(WaveletPath::Auto)).unwrap();
        for pair in e.data.chunks(2) {
            assert!(pair[0] * pair[0] + pair[1] * pair[1] <= 1.0 + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relabeling_permutes_rows(seed in 0u64..1000, n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_tree(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let relabel = |u: u64| 1000 + perm[((u - 3) / 7) as usize] as u64;
        let mut users = g.users.clone();
        users.iter_mut().for_each(|(u, _)| *u = relabel(*u));
        users.reverse();
        let h = CascadeGraph {
            users,
            edges: g.edges.iter().map(|e| CascadeEdge::new(relabel(e.parent), relabel(e.child), e.time).unwrap()).collect(),
            observation_time: g.observation_time,
        };
        let c = cfg(WaveletPath::Exact);
        let eg = local_embed(&g, &c).unwrap();
        let eh = local_embed(&h, &c).unwrap();
        for (i, &(u, _)) in g.users.iter().enumerate() {
            let row = eh.get(relabel(u)).unwrap();
            prop_assert!(max_abs_diff(eg.row(i), row) <= 1e-9);
        }
    }
}

#[test]
fn tsvd_recovers_exact_low_rank() {
    let (err, deterministic) = tsvd_low_rank(10);
    assert!(err <= 1e-8, "{err:e}");
    assert!(deterministic);
}

#[test]
fn global_rows_respect_norm_bound_and_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cfg = GlobalEmbedConfig {
        dim: 8,
        order: 20,
        ..Default::default()
    };
    let sup = (0..=2000)
        .map(|i| cfg.band_pass(2.0 * i as f64 / 2000.0))
        .fold(0.0, f64::max);
    for _ in 0..5 {
        let n = rng.random_range(30..=200);
        let g = random_global(&mut rng, n);
        let e = global_embed_dense(&g, &cfg).unwrap();
        let deg = g.adjacency().row_sums();
        let inv: Vec<f64> = deg.iter().map(|d| 1.0 / d).collect();
        let walk = g.adjacency().scale_rows(&inv);
        let dense_walk = walk.to_dense();
        let smax = dense_walk.clone().svd(false, false).singular_values.max();
        for i in 0..e.nrows() {
            assert!(e.row(i).norm() <= smax.sqrt() * sup + 1e-6);
        }
        let t = randomized_tsvd(&walk, cfg.dim, cfg.oversampling, cfg.power_iters, cfg.seed).unwrap();
        let mut base = t.u.clone();
        for j in 0..cfg.dim {
            base.column_mut(j).scale_mut(t.sigma[j].sqrt());
        }
        let lap = normalized_laplacian(g.adjacency(), IsolatedNodes::UnitDiagonal);
        let eig = eig_small(&lap, 1000).unwrap();
        let oracle = dense_filter(&eig, |x| cfg.band_pass(x)) * base;
        let err = (&e - &oracle).abs().max();
        assert!(err <= 1e-4, "propagation error {err:e}");
    }
}

#[test]
fn identical_components_embed_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let comp = random_global(&mut rng, 40);
    let cfg = GlobalEmbedConfig {
        dim: 6,
        ..Default::default()
    };
    let pairs: Vec<(u64, u64)> = comp
        .edges()
        .map(|(a, b)| (comp.ids().original(a), comp.ids().original(b)))
        .collect();
    let comp = GlobalGraph::from_pairs(pairs.iter().copied());
    let shifted = GlobalGraph::from_pairs(pairs.iter().map(|&(a, b)| (a + 1000, b + 1000)));
    let e1 = global_embed_dense(&comp, &cfg).unwrap();
    let e2 = global_embed_dense(&shifted, &cfg).unwrap();
    for (orig, dense) in comp.ids().iter() {
        let other = shifted.ids().get(orig + 1000).unwrap();
        let d = (e1.row(dense) - e2.row(other)).abs().max();
        assert!(d <= 1e-6, "{d:e}");
    }
}
