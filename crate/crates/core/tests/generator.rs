//! Synthetic corpus against branching-process theory.

use autocas::cascade::{generate_synthetic_corpus, SyntheticConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Plain Galton-Watson total progeny with Poisson(r) offspring.
fn galton_watson(r: f64, rng: &mut ChaCha8Rng) -> u64 {
    let off = Poisson::new(r).unwrap();
    let (mut total, mut alive) = (1u64, 1u64);
    while alive > 0 {
        let mut next = 0;
        for _ in 0..alive {
            next += off.sample(rng) as u64;
        }
        total += next;
        alive = next;
    }
    total
}

#[test]
fn mean_progeny_matches_branching_theory() {
    let r = 0.5;
    let expected = 1.0 / (1.0 - r);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let oracle = (0..n).map(|_| galton_watson(r, &mut rng)).sum::<u64>() as f64 / n as f64;
    assert!((oracle - expected).abs() <= 0.1 * expected, "oracle mean {oracle}");

    let cfg = SyntheticConfig {
        num_cascades: n,
        graph_size: 20_000,
        branching: r,
        influence_exponent: 0.0,
        time_horizon: 1e12,
        observation_time: 1.0,
        seed: 5,
        ..Default::default()
    };
    let corpus = generate_synthetic_corpus(&cfg).unwrap();
    let mean = corpus.records.iter().map(|c| c.final_popularity.unwrap()).sum::<u64>() as f64 / n as f64;
    assert!((mean - expected).abs() <= 0.1 * expected, "generator mean {mean}");
}

#[test]
fn standard_corpus_shape() {
    let corpus = generate_synthetic_corpus(&SyntheticConfig::default()).unwrap();
    assert_eq!(corpus.len(), 2000);
    assert_eq!(corpus.meta.name, "synthetic");
    for r in &corpus.records {
        assert_eq!(r.final_popularity.unwrap() as usize, r.edges.len() + 1);
        assert!(r.edges.iter().all(|e| corpus.global.ids().get(e.child).is_some()));
        assert!(r.max_time() <= corpus.meta.prediction_time);
    }
}
