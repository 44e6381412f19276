use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CascadeRecord, Corpus};
use crate::{Error, Result};

/// Disjoint train/validation/test index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..len` cut by `ratios`. Validation and test sizes
/// are floored; the remainder goes to training.
pub fn split_indices(len: usize, ratios: [f64; 3], seed: u64) -> Result<Split> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Config(format!("split ratios {ratios:?} must lie in [0, 1]")));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {ratios:?} must sum to 1")));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let size = |r: f64| ((len as f64 * r) + 1e-9).floor() as usize;
    let (n_val, n_test) = (size(ratios[1]), size(ratios[2]));
    let n_train = len - n_val - n_test;
    let val = order[n_train..n_train + n_val].to_vec();
    let test = order[n_train + n_val..].to_vec();
    order.truncate(n_train);
    Ok(Split {
        train: order,
        val,
        test,
    })
}

/// Splits the records of `corpus`.
pub fn split_corpus(
    corpus: &Corpus,
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Vec<CascadeRecord>, Vec<CascadeRecord>, Vec<CascadeRecord>)> {
    let s = split_indices(corpus.len(), ratios, seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| corpus.records[i].clone()).collect();
    Ok((pick(&s.train), pick(&s.val), pick(&s.test)))
}
