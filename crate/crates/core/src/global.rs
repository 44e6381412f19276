//! Positional user embeddings of the global context graph.
//!
//! A randomized truncated SVD of the random-walk matrix `D^{-1}A` gives a
//! base embedding `U_k Σ_k^{1/2}`, which is then smoothed by a Chebyshev
//! expansion of the band-pass filter `g(λ) = exp(-θ((λ-μ)² - 1)/2)` of the
//! normalized Laplacian.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cascade::{GlobalGraph, IdMap, UserId};
use crate::embcache::EmbeddingMatrix;
use crate::graph::{cheb_apply, cheb_fit, normalized_laplacian, CsrMatrix, IsolatedNodes, NORMALIZED_SPECTRUM};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalEmbedConfig {
    pub dim: usize,
    pub oversampling: usize,
    pub power_iters: usize,
    pub order: usize,
    pub mu: f64,
    pub theta: f64,
    pub seed: u64,
}

impl Default for GlobalEmbedConfig {
    fn default() -> Self {
        Self {
            dim: 40,
            oversampling: 10,
            power_iters: 2,
            order: 10,
            mu: 0.2,
            theta: 0.5,
            seed: 42,
        }
    }
}

impl GlobalEmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("global.dim must be >= 1".into()));
        }
        if self.order < 1 {
            return Err(Error::Config("global.order must be >= 1".into()));
        }
        Ok(())
    }

    /// The band-pass response `g(λ)`.
    pub fn band_pass(&self, lambda: f64) -> f64 {
        (-0.5 * ((lambda - self.mu).powi(2) - 1.0) * self.theta).exp()
    }
}

/// Rank-`k` factors `U diag(σ) Vᵀ`, singular values descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Tsvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Tsvd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let us = DMatrix::from_fn(self.u.nrows(), self.u.ncols(), |i, j| self.u[(i, j)] * self.sigma[j]);
        us * self.v.transpose()
    }
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Seeded randomized truncated SVD with `q` power iterations and `p`
/// oversampling columns. Each left singular vector is signed so its
/// largest-magnitude entry is positive.
pub fn randomized_tsvd(m: &CsrMatrix, k: usize, p: usize, q: usize, seed: u64) -> Result<Tsvd> {
    let (rows, cols) = (m.rows(), m.cols());
    let width = k + p;
    if k == 0 || width > rows.min(cols) {
        return Err(Error::Config(format!(
            "randomized_tsvd: k + p = {width} must be in [1, {}] for a {rows}x{cols} matrix",
            rows.min(cols)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(cols, width, |_, _| StandardNormal.sample(&mut rng));
    let mut basis = orthonormal_basis(m.mul_dense(&omega)?);
    for _ in 0..q {
        let z = orthonormal_basis(m.tr_mul_dense(&basis)?);
        basis = orthonormal_basis(m.mul_dense(&z)?);
    }
    let small = m.tr_mul_dense(&basis)?.transpose();
    let svd = small.svd(true, true);
    let (u_small, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v)) => (u, v),
        _ => return Err(Error::Numeric("randomized_tsvd: SVD did not converge".into())),
    };

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(k);

    let u_full = basis * u_small;
    let mut u = DMatrix::zeros(rows, k);
    let mut v = DMatrix::zeros(cols, k);
    let mut sigma = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let col = u_full.column(src);
        let pivot = col.iamax();
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        u.set_column(dst, &(col * sign));
        v.set_column(dst, &(v_t.row(src).transpose() * sign));
        sigma[dst] = svd.singular_values[src];
    }
    Ok(Tsvd { u, sigma, v })
}

/// Global embedding table indexed by dense id, with a lookup-miss counter.
#[derive(Debug)]
pub struct GlobalTable {
    ids: IdMap,
    matrix: EmbeddingMatrix,
    misses: AtomicUsize,
}

impl GlobalTable {
    pub fn new(ids: IdMap, matrix: EmbeddingMatrix) -> Result<Self> {
        if ids.len() != matrix.rows {
            return Err(Error::shape(
                "global_table",
                format!("{} ids for {} rows", ids.len(), matrix.rows),
            ));
        }
        Ok(Self {
            ids,
            matrix,
            misses: AtomicUsize::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        &self.matrix
    }

    pub fn ids(&self) -> &IdMap {
        &self.ids
    }

    /// Row of `user`, or zeros (counted as a miss) when unknown.
    pub fn lookup(&self, user: UserId) -> Vec<f32> {
        match self.ids.get(user) {
            Some(d) => self.matrix.row(d).to_vec(),
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                vec![0.0; self.matrix.dim]
            }
        }
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

/// Free-function form of [`GlobalTable::lookup`].
pub fn lookup_global(table: &GlobalTable, user: UserId) -> Vec<f32> {
    table.lookup(user)
}

/// Embeds every node of `g`; rows in dense-id order.
pub fn global_embed_dense(g: &GlobalGraph, cfg: &GlobalEmbedConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let n = g.node_count();
    if n == 0 {
        return Err(Error::Validation("global_embed: empty graph".into()));
    }
    let degrees = g.adjacency().row_sums();
    let inv_deg: Vec<f64> = degrees.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    let walk = g.adjacency().scale_rows(&inv_deg);

    let k = cfg.dim.min(n);
    let p = cfg.oversampling.min(n - k);
    let svd = randomized_tsvd(&walk, k, p, cfg.power_iters, cfg.seed)?;
    let mut base = DMatrix::zeros(n, cfg.dim);
    for j in 0..k {
        let s = svd.sigma[j].sqrt();
        for i in 0..n {
            base[(i, j)] = svd.u[(i, j)] * s;
        }
    }

    let lap = normalized_laplacian(g.adjacency(), IsolatedNodes::UnitDiagonal);
    let filter = cheb_fit(|x| cfg.band_pass(x), NORMALIZED_SPECTRUM, cfg.order)?;
    let mut out = cheb_apply(&filter, &lap, &base)?;
    for (i, &d) in degrees.iter().enumerate() {
        if d == 0.0 {
            out.row_mut(i).fill(0.0);
        }
    }
    Ok(out)
}

pub fn global_embed(g: &GlobalGraph, cfg: &GlobalEmbedConfig) -> Result<GlobalTable> {
    let dense = global_embed_dense(g, cfg)?;
    let (n, d) = dense.shape();
    let data = (0..n)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| dense[(i, j)] as f32)
        .collect();
    GlobalTable::new(g.ids().clone(), EmbeddingMatrix::new(n, d, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cfg(dim: usize) -> GlobalEmbedConfig {
        GlobalEmbedConfig {
            dim,
            ..Default::default()
        }
    }

    #[test]
    fn identity_singular_values() {
        let t = randomized_tsvd(&CsrMatrix::identity(5), 5, 0, 2, 1).unwrap();
        assert!(t.sigma.iter().all(|s| (s - 1.0).abs() < 1e-10));
    }

    #[test]
    fn exact_low_rank_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (n, k) = (60, 4);
        let a = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        let m = &a * &b;
        let t = randomized_tsvd(&CsrMatrix::from_dense(&m), k, 5, 2, 3).unwrap();
        assert!((t.reconstruct() - &m).norm() / m.norm() <= 1e-8);
        assert_eq!(t, randomized_tsvd(&CsrMatrix::from_dense(&m), k, 5, 2, 3).unwrap());
    }

    #[test]
    fn oversized_request_rejected() {
        assert!(randomized_tsvd(&CsrMatrix::identity(5), 4, 2, 0, 0).is_err());
        assert!(randomized_tsvd(&CsrMatrix::identity(5), 0, 2, 0, 0).is_err());
    }

    #[test]
    fn complete_graph_rows_coincide_for_leading_factor() {
        let n = 12u64;
        let g = GlobalGraph::from_pairs((0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))));
        let e = global_embed_dense(&g, &cfg(1)).unwrap();
        for i in 1..e.nrows() {
            assert!((e[(i, 0)] - e[(0, 0)]).abs() <= 1e-6);
        }
    }

    #[test]
    fn isolated_node_is_zero_and_lookup_counts_misses() {
        let g = GlobalGraph::from_pairs([(1, 2), (2, 3), (3, 4), (4, 1), (9, 9), (1, 3)]);
        let t = global_embed(&g, &cfg(2)).unwrap();
        assert!(t.lookup(9).iter().all(|&x| x == 0.0));
        let row = t.lookup(1);
        assert_eq!(row.as_slice(), t.matrix().row(g.ids().get(1).unwrap()));
        assert_eq!(t.misses(), 0);
        for u in [100, 101, 102] {
            assert!(lookup_global(&t, u).iter().all(|&x| x == 0.0));
        }
        assert_eq!(t.misses(), 3);
    }
}
