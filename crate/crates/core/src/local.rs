//! Structural user embeddings inside one cascade graph.
//!
//! For every scale `s` the heat wavelet of user `a` is the column
//! `Ψ_a = e^{-sL} e_a` of the (undirected, normalized) cascade Laplacian.
//! The embedding samples the empirical characteristic function
//! `φ_a(t) = (1/n) Σ_m exp(i t Ψ_{m,a})` at fixed points and concatenates
//! `(Re φ_a(t), Im φ_a(t))` over scales and points.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeGraph, UserId};
use crate::graph::{
    cheb_apply, cheb_fit_heat, dense_filter, eig_small, normalized_laplacian, IsolatedNodes,
    DEFAULT_CHEB_ORDER, DEFAULT_N_MAX, NORMALIZED_SPECTRUM,
};
use crate::{Error, Result};

/// Which route computes `e^{-sL}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletPath {
    /// Exact below `n_max` nodes, Chebyshev above.
    #[default]
    Auto,
    Exact,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalEmbedConfig {
    pub scales: Vec<f64>,
    /// Characteristic-function sample points; the first must be 0.
    pub sample_points: Vec<f64>,
    pub path: WaveletPath,
    pub cheb_order: usize,
    pub n_max: usize,
}

impl Default for LocalEmbedConfig {
    /// Two scales and ten points on `[0, 10]`: 40 dimensions.
    fn default() -> Self {
        Self {
            scales: vec![0.5, 1.5],
            sample_points: uniform_points(10, 10.0),
            path: WaveletPath::Auto,
            cheb_order: DEFAULT_CHEB_ORDER,
            n_max: DEFAULT_N_MAX,
        }
    }
}

/// `count` evenly spaced points from 0 to `max` inclusive.
pub fn uniform_points(count: usize, max: f64) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..count)
            .map(|j| max * j as f64 / (count - 1) as f64)
            .collect(),
    }
}

impl LocalEmbedConfig {
    pub fn dim(&self) -> usize {
        2 * self.scales.len() * self.sample_points.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() || self.scales.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config("local.scales must be non-empty and positive".into()));
        }
        if self.sample_points.first() != Some(&0.0) {
            return Err(Error::Config("local.sample_points must start at 0".into()));
        }
        if self.cheb_order < 1 {
            return Err(Error::Config("local.cheb_order must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-user local embeddings of one cascade, rows in `users` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEmbedding {
    pub users: Vec<UserId>,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl LocalEmbedding {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, user: UserId) -> Option<&[f64]> {
        self.users.iter().position(|&u| u == user).map(|i| self.row(i))
    }
}

pub fn local_embed(g: &CascadeGraph, cfg: &LocalEmbedConfig) -> Result<LocalEmbedding> {
    cfg.validate()?;
    let n = g.len();
    if n == 0 {
        return Err(Error::Validation("local_embed: empty cascade graph".into()));
    }
    let l = normalized_laplacian(&g.adjacency(), IsolatedNodes::ZeroDiagonal);
    let exact = match cfg.path {
        WaveletPath::Exact => true,
        WaveletPath::Chebyshev => false,
        WaveletPath::Auto => n <= cfg.n_max,
    };

    let wavelets: Vec<DMatrix<f64>> = if exact {
        let eig = eig_small(&l, n.max(cfg.n_max))?;
        cfg.scales
            .iter()
            .map(|&s| dense_filter(&eig, |x| (-s * x).exp()))
            .collect()
    } else {
        let eye = DMatrix::identity(n, n);
        cfg.scales
            .iter()
            .map(|&s| {
                let f = cheb_fit_heat(s, NORMALIZED_SPECTRUM, cfg.cheb_order, 1e-6)?;
                cheb_apply(&f, &l, &eye)
            })
            .collect::<Result<_>>()?
    };

    let dim = cfg.dim();
    let mut data = Vec::with_capacity(n * dim);
    let inv_n = 1.0 / n as f64;
    for a in 0..n {
        for psi in &wavelets {
            let col = psi.column(a);
            for &t in &cfg.sample_points {
                let (mut re, mut im) = (0.0, 0.0);
                for &v in col.iter() {
                    let (s, c) = (t * v).sin_cos();
                    re += c;
                    im += s;
                }
                data.push(re * inv_n);
                data.push(im * inv_n);
            }
        }
    }
    Ok(LocalEmbedding {
        users: g.users.iter().map(|&(u, _)| u).collect(),
        dim,
        data,
    })
}
