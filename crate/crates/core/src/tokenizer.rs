//! Cascade tokens: fused user embeddings concatenated in adoption order,
//! one cumulative token per time patch.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeGraph, UserId};
use crate::global::GlobalTable;
use crate::local::LocalEmbedding;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub num_patches: usize,
    pub max_len: usize,
    /// Observation window in seconds; the corpus default when absent.
    pub observation_time: Option<f64>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            num_patches: 8,
            max_len: 32,
            observation_time: None,
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_patches < 2 {
            return Err(Error::Config("tokenizer.num_patches must be >= 2".into()));
        }
        if self.max_len < 1 {
            return Err(Error::Config("tokenizer.max_len must be >= 1".into()));
        }
        if let Some(t) = self.observation_time {
            if !(t > 0.0) {
                return Err(Error::Config("tokenizer.observation_time must be positive".into()));
            }
        }
        Ok(())
    }

    /// Token width `S = l · d`.
    pub fn token_size(&self, user_dim: usize) -> usize {
        self.max_len * user_dim
    }
}

/// `Concat(local, global)`, local part first.
pub fn fuse(local: &[f32], global: &[f32], dims: (usize, usize)) -> Result<Vec<f32>> {
    if local.len() != dims.0 || global.len() != dims.1 {
        return Err(Error::shape(
            "fuse",
            format!(
                "got ({}, {}), configured ({}, {})",
                local.len(),
                global.len(),
                dims.0,
                dims.1
            ),
        ));
    }
    let mut h = Vec::with_capacity(dims.0 + dims.1);
    h.extend_from_slice(local);
    h.extend_from_slice(global);
    Ok(h)
}

/// Fused embeddings of the users of one cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedTable {
    pub dim: usize,
    index: HashMap<UserId, usize>,
    data: Vec<f32>,
}

impl FusedTable {
    pub fn from_rows(dim: usize, rows: impl IntoIterator<Item = (UserId, Vec<f32>)>) -> Result<Self> {
        let mut index = HashMap::new();
        let mut data = Vec::new();
        for (user, row) in rows {
            if row.len() != dim {
                return Err(Error::shape("fused_table", format!("row of {} for dim {dim}", row.len())));
            }
            index.insert(user, index.len());
            data.extend(row);
        }
        Ok(Self { dim, index, data })
    }

    /// Fuses the local rows with global lookups; `drop_global` zeroes the
    /// global half.
    pub fn build(local: &LocalEmbedding, global: &GlobalTable, drop_global: bool) -> Result<Self> {
        let dims = (local.dim, global.dim());
        let rows = local
            .users
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let le: Vec<f32> = local.row(i).iter().map(|&x| x as f32).collect();
                let ge = if drop_global {
                    vec![0.0; dims.1]
                } else {
                    global.lookup(u)
                };
                fuse(&le, &ge, dims).map(|h| (u, h))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(dims.0 + dims.1, rows)
    }

    pub fn get(&self, user: UserId) -> Option<&[f32]> {
        self.index
            .get(&user)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

/// Uniform patch ends `n · t_o / N`, the last one exactly `t_o`.
pub fn patch_boundaries(t_obs: f64, n: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (1..=n).map(|i| i as f64 * t_obs / n as f64).collect();
    if let Some(last) = b.last_mut() {
        *last = t_obs;
    }
    b
}

/// Users adopted by `t`, ordered by `(adoption time, user id)`.
fn active_users(g: &CascadeGraph, t: f64) -> Vec<(UserId, f64)> {
    let mut active: Vec<(UserId, f64)> = g.users.iter().copied().filter(|&(_, at)| at <= t).collect();
    active.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    active
}

/// One token `T_n ∈ R^{l·d}` and the number of users active at `t_n`.
pub fn build_token(g: &CascadeGraph, t_n: f64, h: &FusedTable, max_len: usize) -> Result<(Vec<f32>, usize)> {
    let d = h.dim;
    let active = active_users(g, t_n);
    let mut token = vec![0.0f32; max_len * d];
    for (slot, &(u, _)) in active.iter().take(max_len).enumerate() {
        let row = h
            .get(u)
            .ok_or_else(|| Error::Validation(format!("user {u} has no fused embedding")))?;
        token[slot * d..(slot + 1) * d].copy_from_slice(row);
    }
    Ok((token, active.len()))
}

/// `N x S` token sequence of one cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub num_patches: usize,
    pub size: usize,
    /// Row-major, token `n` at `data[n*S..(n+1)*S]`.
    pub data: Vec<f32>,
    /// Users active at each boundary (before truncation to `l`).
    pub active: Vec<usize>,
    pub boundaries: Vec<f64>,
}

impl TokenSequence {
    pub fn token(&self, n: usize) -> &[f32] {
        &self.data[n * self.size..(n + 1) * self.size]
    }
}

/// Tokens at arbitrary boundaries.
pub fn build_sequence_at(
    g: &CascadeGraph,
    boundaries: &[f64],
    h: &FusedTable,
    max_len: usize,
) -> Result<TokenSequence> {
    let size = max_len * h.dim;
    let mut data = Vec::with_capacity(boundaries.len() * size);
    let mut active = Vec::with_capacity(boundaries.len());
    for &t in boundaries {
        let (tok, count) = build_token(g, t, h, max_len)?;
        data.extend(tok);
        active.push(count);
    }
    Ok(TokenSequence {
        num_patches: boundaries.len(),
        size,
        data,
        active,
        boundaries: boundaries.to_vec(),
    })
}

/// Tokens at the `N` uniform boundaries of `[0, t_obs]`.
pub fn build_sequence(
    g: &CascadeGraph,
    cfg: &TokenizerConfig,
    t_obs: f64,
    h: &FusedTable,
) -> Result<TokenSequence> {
    cfg.validate()?;
    build_sequence_at(g, &patch_boundaries(t_obs, cfg.num_patches), h, cfg.max_len)
}
