//! Synthetic corpora with a known generating process.
//!
//! The context graph is a preferential-attachment (Barabási–Albert) graph.
//! Each cascade is a Galton–Watson tree grown over graph neighbourhoods:
//! roots are drawn proportionally to degree, every adopter `v` draws
//! `Poisson(R · w_v)` offspring among its not-yet-adopted neighbours, and
//! each offspring adopts after an exponential delay. The influence weights
//! `w_v ∝ deg(v)^α` are normalised to mean one under degree-biased
//! sampling, which is how both roots and neighbours are reached, so the
//! mean offspring count stays `R` and the expected cascade size stays
//! `1 / (1 - R)` up to neighbourhood exhaustion.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::{CascadeEdge, CascadeRecord, Corpus, CorpusMeta, GlobalGraph};
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub name: String,
    pub num_cascades: usize,
    pub graph_size: usize,
    /// Edges added per new node in the attachment process.
    pub attach: usize,
    /// Mean offspring per adopter; must be in `[0, 1)`.
    pub branching: f64,
    /// Mean adoption delay, seconds.
    pub mean_delay: f64,
    pub observation_time: f64,
    pub time_horizon: f64,
    pub influence_exponent: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            num_cascades: 2000,
            graph_size: 4000,
            attach: 3,
            branching: 0.7,
            mean_delay: 3600.0,
            observation_time: 1800.0,
            time_horizon: 86_400.0,
            influence_exponent: 2.0,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.branching) {
            return Err(Error::Config(format!(
                "branching mean R = {} must lie in [0, 1); R >= 1 is supercritical",
                self.branching
            )));
        }
        if self.attach == 0 || self.graph_size <= self.attach {
            return Err(Error::Config(format!(
                "graph_size ({}) must exceed attach ({}) and attach must be positive",
                self.graph_size, self.attach
            )));
        }
        if !(self.mean_delay > 0.0) || !(self.time_horizon > 0.0) {
            return Err(Error::Config("mean_delay and time_horizon must be positive".into()));
        }
        if !(self.observation_time > 0.0 && self.observation_time <= self.time_horizon) {
            return Err(Error::Config(
                "observation_time must be positive and not exceed time_horizon".into(),
            ));
        }
        if !self.influence_exponent.is_finite() {
            return Err(Error::Config("influence_exponent must be finite".into()));
        }
        Ok(())
    }
}

pub fn generate_synthetic_corpus(cfg: &SyntheticConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (adj, endpoints) = preferential_attachment(cfg.graph_size, cfg.attach, &mut rng);

    let weight = |d: usize| (d as f64).powf(cfg.influence_exponent);
    let total_deg: f64 = adj.iter().map(|n| n.len() as f64).sum();
    let biased_mean: f64 = adj
        .iter()
        .map(|n| n.len() as f64 * weight(n.len()))
        .sum::<f64>()
        / total_deg;
    let influence: Vec<f64> = adj.iter().map(|n| weight(n.len()) / biased_mean).collect();

    let delay = Exp::new(1.0 / cfg.mean_delay).map_err(|e| Error::Config(e.to_string()))?;
    let records = par::map_range(cfg.num_cascades, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64 + 1);
        let root = endpoints[rng.random_range(0..endpoints.len())];
        grow_cascade(i, root, cfg, &adj, &influence, &delay, &mut rng)
    });

    let pairs = adj
        .iter()
        .enumerate()
        .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u as u64, v as u64)));
    Ok(Corpus {
        records,
        global: GlobalGraph::from_pairs(pairs),
        meta: CorpusMeta {
            name: cfg.name.clone(),
            total_duration: cfg.time_horizon,
            observation_time: cfg.observation_time,
            prediction_time: cfg.time_horizon,
        },
    })
}

/// Adjacency lists (sorted) and the degree-weighted endpoint list.
fn preferential_attachment(n: usize, m: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut adj = vec![Vec::new(); n];
    let mut endpoints = Vec::with_capacity(2 * n * m);
    for u in 0..=m {
        for v in u + 1..=m {
            adj[u].push(v);
            adj[v].push(u);
            endpoints.extend([u, v]);
        }
    }
    for v in m + 1..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        while chosen.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for t in chosen {
            adj[v].push(t);
            adj[t].push(v);
            endpoints.extend([v, t]);
        }
    }
    adj.iter_mut().for_each(|ns| ns.sort_unstable());
    (adj, endpoints)
}

fn grow_cascade(
    index: usize,
    root: usize,
    cfg: &SyntheticConfig,
    adj: &[Vec<usize>],
    influence: &[f64],
    delay: &Exp<f64>,
    rng: &mut ChaCha8Rng,
) -> CascadeRecord {
    let mut adopted: HashSet<usize> = HashSet::from([root]);
    let mut queue = std::collections::VecDeque::from([(root, 0.0f64)]);
    let mut edges = Vec::new();
    while let Some((v, t)) = queue.pop_front() {
        let lambda = cfg.branching * influence[v];
        let k = match Poisson::new(lambda) {
            Ok(p) => p.sample(rng) as usize,
            Err(_) => 0,
        };
        if k == 0 {
            continue;
        }
        let free: Vec<usize> = adj[v].iter().copied().filter(|u| !adopted.contains(u)).collect();
        let k = k.min(free.len());
        for j in sample(rng, free.len(), k).into_iter() {
            let child = free[j];
            let at = ((t + delay.sample(rng)) * 1000.0).round() / 1000.0;
            if at <= cfg.time_horizon {
                adopted.insert(child);
                edges.push(CascadeEdge {
                    parent: v as u64,
                    child: child as u64,
                    time: at,
                });
                queue.push_back((child, at));
            }
        }
    }
    let popularity = edges.len() as u64 + 1;
    CascadeRecord::new(
        format!("s{index}"),
        root as u64,
        index as f64 * 60.0,
        edges,
        Some(popularity),
    )
    .expect("generator emits valid trees")
}
