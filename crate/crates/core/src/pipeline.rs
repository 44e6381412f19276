//! Corpus loading, embedding precomputation and tokenization for one run.

use std::fs::File;
use std::io::BufReader;

use crate::autograd::Tensor;
use crate::cascade::{
    build_cascade_graph, build_global_graph, generate_synthetic_corpus, parse_cascade_file, split_indices,
    CascadeRecord, Corpus, CorpusMeta, GlobalGraph, Split,
};
use crate::config::RunConfig;
use crate::global::{global_embed, GlobalTable};
use crate::local::local_embed;
use crate::metrics::log_pop;
use crate::tokenizer::{build_sequence_at, patch_boundaries, FusedTable, TokenSequence};
use crate::{par, Error, Result};

/// Loads the configured corpus, or generates the synthetic one.
pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus> {
    let Some(path) = &cfg.data.cascades else {
        return generate_synthetic_corpus(&cfg.synthetic);
    };
    let open = |p: &std::path::Path| {
        File::open(p)
            .map(BufReader::new)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", p.display())))
    };
    let records = parse_cascade_file(open(path)?)?;
    let global = match &cfg.data.global_graph {
        Some(g) => build_global_graph(open(g)?)?,
        None => GlobalGraph::from_pairs(
            records
                .iter()
                .flat_map(|r| r.edges.iter().map(|e| (e.parent, e.child))),
        ),
    };
    let mut meta = CorpusMeta::preset(&cfg.data.dataset).unwrap_or_else(|| {
        let horizon = records.iter().map(CascadeRecord::max_time).fold(0.0, f64::max);
        CorpusMeta {
            name: cfg.data.dataset.clone(),
            total_duration: horizon,
            observation_time: horizon / 2.0,
            prediction_time: horizon,
        }
    });
    if let Some(t) = cfg.data.observation_time {
        meta.observation_time = t;
    }
    Ok(Corpus { records, global, meta })
}

/// Popularity label at the prediction time.
pub fn label(record: &CascadeRecord, meta: &CorpusMeta) -> u64 {
    record
        .final_popularity
        .unwrap_or_else(|| record.popularity_at(meta.prediction_time) as u64)
}

/// Prepared corpus, split and global table.
#[derive(Debug)]
pub struct Workspace {
    pub cfg: RunConfig,
    pub corpus: Corpus,
    pub split: Split,
    pub global: GlobalTable,
    pub labels: Vec<u64>,
}

/// One cascade ready for a model: tokens, hand features and label.
#[derive(Debug, Clone)]
pub struct Sample {
    pub index: usize,
    pub tokens: Tensor<f32>,
    pub features: Vec<f64>,
    pub label: u64,
    /// `log2(label + 1)`.
    pub target: f64,
}

impl Workspace {
    pub fn prepare(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let corpus = load_corpus(cfg)?;
        Self::from_corpus(cfg, corpus)
    }

    pub fn from_corpus(cfg: &RunConfig, corpus: Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Validation("corpus has no cascades".into()));
        }
        let split = split_indices(corpus.len(), cfg.data.split, cfg.data.split_seed)?;
        let global = global_embed(&corpus.global, &cfg.global)?;
        let labels = corpus.records.iter().map(|r| label(r, &corpus.meta)).collect();
        Ok(Self {
            cfg: cfg.clone(),
            corpus,
            split,
            global,
            labels,
        })
    }

    /// Observation window from the tokenizer, the data section, or the corpus.
    pub fn observation_time(&self) -> f64 {
        self.cfg
            .tokenizer
            .observation_time
            .or(self.cfg.data.observation_time)
            .unwrap_or(self.corpus.meta.observation_time)
    }

    /// Patch duration of the configured partition.
    pub fn patch_duration(&self) -> f64 {
        self.observation_time() / self.cfg.tokenizer.num_patches as f64
    }

    /// Fused per-user table of one cascade observed to `t_obs`.
    pub fn fused(&self, index: usize, t_obs: f64, drop_global: bool) -> Result<FusedTable> {
        let g = build_cascade_graph(&self.corpus.records[index], t_obs);
        let le = local_embed(&g, &self.cfg.local)?;
        FusedTable::build(&le, &self.global, drop_global)
    }

    /// Tokens of one cascade observed to `t_obs`, cut at `boundaries`.
    pub fn sequence(&self, index: usize, t_obs: f64, boundaries: &[f64], drop_global: bool) -> Result<TokenSequence> {
        let g = build_cascade_graph(&self.corpus.records[index], t_obs);
        let le = local_embed(&g, &self.cfg.local)?;
        let h = FusedTable::build(&le, &self.global, drop_global)?;
        build_sequence_at(&g, boundaries, &h, self.cfg.tokenizer.max_len)
    }

    /// Samples for `indices` with `num_patches` uniform patches over `t_obs`.
    pub fn samples(&self, indices: &[usize], t_obs: f64, num_patches: usize, drop_global: bool) -> Result<Vec<Sample>> {
        let boundaries = patch_boundaries(t_obs, num_patches);
        self.samples_at(indices, t_obs, &boundaries, drop_global)
    }

    pub fn samples_at(&self, indices: &[usize], t_obs: f64, boundaries: &[f64], drop_global: bool) -> Result<Vec<Sample>> {
        par::map(indices, |&i| {
            let seq = self.sequence(i, t_obs, boundaries, drop_global)?;
            let tokens = Tensor::new(seq.num_patches, seq.size, seq.data)?;
            let label = self.labels[i];
            Ok(Sample {
                index: i,
                tokens,
                features: cascade_features(&self.corpus.records[i], boundaries),
                label,
                target: log_pop(label as f64),
            })
        })
        .into_iter()
        .collect()
    }

    /// Train/val/test samples at the configured partition.
    pub fn split_samples(&self, drop_global: bool) -> Result<[Vec<Sample>; 3]> {
        let (t, n) = (self.observation_time(), self.cfg.tokenizer.num_patches);
        Ok([
            self.samples(&self.split.train, t, n, drop_global)?,
            self.samples(&self.split.val, t, n, drop_global)?,
            self.samples(&self.split.test, t, n, drop_global)?,
        ])
    }
}

/// Hand features: popularity at each boundary, log popularity at the last
/// one, mean inter-adoption gap (0 with fewer than two adopters) and depth.
pub fn cascade_features(record: &CascadeRecord, boundaries: &[f64]) -> Vec<f64> {
    let t_obs = boundaries.last().copied().unwrap_or(0.0);
    let mut f: Vec<f64> = boundaries.iter().map(|&t| record.popularity_at(t) as f64).collect();
    let obs = record.popularity_at(t_obs) as f64;
    f.push(log_pop(obs));
    let times: Vec<f64> = std::iter::once(0.0)
        .chain(record.edges.iter().filter(|e| e.time <= t_obs).map(|e| e.time))
        .collect();
    let gap = if times.len() < 2 {
        0.0
    } else {
        times.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (times.len() - 1) as f64
    };
    f.push(gap);
    f.push(build_cascade_graph(record, t_obs).depth() as f64);
    f
}
