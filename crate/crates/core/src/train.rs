//! Training, evaluation, feature baselines, ablations and run reports.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapter::{AutoCasModel, ShellConfig, Variant};
use crate::autograd::{Adam, AdamConfig, Params, Tape, Tensor, Var};
use crate::backbone::{Backbone, BackboneConfig, PretrainReport};
use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::config::RunConfig;
use crate::metrics::{mape, msle};
use crate::pipeline::{Sample, Workspace};
use crate::prompt::{builtin_template, PromptEncoder};
use crate::tokenizer::patch_boundaries;
use crate::{par, Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: Variant,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Weight of the next-token loss.
    pub lambda: f64,
    pub seed: u64,
    /// Token loss alone first, then the popularity loss alone.
    pub staged: bool,
    pub staged_token_epochs: usize,
    /// Feature-baseline perceptron hidden width.
    pub feat_hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Full,
            lr: 1e-3,
            batch_size: 64,
            max_epochs: 200,
            patience: 16,
            lambda: 1.0,
            seed: 42,
            staged: false,
            staged_token_epochs: 10,
            feat_hidden: 32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience < 1 {
            return Err(Error::Config("train.patience must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config("train.lambda must be >= 0".into()));
        }
        if !(self.lr > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("train.lr, batch_size and max_epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_msle: f64,
}

/// Patience-based stopping on a validation score (lower is better).
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
    seen: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            seen: 0,
        }
    }

    /// Feeds the score of the next epoch (epochs are 1-based).
    pub fn observe(&mut self, score: f64) -> Decision {
        self.seen += 1;
        if score < self.best {
            self.best = score;
            self.best_epoch = self.seen;
            Decision::Improved
        } else if self.seen - self.best_epoch >= self.patience {
            Decision::Stop
        } else {
            Decision::Continue
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Runs `epoch(state, e) -> (train_loss, val_score)` until patience runs
/// out or `max_epochs`; `on_improve` sees the state at every new best epoch.
pub fn run_epochs<S>(
    state: &mut S,
    max_epochs: usize,
    patience: usize,
    mut epoch: impl FnMut(&mut S, usize) -> Result<(f64, f64)>,
    mut on_improve: impl FnMut(&S, usize),
) -> Result<(Vec<EpochLog>, usize)> {
    let mut stop = EarlyStopper::new(patience);
    let mut log = Vec::new();
    for e in 1..=max_epochs {
        let (train_loss, val) = epoch(state, e)?;
        log.push(EpochLog {
            epoch: e,
            train_loss,
            val_msle: val,
        });
        match stop.observe(val) {
            Decision::Improved => on_improve(state, e),
            Decision::Continue => {}
            Decision::Stop => break,
        }
    }
    Ok((log, stop.best_epoch()))
}

/// Anything producing a log-scale prediction per sample.
pub trait Predictor: Sync {
    fn predict(&self, s: &Sample) -> Result<f64>;
}

impl Predictor for AutoCasModel<f32> {
    fn predict(&self, s: &Sample) -> Result<f64> {
        AutoCasModel::predict(self, &s.tokens)
    }
}

/// Returns the true log popularity.
pub struct LabelOracle;

impl Predictor for LabelOracle {
    fn predict(&self, s: &Sample) -> Result<f64> {
        Ok(s.target)
    }
}

pub struct ConstantPredictor(pub f64);

impl Predictor for ConstantPredictor {
    fn predict(&self, _: &Sample) -> Result<f64> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub msle: f64,
    pub mape: f64,
}

pub fn predictions(p: &dyn Predictor, samples: &[Sample]) -> Result<Vec<f64>> {
    par::map(samples, |s| p.predict(s)).into_iter().collect()
}

pub fn evaluate(p: &dyn Predictor, samples: &[Sample]) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(Error::Validation("cannot evaluate an empty split".into()));
    }
    let pred = predictions(p, samples)?;
    let truth: Vec<u64> = samples.iter().map(|s| s.label).collect();
    Ok(Metrics {
        msle: msle(&pred, &truth)?,
        mape: mape(&pred, &truth)?,
    })
}

pub fn mean_target(samples: &[Sample]) -> f64 {
    samples.iter().map(|s| s.target).sum::<f64>() / samples.len().max(1) as f64
}

/// Frozen backbone per config: seeded init, optional pretraining, lock.
pub fn build_backbone(cfg: &BackboneConfig) -> Result<(Backbone<f32>, Option<PretrainReport>)> {
    let mut b = Backbone::init(cfg, "backbone.")?;
    let report = if cfg.pretrain_steps > 0 {
        Some(b.pretrain(cfg.pretrain_steps, cfg.init_seed.wrapping_add(1))?)
    } else {
        b.lock();
        None
    };
    Ok((b, report))
}

pub fn prompt_encoder(dataset: &str, dim: usize, shell: &ShellConfig) -> Result<PromptEncoder> {
    let template = builtin_template(dataset).or_else(|| builtin_template("synthetic")).expect("bundled template");
    PromptEncoder::new(template, shell.prompt_vocab, dim, shell.prompt_seed)
}

/// Model for `variant` on top of `backbone`.
pub fn build_model(cfg: &RunConfig, variant: Variant, token_size: usize, backbone: Arc<Backbone<f32>>) -> Result<AutoCasModel<f32>> {
    let prompt = prompt_encoder(&cfg.data.dataset, backbone.config().dim, &cfg.shell)?;
    AutoCasModel::new(variant, token_size, backbone, Some(Arc::new(prompt)), &cfg.shell)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AutoCasModel<f32>,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    pub backbone_checksum: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
struct Objective {
    msle: f64,
    token: f64,
}

/// Batch loss and gradients of one sample set.
fn batch_grads(model: &AutoCasModel<f32>, batch: &[&Sample], obj: Objective) -> Result<(f64, Vec<Option<Tensor<f32>>>)> {
    let per = par::map(batch, |s| -> Result<(f64, Vec<Option<Tensor<f32>>>)> {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let f = model.forward(&mut tape, &bound, &s.tokens)?;
        let y = tape.leaf(Tensor::scalar(s.target as f32), false);
        let mut loss = tape.mse_sum(f.pred, y)?;
        loss = tape.scale(loss, obj.msle as f32);
        if let (Some(tl), true) = (f.token_loss, obj.token > 0.0) {
            let w = tape.scale(tl, obj.token as f32);
            loss = tape.add(loss, w)?;
        }
        let value = tape.value(loss).item() as f64;
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss on cascade {}: {}",
                s.index,
                nan_diagnostic(model, &tape, &bound.shell, s)
            )));
        }
        let mut g = tape.backward(loss)?;
        Ok((value, bound.shell.iter().map(|&v| g.take(v)).collect()))
    });
    let mut total = 0.0;
    let mut acc: Vec<Option<Tensor<f32>>> = vec![None; model.shell().len()];
    for r in per {
        let (l, grads) = r?;
        total += l;
        for (slot, g) in acc.iter_mut().zip(grads) {
            let Some(g) = g else { continue };
            match slot {
                Some(a) => a.data.iter_mut().zip(&g.data).for_each(|(x, y)| *x += y),
                None => *slot = Some(g),
            }
        }
    }
    let inv = 1.0 / batch.len() as f32;
    for g in acc.iter_mut().flatten() {
        g.data.iter_mut().for_each(|x| *x *= inv);
    }
    Ok((total / batch.len() as f64, acc))
}

/// Names the first non-finite tensor: a parameter, the input tokens, or
/// the earliest tape value.
fn nan_diagnostic(model: &AutoCasModel<f32>, tape: &Tape<f32>, shell: &[Var], s: &Sample) -> String {
    if let Some(p) = model.shell().iter().find(|p| p.value.data.iter().any(|x| !x.is_finite())) {
        return format!("first non-finite tensor is parameter {}", p.name);
    }
    if s.tokens.data.iter().any(|x| !x.is_finite()) {
        return "first non-finite tensor is the input token sequence".into();
    }
    let skip = shell.iter().map(|v| v.index()).max().map_or(0, |m| m + 1);
    match (skip..tape.len()).find(|&i| tape.value_at(i).data.iter().any(|x| !x.is_finite())) {
        Some(i) => format!("first non-finite tensor is intermediate #{i} of shape {:?}", tape.value_at(i).shape()),
        None => "no non-finite tensor found".into(),
    }
}

fn train_phase(
    model: &mut AutoCasModel<f32>,
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
    obj: Objective,
    max_epochs: usize,
    patience: usize,
    seed: u64,
) -> Result<(Vec<EpochLog>, usize)> {
    let mut opt = Adam::new(
        AdamConfig {
            lr: cfg.lr,
            ..Default::default()
        },
        model.shell(),
    );
    let mut best: Option<Params<f32>> = None;
    let mut current = model.clone();
    let (log, best_epoch) = run_epochs(
        &mut current,
        max_epochs,
        patience,
        |current, e| {
            let mut order: Vec<usize> = (0..train.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(e as u64)));
            let mut sum = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &train[i]).collect();
                let (l, g) = batch_grads(current, &batch, obj)?;
                sum += l * batch.len() as f64;
                opt.step(current.shell_mut(), &g);
            }
            let val_score = if obj.msle > 0.0 {
                evaluate(&*current, val)?.msle
            } else {
                token_loss_mean(current, val)?
            };
            Ok((sum / train.len() as f64, val_score))
        },
        |current, _| best = Some(current.shell().clone()),
    )?;
    if let Some(p) = best {
        *model.shell_mut() = p;
    }
    Ok((log, best_epoch))
}

fn token_loss_mean(model: &AutoCasModel<f32>, samples: &[Sample]) -> Result<f64> {
    let v: Result<Vec<f64>> = par::map(samples, |s| {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let f = model.forward(&mut tape, &bound, &s.tokens)?;
        Ok(f.token_loss.map_or(0.0, |t| tape.value(t).item() as f64))
    })
    .into_iter()
    .collect();
    let v = v?;
    Ok(v.iter().sum::<f64>() / v.len().max(1) as f64)
}

/// Fits the trainable shell; the best validation epoch is kept and the
/// backbone is checked unchanged.
pub fn train_model(mut model: AutoCasModel<f32>, train: &[Sample], val: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Validation("training needs non-empty train and validation splits".into()));
    }
    model.audit()?;
    let before = model.backbone().map(|b| b.params().checksum());
    model.set_head_bias(mean_target(train));
    let token_w = if model.variant().autoregressive() { cfg.lambda } else { 0.0 };
    let mut history = Vec::new();
    if cfg.staged && token_w > 0.0 {
        let (log, _) = train_phase(
            &mut model,
            train,
            val,
            cfg,
            Objective { msle: 0.0, token: 1.0 },
            cfg.staged_token_epochs,
            cfg.staged_token_epochs,
            cfg.seed,
        )?;
        history.extend(log);
    }
    let obj = if cfg.staged {
        Objective { msle: 1.0, token: 0.0 }
    } else {
        Objective {
            msle: 1.0,
            token: token_w,
        }
    };
    let offset = history.len();
    let (log, best) = train_phase(&mut model, train, val, cfg, obj, cfg.max_epochs, cfg.patience, cfg.seed ^ 0x9e37)?;
    history.extend(log.into_iter().map(|mut l| {
        l.epoch += offset;
        l
    }));
    let after = model.backbone().map(|b| b.params().checksum());
    if before != after {
        return Err(Error::Validation("backbone tensors changed during training".into()));
    }
    Ok(TrainOutcome {
        model,
        history,
        best_epoch: best + offset,
        backbone_checksum: after,
    })
}

/// Prediction for one cascade observed to `t_obs_new`, tokenized with the
/// training patch duration `delta`.
pub fn infer_cross_partition(model: &AutoCasModel<f32>, ws: &Workspace, index: usize, t_obs_new: f64, delta: f64) -> Result<f64> {
    let s = cross_partition_samples(ws, &[index], t_obs_new, delta, model.variant().drops_global())?;
    AutoCasModel::predict(model, &s[0].tokens)
}

/// Samples for `indices` with `round(t_obs_new / delta)` patches of width
/// `delta`.
pub fn cross_partition_samples(ws: &Workspace, indices: &[usize], t_obs_new: f64, delta: f64, drop_global: bool) -> Result<Vec<Sample>> {
    if !(delta > 0.0 && t_obs_new > 0.0) {
        return Err(Error::Validation("observation time and patch duration must be positive".into()));
    }
    let n = (t_obs_new / delta).round();
    if n < 2.0 || ((n * delta - t_obs_new).abs() > 1e-6 * t_obs_new) {
        return Err(Error::Validation(format!(
            "patch duration {delta} does not divide observation time {t_obs_new} into at least 2 patches"
        )));
    }
    ws.samples_at(indices, t_obs_new, &patch_boundaries(t_obs_new, n as usize), drop_global)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatKind {
    Linear,
    Mlp,
}

/// Feature standardization fitted on the training split.
#[derive(Debug, Clone)]
struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    fn fit(samples: &[Sample]) -> Self {
        let d = samples[0].features.len();
        let n = samples.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s.features[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                let v = samples.iter().map(|s| (s.features[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if v > 1e-12 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }
}

/// Least squares with intercept on standardized features.
#[derive(Debug, Clone)]
pub struct FeatLinear {
    scaler: Standardizer,
    weights: DVector<f64>,
}

impl FeatLinear {
    pub fn fit(train: &[Sample]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Validation("no training samples".into()));
        }
        let scaler = Standardizer::fit(train);
        let d = train[0].features.len();
        let x = DMatrix::from_fn(train.len(), d + 1, |i, j| {
            if j == d {
                1.0
            } else {
                (train[i].features[j] - scaler.mean[j]) / scaler.std[j]
            }
        });
        let y = DVector::from_iterator(train.len(), train.iter().map(|s| s.target));
        let weights = x
            .svd(true, true)
            .solve(&y, 1e-10)
            .map_err(|e| Error::Numeric(format!("least squares failed: {e}")))?;
        Ok(Self { scaler, weights })
    }
}

impl Predictor for FeatLinear {
    fn predict(&self, s: &Sample) -> Result<f64> {
        let f = self.scaler.apply(&s.features);
        let d = f.len();
        Ok(f.iter().zip(self.weights.iter()).map(|(a, b)| a * b).sum::<f64>() + self.weights[d])
    }
}

/// Two-layer perceptron on standardized features.
#[derive(Debug, Clone)]
pub struct FeatMlp {
    scaler: Standardizer,
    params: Params<f64>,
}

impl FeatMlp {
    fn forward(&self, tape: &mut Tape<f64>, bound: &[Var], f: &[f64]) -> Result<Var> {
        let x = tape.leaf(Tensor::row_vector(self.scaler.apply(f)), false);
        let h = tape.matmul(x, bound[0])?;
        let h = tape.add_row(h, bound[1])?;
        let h = tape.gelu(h);
        let o = tape.matmul(h, bound[2])?;
        tape.add_row(o, bound[3])
    }

    pub fn fit(train: &[Sample], val: &[Sample], cfg: &TrainConfig) -> Result<Self> {
        if train.is_empty() || val.is_empty() {
            return Err(Error::Validation("no training samples".into()));
        }
        let d = train[0].features.len();
        let h = cfg.feat_hidden.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut init = |r: usize, c: usize| {
            let n = rand_distr::Normal::new(0.0, (1.0 / r as f64).sqrt()).expect("positive std");
            Tensor::from_fn(r, c, |_, _| rand_distr::Distribution::sample(&n, &mut rng))
        };
        let mut params = Params::new();
        params.add("feat.w1", init(d, h), true);
        params.add("feat.b1", Tensor::zeros(1, h), true);
        params.add("feat.w2", init(h, 1), true);
        params.add("feat.b2", Tensor::scalar(mean_target(train)), true);
        let mut model = Self {
            scaler: Standardizer::fit(train),
            params,
        };
        let mut opt = Adam::new(
            AdamConfig {
                lr: cfg.lr,
                ..Default::default()
            },
            &model.params,
        );
        let mut best = model.params.clone();
        let mut current = model.clone();
        run_epochs(
            &mut current,
            cfg.max_epochs,
            cfg.patience,
            |current, e| {
                let mut order: Vec<usize> = (0..train.len()).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(e as u64)));
                let mut sum = 0.0;
                for chunk in order.chunks(cfg.batch_size) {
                    let mut tape = Tape::new();
                    let bound = current.params.bind(&mut tape);
                    let mut losses = Vec::with_capacity(chunk.len());
                    for &i in chunk {
                        let p = current.forward(&mut tape, &bound, &train[i].features)?;
                        let y = tape.leaf(Tensor::scalar(train[i].target), false);
                        losses.push(tape.mse_sum(p, y)?);
                    }
                    let all = tape.concat_rows(&losses)?;
                    let total = tape.sum(all);
                    let loss = tape.scale(total, 1.0 / chunk.len() as f64);
                    sum += tape.value(loss).item() * chunk.len() as f64;
                    let mut g = tape.backward(loss)?;
                    let grads: Vec<Option<Tensor<f64>>> = bound.iter().map(|&v| g.take(v)).collect();
                    opt.step(&mut current.params, &grads);
                }
                Ok((sum / train.len() as f64, evaluate(&*current, val)?.msle))
            },
            |current, _| best = current.params.clone(),
        )?;
        model.params = best;
        Ok(model)
    }
}

impl Predictor for FeatMlp {
    fn predict(&self, s: &Sample) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let p = self.forward(&mut tape, &bound, &s.features)?;
        Ok(tape.value(p).item())
    }
}

/// Fits a feature baseline; the perceptron early-stops on `val`.
pub fn fit_baseline(train: &[Sample], val: &[Sample], cfg: &TrainConfig, kind: FeatKind) -> Result<Box<dyn Predictor>> {
    Ok(match kind {
        FeatKind::Linear => Box::new(FeatLinear::fit(train)?),
        FeatKind::Mlp => Box::new(FeatMlp::fit(train, val, cfg)?),
    })
}

/// Trains a feature baseline and scores it on the test split.
pub fn baseline_feat(train: &[Sample], val: &[Sample], test: &[Sample], cfg: &TrainConfig, kind: FeatKind) -> Result<Metrics> {
    evaluate(&*fit_baseline(train, val, cfg, kind)?, test)
}

/// Metrics and bookkeeping of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub run_id: String,
    pub dataset: String,
    pub t_obs: f64,
    pub variant: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
    pub val_msle: f64,
    pub test_msle: f64,
    pub test_mape: f64,
    pub wall_clock_s: f64,
    pub learnable_params: usize,
    pub total_params: usize,
    pub backbone_checksum: Option<u64>,
}

pub const CSV_HEADER: [&str; 10] = [
    "run_id",
    "dataset",
    "t_obs",
    "variant",
    "msle",
    "mape",
    "epochs",
    "wall_clock_s",
    "learnable_params",
    "total_params",
];

impl RunReport {
    pub fn csv_row(&self) -> [String; 10] {
        [
            self.run_id.clone(),
            self.dataset.clone(),
            self.t_obs.to_string(),
            self.variant.clone(),
            self.test_msle.to_string(),
            self.test_mape.to_string(),
            self.epochs.to_string(),
            format!("{:.3}", self.wall_clock_s),
            self.learnable_params.to_string(),
            self.total_params.to_string(),
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported report schema {}", r.schema_version)));
        }
        Ok(r)
    }
}

pub fn write_reports_csv(w: impl std::io::Write, reports: &[RunReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in reports {
        out.write_record(r.csv_row())?;
    }
    out.flush()?;
    Ok(())
}

/// Trained model plus its report.
#[derive(Debug, Clone)]
pub struct Run {
    pub model: AutoCasModel<f32>,
    pub report: RunReport,
}

/// Full train/evaluate cycle for one variant on a prepared workspace.
pub fn run_variant(ws: &Workspace, backbone: Arc<Backbone<f32>>, variant: Variant) -> Result<Run> {
    let start = Instant::now();
    let cfg = &ws.cfg;
    let [train, val, test] = ws.split_samples(variant.drops_global())?;
    let token_size = train
        .first()
        .map(|s| s.tokens.cols)
        .ok_or_else(|| Error::Validation("empty training split".into()))?;
    let model = build_model(cfg, variant, token_size, backbone)?;
    let out = train_model(model, &train, &val, &cfg.train)?;
    let val_m = evaluate(&out.model, &val)?;
    let test_m = evaluate(&out.model, &test)?;
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: format!("{}-{}-{}", ws.corpus.meta.name, variant, cfg.train.seed),
        dataset: ws.corpus.meta.name.clone(),
        t_obs: ws.observation_time(),
        variant: variant.name().into(),
        epochs: out.history.len(),
        best_epoch: out.best_epoch,
        history: out.history,
        val_msle: val_m.msle,
        test_msle: test_m.msle,
        test_mape: test_m.mape,
        wall_clock_s: start.elapsed().as_secs_f64(),
        learnable_params: out.model.learnable_params(),
        total_params: out.model.total_params(),
        backbone_checksum: out.backbone_checksum,
    };
    Ok(Run { model: out.model, report })
}

/// Trains `variant` with a fresh backbone built from the config.
pub fn run_ablation(ws: &Workspace, variant: Variant) -> Result<Run> {
    let (bb, _) = build_backbone(&ws.cfg.backbone)?;
    run_variant(ws, Arc::new(bb), variant)
}

/// Report row for a feature baseline.
pub fn baseline_report(ws: &Workspace, kind: FeatKind) -> Result<RunReport> {
    let start = Instant::now();
    let [train, val, test] = ws.split_samples(false)?;
    let model = fit_baseline(&train, &val, &ws.cfg.train, kind)?;
    let val_m = evaluate(&*model, &val)?;
    let m = evaluate(&*model, &test)?;
    let name = match kind {
        FeatKind::Linear => "feat-linear",
        FeatKind::Mlp => "feat-mlp",
    };
    let d = train[0].features.len();
    let params = match kind {
        FeatKind::Linear => d + 1,
        FeatKind::Mlp => d * ws.cfg.train.feat_hidden + 2 * ws.cfg.train.feat_hidden + 1,
    };
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: format!("{}-{}-{}", ws.corpus.meta.name, name, ws.cfg.train.seed),
        dataset: ws.corpus.meta.name.clone(),
        t_obs: ws.observation_time(),
        variant: name.into(),
        epochs: 0,
        best_epoch: 0,
        history: vec![],
        val_msle: val_m.msle,
        test_msle: m.msle,
        test_mape: m.mape,
        wall_clock_s: start.elapsed().as_secs_f64(),
        learnable_params: params,
        total_params: params,
        backbone_checksum: None,
    })
}

/// Writes backbone and shell tensors of `model`.
pub fn save_model(path: &Path, model: &AutoCasModel<f32>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let bb = model.backbone().map(|b| b.params().iter().collect::<Vec<_>>()).unwrap_or_default();
    write_checkpoint(
        &mut w,
        bb.into_iter()
            .chain(model.shell().iter())
            .map(|p| (p.name.as_str(), &*p.value)),
    )
}

/// Rebuilds a model from config and restores its tensors from `path`.
pub fn load_model(path: &Path, cfg: &RunConfig, variant: Variant, token_size: usize) -> Result<AutoCasModel<f32>> {
    let tensors = read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))?;
    let named = || tensors.iter().map(|(n, t)| (n.as_str(), t));
    let mut bb = Backbone::<f32>::init(&cfg.backbone, "backbone.")?;
    if variant.uses_frozen_backbone() {
        bb.params_mut().load_named(named())?;
    }
    bb.lock();
    let mut model = build_model(cfg, variant, token_size, Arc::new(bb))?;
    model.shell_mut().load_named(named())?;
    Ok(model)
}
