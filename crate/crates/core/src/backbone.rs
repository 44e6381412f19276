//! Decoder-only causal transformer used as the frozen sequence model.
//!
//! Pre-norm blocks (`x += Attn(LN(x))`, `x += FFN(LN(x))`), learned absolute
//! positions and a final layer norm. Output row `k` is the hidden
//! prediction for input position `k + 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::autograd::{Adam, AdamConfig, ParamId, Params, Scalar, Tape, Tensor, Var};
use crate::{Error, Result};

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackboneConfig {
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_mult: usize,
    pub max_context: usize,
    pub init_seed: u64,
    /// Next-vector pretraining steps before freezing; 0 disables it.
    pub pretrain_steps: usize,
    pub pretrain_lr: f64,
    pub pretrain_batch: usize,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            layers: 4,
            heads: 4,
            ffn_mult: 4,
            max_context: 64,
            init_seed: 7,
            pretrain_steps: 0,
            pretrain_lr: 1e-3,
            pretrain_batch: 8,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("backbone.layers must be >= 1".into()));
        }
        if self.dim == 0 || self.heads == 0 || !self.dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "backbone.dim ({}) must be a positive multiple of heads ({})",
                self.dim, self.heads
            )));
        }
        if self.ffn_mult == 0 || self.max_context == 0 {
            return Err(Error::Config("backbone.ffn_mult and max_context must be >= 1".into()));
        }
        Ok(())
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let d = self.dim;
        let f = self.ffn_mult * d;
        let per_layer = (3 * d * d + 3 * d) + (d * d + d) + (d * f + f) + (f * d + d) + 4 * d;
        self.layers * per_layer + 2 * d + self.max_context * d
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerIds {
    ln1_g: ParamId,
    ln1_b: ParamId,
    w_qkv: ParamId,
    b_qkv: ParamId,
    w_o: ParamId,
    b_o: ParamId,
    ln2_g: ParamId,
    ln2_b: ParamId,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

/// Transformer weights plus the layout needed to run them.
#[derive(Debug, Clone)]
pub struct Backbone<T> {
    cfg: BackboneConfig,
    params: Params<T>,
    pos: ParamId,
    layers: Vec<LayerIds>,
    lnf_g: ParamId,
    lnf_b: ParamId,
    locked: bool,
}

/// Loss trace of [`Backbone::pretrain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub steps: usize,
}

impl<T: Scalar> Backbone<T> {
    /// Seeded init, every tensor frozen. Weights ~ N(0, 0.02/√layers),
    /// biases zero, norms at unit gain.
    pub fn init(cfg: &BackboneConfig, prefix: &str) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
        let std = 0.02 / (cfg.layers as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        let mut gauss = |r: usize, c: usize| Tensor::from_fn(r, c, |_, _| T::c(normal.sample(&mut rng)));
        let (d, f) = (cfg.dim, cfg.dim * cfg.ffn_mult);
        let mut p = Params::new();
        let pos = p.add(format!("{prefix}pos"), gauss(cfg.max_context, d), false);
        let mut layers = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let n = |s: &str| format!("{prefix}l{l}.{s}");
            layers.push(LayerIds {
                ln1_g: p.add(n("ln1_g"), Tensor::filled(1, d, T::one()), false),
                ln1_b: p.add(n("ln1_b"), Tensor::zeros(1, d), false),
                w_qkv: p.add(n("w_qkv"), gauss(d, 3 * d), false),
                b_qkv: p.add(n("b_qkv"), Tensor::zeros(1, 3 * d), false),
                w_o: p.add(n("w_o"), gauss(d, d), false),
                b_o: p.add(n("b_o"), Tensor::zeros(1, d), false),
                ln2_g: p.add(n("ln2_g"), Tensor::filled(1, d, T::one()), false),
                ln2_b: p.add(n("ln2_b"), Tensor::zeros(1, d), false),
                w1: p.add(n("w1"), gauss(d, f), false),
                b1: p.add(n("b1"), Tensor::zeros(1, f), false),
                w2: p.add(n("w2"), gauss(f, d), false),
                b2: p.add(n("b2"), Tensor::zeros(1, d), false),
            });
        }
        let lnf_g = p.add(format!("{prefix}lnf_g"), Tensor::filled(1, d, T::one()), false);
        let lnf_b = p.add(format!("{prefix}lnf_b"), Tensor::zeros(1, d), false);
        Ok(Self {
            cfg: cfg.clone(),
            params: p,
            pos,
            layers,
            lnf_g,
            lnf_b,
            locked: false,
        })
    }

    pub fn config(&self) -> &BackboneConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    pub fn is_frozen(&self) -> bool {
        self.params.iter().all(|p| !p.requires_grad)
    }

    /// Marks every tensor trainable (used when a block is the trainable
    /// replacement of the backbone).
    pub fn into_trainable(mut self) -> Self {
        self.params.set_requires_grad(true);
        self
    }

    /// Prevents further pretraining.
    pub fn lock(&mut self) {
        self.params.set_requires_grad(false);
        self.locked = true;
    }

    pub fn cast<U: Scalar>(&self) -> Backbone<U> {
        Backbone {
            cfg: self.cfg.clone(),
            params: self.params.cast(),
            pos: self.pos,
            layers: self.layers.clone(),
            lnf_g: self.lnf_g,
            lnf_b: self.lnf_b,
            locked: self.locked,
        }
    }

    /// Runs the blocks on `z` (`n x D`, `n <= max_context`); `bound` comes
    /// from `self.params().bind(tape)`.
    pub fn forward(&self, tape: &mut Tape<T>, bound: &[Var], z: Var) -> Result<Var> {
        let (n, d) = tape.shape(z);
        if d != self.cfg.dim {
            return Err(Error::shape("backbone_forward", format!("input width {d}, model dim {}", self.cfg.dim)));
        }
        if n > self.cfg.max_context {
            return Err(Error::ContextOverflow {
                len: n,
                max: self.cfg.max_context,
            });
        }
        let b = |id: ParamId| bound[id.0];
        let heads = self.cfg.heads;
        let hd = d / heads;
        let inv_sqrt = T::c(1.0 / (hd as f64).sqrt());

        let pos = tape.slice_rows(b(self.pos), 0, n)?;
        let mut x = tape.add(z, pos)?;
        for l in &self.layers {
            let h = tape.layernorm(x, b(l.ln1_g), b(l.ln1_b), LN_EPS)?;
            let qkv = tape.matmul(h, b(l.w_qkv))?;
            let qkv = tape.add_row(qkv, b(l.b_qkv))?;
            let mut outs = Vec::with_capacity(heads);
            for hi in 0..heads {
                let q = tape.slice_cols(qkv, hi * hd, hd)?;
                let k = tape.slice_cols(qkv, d + hi * hd, hd)?;
                let v = tape.slice_cols(qkv, 2 * d + hi * hd, hd)?;
                let kt = tape.transpose(k);
                let s = tape.matmul(q, kt)?;
                let s = tape.scale(s, inv_sqrt);
                let s = tape.causal_mask(s);
                let a = tape.softmax_rows(s);
                outs.push(tape.matmul(a, v)?);
            }
            let o = tape.concat_cols(&outs)?;
            let o = tape.matmul(o, b(l.w_o))?;
            let o = tape.add_row(o, b(l.b_o))?;
            x = tape.add(x, o)?;

            let h = tape.layernorm(x, b(l.ln2_g), b(l.ln2_b), LN_EPS)?;
            let f = tape.matmul(h, b(l.w1))?;
            let f = tape.add_row(f, b(l.b1))?;
            let f = tape.gelu(f);
            let f = tape.matmul(f, b(l.w2))?;
            let f = tape.add_row(f, b(l.b2))?;
            x = tape.add(x, f)?;
        }
        tape.layernorm(x, b(self.lnf_g), b(self.lnf_b), LN_EPS)
    }

    /// Convenience forward on a fresh tape.
    pub fn run(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let zv = tape.leaf(z.clone(), false);
        let out = self.forward(&mut tape, &bound, zv)?;
        Ok(tape.value(out).clone())
    }

    /// Next-vector pretraining on seeded smooth random trajectories, then
    /// refreezes and locks the weights.
    pub fn pretrain(&mut self, steps: usize, seed: u64) -> Result<PretrainReport> {
        if self.locked {
            return Err(Error::Config("backbone is freeze-locked; pretraining is no longer allowed".into()));
        }
        if steps == 0 {
            self.lock();
            return Ok(PretrainReport {
                initial_loss: f64::NAN,
                final_loss: f64::NAN,
                steps: 0,
            });
        }
        self.params.set_requires_grad(true);
        let mut opt = Adam::new(
            AdamConfig {
                lr: self.cfg.pretrain_lr,
                ..Default::default()
            },
            &self.params,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = self.cfg.max_context.clamp(2, 32);
        let batch = self.cfg.pretrain_batch.max(1);
        let mut losses = Vec::with_capacity(steps);
        for _ in 0..steps {
            let seqs: Vec<Tensor<T>> = (0..batch)
                .map(|_| smooth_sequence(len + 1, self.cfg.dim, &mut rng))
                .collect();
            let mut acc: Vec<Option<Tensor<T>>> = vec![None; self.params.len()];
            let mut total = 0.0;
            for seq in &seqs {
                let mut tape = Tape::new();
                let bound = self.params.bind(&mut tape);
                let s = tape.leaf(seq.clone(), false);
                let input = tape.slice_rows(s, 0, len)?;
                let target = tape.slice_rows(s, 1, len)?;
                let out = self.forward(&mut tape, &bound, input)?;
                let l = tape.mse_sum(out, target)?;
                let l = tape.scale(l, T::c(1.0 / (len * self.cfg.dim * batch) as f64));
                total += tape.value(l).item().to_f64();
                let mut g = tape.backward(l)?;
                for (slot, &v) in acc.iter_mut().zip(&bound) {
                    if let Some(gv) = g.take(v) {
                        match slot {
                            Some(a) => a.data.iter_mut().zip(gv.data).for_each(|(x, y)| *x += y),
                            None => *slot = Some(gv),
                        }
                    }
                }
            }
            losses.push(total);
            opt.step(&mut self.params, &acc);
        }
        self.lock();
        let window = (steps / 10).max(1);
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        Ok(PretrainReport {
            initial_loss: mean(&losses[..window]),
            final_loss: mean(&losses[steps - window..]),
            steps,
        })
    }
}

/// Sum of a few random sinusoids plus a linear drift, per coordinate.
fn smooth_sequence<T: Scalar>(len: usize, dim: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let unit = Uniform::new(-1.0f64, 1.0).expect("valid range");
    let freq = Uniform::new(0.1f64, 0.8).expect("valid range");
    let comps: Vec<(Vec<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let amp = (0..dim).map(|_| unit.sample(rng)).collect();
            (amp, freq.sample(rng), unit.sample(rng) * std::f64::consts::PI)
        })
        .collect();
    let drift: Vec<f64> = (0..dim).map(|_| 0.1 * unit.sample(rng)).collect();
    Tensor::from_fn(len, dim, |t, j| {
        let mut v = drift[j] * t as f64;
        for (amp, w, phase) in &comps {
            v += amp[j] * (w * t as f64 + phase).sin();
        }
        T::c(v)
    })
}
