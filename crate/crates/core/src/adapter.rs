//! Trainable shell around the frozen backbone: projector, prompt
//! injection, adapter, task head, plus the ablation variants.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autograd::{ParamId, Params, Scalar, Tape, Tensor, Var};
use crate::backbone::{Backbone, BackboneConfig};
use crate::prompt::PromptEncoder;
use crate::{Error, Result};

pub const VARIANT_NAMES: [&str; 8] = [
    "full",
    "wo-auto",
    "wo-prompt",
    "wo-mapping",
    "wo-global",
    "wo-llm",
    "llm2trans",
    "llm2rnn",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    Full,
    WoAuto,
    WoPrompt,
    WoMapping,
    WoGlobal,
    WoLlm,
    Llm2Trans,
    Llm2Rnn,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Full,
        Variant::WoAuto,
        Variant::WoPrompt,
        Variant::WoMapping,
        Variant::WoGlobal,
        Variant::WoLlm,
        Variant::Llm2Trans,
        Variant::Llm2Rnn,
    ];

    pub fn name(self) -> &'static str {
        VARIANT_NAMES[self as usize]
    }

    /// Global embeddings are zeroed before fusion.
    pub fn drops_global(self) -> bool {
        self == Variant::WoGlobal
    }

    /// Whether the next-token loss exists for this wiring.
    pub fn autoregressive(self) -> bool {
        self != Variant::WoAuto
    }

    pub fn uses_frozen_backbone(self) -> bool {
        !matches!(self, Variant::WoLlm | Variant::Llm2Trans | Variant::Llm2Rnn)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        VARIANT_NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| Variant::ALL[i])
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'; valid: {}", VARIANT_NAMES.join(", "))))
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShellConfig {
    /// Projector/adapter hidden width; `max(S, D)` when unset.
    pub hidden: Option<usize>,
    /// Task-head hidden width; `D` when unset.
    pub head_hidden: Option<usize>,
    pub init_seed: u64,
    pub prompt_vocab: usize,
    pub prompt_seed: u64,
}

impl Default for ShellConfig {
    fn default() -> Self {
        Self {
            hidden: None,
            head_hidden: None,
            init_seed: 11,
            prompt_vocab: crate::prompt::DEFAULT_VOCAB,
            prompt_seed: 5,
        }
    }
}

/// Either a 2-layer perceptron (GELU hidden) or a single affine map.
#[derive(Debug, Clone, Copy)]
pub enum Map {
    Mlp { w1: ParamId, b1: ParamId, w2: ParamId, b2: ParamId },
    Linear { w: ParamId, b: ParamId },
}

impl Map {
    fn mlp<T: Scalar>(p: &mut Params<T>, rng: &mut ChaCha8Rng, name: &str, dims: (usize, usize, usize)) -> Self {
        let (i, h, o) = dims;
        Map::Mlp {
            w1: p.add(format!("{name}.w1"), fan_in_init(rng, i, h), true),
            b1: p.add(format!("{name}.b1"), Tensor::zeros(1, h), true),
            w2: p.add(format!("{name}.w2"), fan_in_init(rng, h, o), true),
            b2: p.add(format!("{name}.b2"), Tensor::zeros(1, o), true),
        }
    }

    fn linear<T: Scalar>(p: &mut Params<T>, rng: &mut ChaCha8Rng, name: &str, i: usize, o: usize) -> Self {
        Map::Linear {
            w: p.add(format!("{name}.w"), fan_in_init(rng, i, o), true),
            b: p.add(format!("{name}.b"), Tensor::zeros(1, o), true),
        }
    }

    pub fn apply<T: Scalar>(&self, tape: &mut Tape<T>, bound: &[Var], x: Var) -> Result<Var> {
        match *self {
            Map::Mlp { w1, b1, w2, b2 } => {
                let h = tape.matmul(x, bound[w1.0])?;
                let h = tape.add_row(h, bound[b1.0])?;
                let h = tape.gelu(h);
                let o = tape.matmul(h, bound[w2.0])?;
                tape.add_row(o, bound[b2.0])
            }
            Map::Linear { w, b } => {
                let o = tape.matmul(x, bound[w.0])?;
                tape.add_row(o, bound[b.0])
            }
        }
    }

    fn ids(&self) -> Vec<ParamId> {
        match *self {
            Map::Mlp { w1, b1, w2, b2 } => vec![w1, b1, w2, b2],
            Map::Linear { w, b } => vec![w, b],
        }
    }

    fn output_bias(&self) -> ParamId {
        match *self {
            Map::Mlp { b2, .. } => b2,
            Map::Linear { b, .. } => b,
        }
    }
}

fn fan_in_init<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<T> {
    let n = Normal::new(0.0, (1.0 / rows as f64).sqrt()).expect("positive std");
    Tensor::from_fn(rows, cols, |_, _| T::c(n.sample(rng)))
}

#[derive(Debug, Clone)]
enum Mixer<T> {
    Frozen(Arc<Backbone<T>>),
    Identity,
    /// Trainable block; parameters live in the shell starting at `offset`.
    Trans { layout: Box<Backbone<T>>, offset: usize, len: usize },
    Rnn { w_in: ParamId, w_h: ParamId, b: ParamId },
}

/// Tape handles for one forward pass.
#[derive(Debug, Clone)]
pub struct Bound {
    pub shell: Vec<Var>,
    pub backbone: Vec<Var>,
}

/// Outputs of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct Forward {
    /// Log-scale popularity `1 x 1`.
    pub pred: Var,
    /// Mean squared next-token error `1 x 1`; absent without autoregression.
    pub token_loss: Option<Var>,
}

/// Backbone plus trainable shell for one variant.
#[derive(Debug, Clone)]
pub struct AutoCasModel<T> {
    variant: Variant,
    token_size: usize,
    dim: usize,
    shell: Params<T>,
    projector: Map,
    adapter: Map,
    head: Map,
    mixer: Mixer<T>,
    prompt: Option<Arc<PromptEncoder>>,
    prompt_rows: Tensor<T>,
}

impl<T: Scalar> AutoCasModel<T> {
    /// `backbone` must be frozen; variants that replace it ignore it except
    /// for its configuration.
    pub fn new(
        variant: Variant,
        token_size: usize,
        backbone: Arc<Backbone<T>>,
        prompt: Option<Arc<PromptEncoder>>,
        cfg: &ShellConfig,
    ) -> Result<Self> {
        let bcfg = backbone.config().clone();
        let d = bcfg.dim;
        if token_size == 0 {
            return Err(Error::Config("token size must be positive".into()));
        }
        if !backbone.is_frozen() {
            return Err(Error::Validation("backbone tensors must be frozen".into()));
        }
        if let Some(p) = &prompt {
            if p.dim() != d {
                return Err(Error::shape("prompt", format!("prompt dim {} vs model dim {d}", p.dim())));
            }
        }
        let hidden = cfg.hidden.unwrap_or(token_size.max(d));
        let head_hidden = cfg.head_hidden.unwrap_or(d);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
        let mut shell = Params::new();
        let (projector, adapter) = if variant == Variant::WoMapping {
            (
                Map::linear(&mut shell, &mut rng, "projector", token_size, d),
                Map::linear(&mut shell, &mut rng, "adapter", d, token_size),
            )
        } else {
            (
                Map::mlp(&mut shell, &mut rng, "projector", (token_size, hidden, d)),
                Map::mlp(&mut shell, &mut rng, "adapter", (d, hidden, token_size)),
            )
        };
        let head = Map::mlp(&mut shell, &mut rng, "head", (token_size, head_hidden, 1));
        let mixer = match variant {
            Variant::WoLlm => Mixer::Identity,
            Variant::Llm2Trans => {
                let layout = Backbone::init(
                    &BackboneConfig {
                        layers: 1,
                        init_seed: cfg.init_seed ^ 0x5eed,
                        ..bcfg.clone()
                    },
                    "mixer.",
                )?
                .into_trainable();
                let offset = shell.extend(layout.params());
                let len = layout.params().len();
                Mixer::Trans {
                    layout: Box::new(layout),
                    offset,
                    len,
                }
            }
            Variant::Llm2Rnn => Mixer::Rnn {
                w_in: shell.add("mixer.w_in", fan_in_init(&mut rng, d, d), true),
                w_h: shell.add("mixer.w_h", fan_in_init(&mut rng, d, d), true),
                b: shell.add("mixer.b", Tensor::zeros(1, d), true),
            },
            _ => Mixer::Frozen(backbone),
        };
        let prompt = if variant == Variant::WoPrompt || variant == Variant::WoAuto {
            None
        } else {
            prompt
        };
        let prompt_rows = match &prompt {
            Some(p) => p.table(bcfg.max_context)?,
            None => Tensor::zeros(0, d),
        };
        let model = Self {
            variant,
            token_size,
            dim: d,
            shell,
            projector,
            adapter,
            head,
            mixer,
            prompt,
            prompt_rows,
        };
        model.audit()?;
        Ok(model)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn token_size(&self) -> usize {
        self.token_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shell(&self) -> &Params<T> {
        &self.shell
    }

    pub fn shell_mut(&mut self) -> &mut Params<T> {
        &mut self.shell
    }

    pub fn backbone(&self) -> Option<&Backbone<T>> {
        match &self.mixer {
            Mixer::Frozen(b) => Some(b),
            _ => None,
        }
    }

    pub fn learnable_params(&self) -> usize {
        self.shell.trainable_count()
    }

    pub fn total_params(&self) -> usize {
        self.shell.count() + self.backbone().map_or(0, |b| b.params().count())
    }

    /// Only shell tensors under the known prefixes may be trainable.
    pub fn audit(&self) -> Result<()> {
        const PREFIXES: [&str; 4] = ["projector.", "adapter.", "head.", "mixer."];
        if let Some(b) = self.backbone() {
            if let Some(p) = b.params().iter().find(|p| p.requires_grad) {
                return Err(Error::Validation(format!("backbone tensor {} is trainable", p.name)));
            }
        }
        if let Some(p) = self
            .shell
            .iter()
            .find(|p| p.requires_grad && !PREFIXES.iter().any(|pre| p.name.starts_with(pre)))
        {
            return Err(Error::Validation(format!("unexpected trainable tensor {}", p.name)));
        }
        Ok(())
    }

    /// Sets the scalar output bias of the task head.
    pub fn set_head_bias(&mut self, value: f64) {
        let b = self.head.output_bias();
        self.shell.value_mut(b).data[0] = T::c(value);
    }

    pub fn projector_ids(&self) -> Vec<ParamId> {
        self.projector.ids()
    }

    pub fn adapter_ids(&self) -> Vec<ParamId> {
        self.adapter.ids()
    }

    pub fn head_ids(&self) -> Vec<ParamId> {
        self.head.ids()
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> Bound {
        Bound {
            shell: self.shell.bind(tape),
            backbone: self.backbone().map(|b| b.params().bind(tape)).unwrap_or_default(),
        }
    }

    /// Longest token sequence accepted.
    pub fn max_tokens(&self) -> usize {
        match &self.mixer {
            Mixer::Frozen(b) => b.config().max_context + 1,
            Mixer::Trans { layout, .. } => layout.config().max_context + 1,
            Mixer::Identity | Mixer::Rnn { .. } => usize::MAX,
        }
    }

    pub fn project(&self, tape: &mut Tape<T>, bound: &Bound, t: Var) -> Result<Var> {
        self.check_width(tape, t, self.token_size, "project")?;
        self.projector.apply(tape, &bound.shell, t)
    }

    pub fn adapt(&self, tape: &mut Tape<T>, bound: &Bound, z: Var) -> Result<Var> {
        self.check_width(tape, z, self.dim, "adapt")?;
        self.adapter.apply(tape, &bound.shell, z)
    }

    pub fn head(&self, tape: &mut Tape<T>, bound: &Bound, t: Var) -> Result<Var> {
        self.check_width(tape, t, self.token_size, "task_head")?;
        self.head.apply(tape, &bound.shell, t)
    }

    fn check_width(&self, tape: &Tape<T>, v: Var, want: usize, op: &'static str) -> Result<()> {
        let (_, c) = tape.shape(v);
        if c != want {
            return Err(Error::shape(op, format!("width {c}, expected {want}")));
        }
        Ok(())
    }

    /// Prompt rows `P_1..P_n`, or `None` when the wiring skips prompts.
    pub fn prompts(&self, n: usize) -> Result<Option<Tensor<T>>> {
        let Some(p) = &self.prompt else { return Ok(None) };
        if n <= self.prompt_rows.rows {
            let d = self.dim;
            return Tensor::new(n, d, self.prompt_rows.data[..n * d].to_vec()).map(Some);
        }
        p.table(n).map(Some)
    }

    fn mix(&self, tape: &mut Tape<T>, bound: &Bound, z: Var) -> Result<Var> {
        match &self.mixer {
            Mixer::Frozen(b) => b.forward(tape, &bound.backbone, z),
            Mixer::Identity => Ok(z),
            Mixer::Trans { layout, offset, len } => layout.forward(tape, &bound.shell[*offset..offset + len], z),
            Mixer::Rnn { w_in, w_h, b } => {
                let (n, _) = tape.shape(z);
                let xin = tape.matmul(z, bound.shell[w_in.0])?;
                let mut rows = Vec::with_capacity(n);
                let mut h: Option<Var> = None;
                for t in 0..n {
                    let mut a = tape.slice_rows(xin, t, 1)?;
                    if let Some(prev) = h {
                        let r = tape.matmul(prev, bound.shell[w_h.0])?;
                        a = tape.add(a, r)?;
                    }
                    let a = tape.add_row(a, bound.shell[b.0])?;
                    let hv = tape.tanh(a);
                    rows.push(hv);
                    h = Some(hv);
                }
                tape.concat_rows(&rows)
            }
        }
    }

    /// Full pass over one cascade's `N x S` tokens.
    pub fn forward(&self, tape: &mut Tape<T>, bound: &Bound, tokens: &Tensor<T>) -> Result<Forward> {
        let (n, s) = tokens.shape();
        if s != self.token_size {
            return Err(Error::shape("forward", format!("token size {s}, expected {}", self.token_size)));
        }
        if !self.variant.autoregressive() {
            if n == 0 {
                return Err(Error::Validation("empty token sequence".into()));
            }
            let x = tape.leaf(tokens.clone(), false);
            let pooled = tape.mean_rows(x)?;
            let pred = self.head(tape, bound, pooled)?;
            return Ok(Forward { pred, token_loss: None });
        }
        if n < 2 {
            return Err(Error::Validation(format!("need at least 2 tokens, got {n}")));
        }
        if n > self.max_tokens() {
            return Err(Error::ContextOverflow {
                len: n - 1,
                max: self.max_tokens() - 1,
            });
        }
        let all = tape.leaf(tokens.clone(), false);
        let input = tape.slice_rows(all, 0, n - 1)?;
        let target = tape.slice_rows(all, 1, n - 1)?;
        let mut z = self.project(tape, bound, input)?;
        if let Some(p) = self.prompts(n - 1)? {
            z = inject(tape, z, p)?;
        }
        let zh = self.mix(tape, bound, z)?;
        let that = self.adapt(tape, bound, zh)?;
        let tl = token_loss(tape, that, target)?;
        let last = tape.slice_rows(that, n - 2, 1)?;
        let pred = self.head(tape, bound, last)?;
        Ok(Forward {
            pred,
            token_loss: Some(tl),
        })
    }

    /// Log-scale prediction for one sequence.
    pub fn predict(&self, tokens: &Tensor<T>) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let f = self.forward(&mut tape, &bound, tokens)?;
        Ok(tape.value(f.pred).item().to_f64())
    }

    pub fn cast<U: Scalar>(&self) -> AutoCasModel<U> {
        AutoCasModel {
            variant: self.variant,
            token_size: self.token_size,
            dim: self.dim,
            shell: self.shell.cast(),
            projector: self.projector,
            adapter: self.adapter,
            head: self.head,
            mixer: match &self.mixer {
                Mixer::Frozen(b) => Mixer::Frozen(Arc::new(b.cast())),
                Mixer::Identity => Mixer::Identity,
                Mixer::Trans { layout, offset, len } => Mixer::Trans {
                    layout: Box::new(layout.cast()),
                    offset: *offset,
                    len: *len,
                },
                Mixer::Rnn { w_in, w_h, b } => Mixer::Rnn {
                    w_in: *w_in,
                    w_h: *w_h,
                    b: *b,
                },
            },
            prompt: self.prompt.clone(),
            prompt_rows: self.prompt_rows.cast(),
        }
    }
}

/// `Z + P` with `P` a frozen constant.
pub fn inject<T: Scalar>(tape: &mut Tape<T>, z: Var, p: Tensor<T>) -> Result<Var> {
    if tape.shape(z) != p.shape() {
        return Err(Error::shape("inject", format!("{:?} vs {:?}", tape.shape(z), p.shape())));
    }
    let pv = tape.leaf(p, false);
    tape.add(z, pv)
}

/// `(1/(N-1)) Σ ||T_n - T̂_n||²` over the supervised rows.
pub fn token_loss<T: Scalar>(tape: &mut Tape<T>, pred: Var, target: Var) -> Result<Var> {
    let (rows, _) = tape.shape(pred);
    if rows == 0 {
        return Err(Error::Validation("token loss needs at least 2 tokens".into()));
    }
    let s = tape.mse_sum(pred, target)?;
    Ok(tape.scale(s, T::c(1.0 / rows as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{builtin_template, DEFAULT_VOCAB};

    fn backbone(layers: usize) -> Arc<Backbone<f64>> {
        Arc::new(
            Backbone::init(
                &BackboneConfig {
                    dim: 8,
                    layers,
                    heads: 2,
                    max_context: 12,
                    ..Default::default()
                },
                "backbone.",
            )
            .unwrap(),
        )
    }

    fn prompt() -> Arc<PromptEncoder> {
        Arc::new(PromptEncoder::new(builtin_template("synthetic").unwrap(), DEFAULT_VOCAB, 8, 1).unwrap())
    }

    fn tokens(n: usize, s: usize) -> Tensor<f64> {
        Tensor::from_fn(n, s, |i, j| ((i * s + j) as f64 * 0.3).cos())
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        let e = "gpt".parse::<Variant>().unwrap_err().to_string();
        assert!(e.contains("llm2rnn") && e.contains("wo-auto"));
    }

    #[test]
    fn every_variant_runs() {
        for v in Variant::ALL {
            let m = AutoCasModel::new(v, 6, backbone(2), Some(prompt()), &ShellConfig::default()).unwrap();
            let y = m.predict(&tokens(5, 6)).unwrap();
            assert!(y.is_finite(), "{v}");
            m.audit().unwrap();
        }
    }

    #[test]
    fn token_loss_closed_form() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::filled(1, 4, 0.5), false);
        let b = tape.leaf(Tensor::zeros(1, 4), false);
        let l = token_loss(&mut tape, a, b).unwrap();
        assert_eq!(tape.value(l).item(), 1.0);
        let a3 = tape.leaf(Tensor::filled(1, 4, 1.5), false);
        let l3 = token_loss(&mut tape, a3, b).unwrap();
        assert_eq!(tape.value(l3).item(), 9.0);
        let same = token_loss(&mut tape, a, a).unwrap();
        assert_eq!(tape.value(same).item(), 0.0);
    }

    #[test]
    fn inject_identities() {
        let mut tape = Tape::<f64>::new();
        let z0 = tokens(3, 8);
        let z = tape.leaf(z0.clone(), true);
        let same = inject(&mut tape, z, Tensor::zeros(3, 8)).unwrap();
        assert_eq!(tape.value(same), &z0);
        let p = Tensor::from_fn(3, 8, |i, j| (i + j) as f64 * 0.25);
        let neg = Tensor::from_fn(3, 8, |i, j| -((i + j) as f64 * 0.25));
        let a = inject(&mut tape, z, p).unwrap();
        let back = inject(&mut tape, a, neg).unwrap();
        for (x, y) in tape.value(back).data.iter().zip(&z0.data) {
            assert!((x - y).abs() <= 4.0 * f64::EPSILON);
        }
        assert!(inject(&mut tape, z, Tensor::zeros(2, 8)).is_err());
    }

    #[test]
    fn zero_maps_give_zero() {
        let mut m = AutoCasModel::new(Variant::Full, 6, backbone(2), None, &ShellConfig::default()).unwrap();
        for id in m.projector_ids().into_iter().chain(m.adapter_ids()) {
            m.shell_mut().value_mut(id).data.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut tape = Tape::new();
        let bound = m.bind(&mut tape);
        let t = tape.leaf(tokens(4, 6), false);
        let z = m.project(&mut tape, &bound, t).unwrap();
        assert_eq!(tape.shape(z), (4, 8));
        assert!(tape.value(z).data.iter().all(|&x| x == 0.0));
        let a = m.adapt(&mut tape, &bound, z).unwrap();
        assert_eq!(tape.shape(a), (4, 6));
        assert!(tape.value(a).data.iter().all(|&x| x == 0.0));
        let bad = tape.leaf(tokens(4, 5), false);
        assert!(m.project(&mut tape, &bound, bad).is_err());
    }

    #[test]
    fn zero_prompt_matches_wo_prompt() {
        let cfg = ShellConfig::default();
        let full = AutoCasModel::new(Variant::Full, 6, backbone(2), Some(Arc::new(PromptEncoder::zero(8))), &cfg).unwrap();
        let wo = AutoCasModel::new(Variant::WoPrompt, 6, backbone(2), Some(prompt()), &cfg).unwrap();
        let t = tokens(6, 6);
        assert_eq!(full.predict(&t).unwrap(), wo.predict(&t).unwrap());
    }

    #[test]
    fn parameter_accounting() {
        let cfg = ShellConfig::default();
        let mut prev_ratio = f64::INFINITY;
        let mut learnable = None;
        for layers in [2, 4, 8] {
            let m = AutoCasModel::new(Variant::Full, 6, backbone(layers), None, &cfg).unwrap();
            let l = m.learnable_params();
            assert_eq!(*learnable.get_or_insert(l), l);
            let ratio = l as f64 / m.total_params() as f64;
            assert!(ratio < prev_ratio);
            prev_ratio = ratio;
        }
        let full = AutoCasModel::new(Variant::Full, 6, backbone(2), None, &cfg).unwrap();
        let wo = AutoCasModel::new(Variant::WoLlm, 6, backbone(2), None, &cfg).unwrap();
        assert!(wo.total_params() < full.total_params());
    }

    #[test]
    fn context_overflow_is_reported() {
        let m = AutoCasModel::new(Variant::Full, 6, backbone(2), Some(prompt()), &ShellConfig::default()).unwrap();
        assert!(m.predict(&tokens(13, 6)).is_ok());
        let e = m.predict(&tokens(14, 6)).unwrap_err();
        assert!(e.to_string().contains("max_context"), "{e}");
        let rnn = AutoCasModel::new(Variant::Llm2Rnn, 6, backbone(2), Some(prompt()), &ShellConfig::default()).unwrap();
        assert!(rnn.predict(&tokens(20, 6)).is_ok());
    }
}
