//! Central finite differences against the reverse sweep, in f64.

use std::sync::Arc;

use autocas::adapter::{inject, AutoCasModel, ShellConfig, Variant};
use autocas::autograd::{ParamId, Params, Tape, Tensor, Var};
use autocas::backbone::{Backbone, BackboneConfig};
use autocas::prompt::{builtin_template, PromptEncoder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

/// Largest relative error seen, with the check that produced it.
#[derive(Debug, Clone, Default)]
pub struct Worst {
    pub error: f64,
    pub name: String,
    pub checks: usize,
}

impl Worst {
    fn record(&mut self, name: &str, e: f64) {
        self.checks += 1;
        if e > self.error || self.name.is_empty() {
            self.error = e;
            self.name = name.to_string();
        }
    }

    fn merge(&mut self, other: Worst) {
        let checks = self.checks + other.checks;
        if other.error > self.error || self.name.is_empty() {
            *self = other;
        }
        self.checks = checks;
    }
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, r: usize, c: usize, std: f64) -> Tensor<f64> {
    let n = Normal::new(0.0, std).unwrap();
    Tensor::from_fn(r, c, |_, _| n.sample(rng))
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// `build` maps leaf vars to any output; the loss is its squared distance
/// to a fixed random target, so every output entry carries gradient.
/// Returns the largest relative error over the inputs.
pub fn check(inputs: Vec<Tensor<f64>>, build: impl Fn(&mut Tape<f64>, &[Var]) -> Var) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let shape = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
        let out = build(&mut tape, &vars);
        tape.shape(out)
    };
    let target = rand_tensor(&mut rng, shape.0, shape.1, 1.0);
    let loss_of = |ins: &[Tensor<f64>], grads: bool| -> (f64, Vec<Tensor<f64>>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ins.iter().map(|t| tape.leaf(t.clone(), true)).collect();
        let out = build(&mut tape, &vars);
        let tv = tape.leaf(target.clone(), false);
        let loss = tape.mse_sum(out, tv).unwrap();
        let value = tape.value(loss).item();
        if !grads {
            return (value, vec![]);
        }
        let g = tape.backward(loss).unwrap();
        let gs = vars
            .iter()
            .zip(ins)
            .map(|(&v, t)| g.get(v).cloned().unwrap_or_else(|| Tensor::zeros(t.rows, t.cols)))
            .collect();
        (value, gs)
    };
    let (_, grads) = loss_of(&inputs, true);
    let mut worst: f64 = 0.0;
    for (k, input) in inputs.iter().enumerate() {
        let mut numeric = vec![0.0; input.len()];
        for i in 0..input.len() {
            let mut plus = inputs.clone();
            plus[k].data[i] += H;
            let mut minus = inputs.clone();
            minus[k].data[i] -= H;
            numeric[i] = (loss_of(&plus, false).0 - loss_of(&minus, false).0) / (2.0 * H);
        }
        worst = worst.max(rel_err(&grads[k].data, &numeric));
    }
    worst
}

pub fn inputs(shapes: &[(usize, usize)]) -> Vec<Tensor<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(shapes.len() as u64 * 31 + shapes[0].0 as u64);
    shapes.iter().map(|&(r, c)| rand_tensor(&mut rng, r, c, 1.0)).collect()
}

pub fn primitives() -> Worst {
    let mut w = Worst::default();
    w.record("matmul", check(inputs(&[(3, 4), (4, 2)]), |t, v| t.matmul(v[0], v[1]).unwrap()));
    w.record("add", check(inputs(&[(3, 4), (3, 4)]), |t, v| t.add(v[0], v[1]).unwrap()));
    w.record("add_row", check(inputs(&[(3, 4), (1, 4)]), |t, v| t.add_row(v[0], v[1]).unwrap()));
    w.record("sub", check(inputs(&[(2, 5), (2, 5)]), |t, v| t.sub(v[0], v[1]).unwrap()));
    w.record("scale", check(inputs(&[(2, 3)]), |t, v| t.scale(v[0], -1.7)));
    w.record("gelu", check(inputs(&[(3, 5)]), |t, v| t.gelu(v[0])));
    w.record("tanh", check(inputs(&[(3, 5)]), |t, v| t.tanh(v[0])));
    w.record("softmax_rows", check(inputs(&[(3, 5)]), |t, v| t.softmax_rows(v[0])));
    w.record(
        "causal_mask+softmax",
        check(inputs(&[(4, 4)]), |t, v| {
            let m = t.causal_mask(v[0]);
            t.softmax_rows(m)
        }),
    );
    w.record(
        "layernorm",
        check(inputs(&[(3, 6), (1, 6), (1, 6)]), |t, v| t.layernorm(v[0], v[1], v[2], 1e-5).unwrap()),
    );
    w.record("mse_sum", check(inputs(&[(2, 3), (2, 3)]), |t, v| t.mse_sum(v[0], v[1]).unwrap()));
    w.record("sum", check(inputs(&[(2, 3)]), |t, v| t.sum(v[0])));
    w.record("mean_rows", check(inputs(&[(4, 3)]), |t, v| t.mean_rows(v[0]).unwrap()));
    w.record("slice_rows", check(inputs(&[(5, 3)]), |t, v| t.slice_rows(v[0], 1, 3).unwrap()));
    w.record("slice_cols", check(inputs(&[(3, 6)]), |t, v| t.slice_cols(v[0], 2, 3).unwrap()));
    w.record(
        "concat_rows",
        check(inputs(&[(2, 3), (1, 3)]), |t, v| t.concat_rows(&[v[0], v[1], v[0]]).unwrap()),
    );
    w.record(
        "concat_cols",
        check(inputs(&[(2, 3), (2, 1)]), |t, v| t.concat_cols(&[v[1], v[0]]).unwrap()),
    );
    w.record("transpose", check(inputs(&[(2, 5)]), |t, v| t.transpose(v[0])));
    w
}

pub fn composites() -> Worst {
    let mut w = Worst::default();
    w.record(
        "attention head",
        check(inputs(&[(4, 6), (6, 6), (6, 6), (6, 6)]), |t, v| {
            let q = t.matmul(v[0], v[1]).unwrap();
            let k = t.matmul(v[0], v[2]).unwrap();
            let val = t.matmul(v[0], v[3]).unwrap();
            let kt = t.transpose(k);
            let s = t.matmul(q, kt).unwrap();
            let s = t.scale(s, 0.4);
            let s = t.causal_mask(s);
            let a = t.softmax_rows(s);
            t.matmul(a, val).unwrap()
        }),
    );
    w.record(
        "mlp with residual",
        check(inputs(&[(3, 4), (4, 8), (1, 8), (8, 4)]), |t, v| {
            let h = t.matmul(v[0], v[1]).unwrap();
            let h = t.add_row(h, v[2]).unwrap();
            let h = t.gelu(h);
            let o = t.matmul(h, v[3]).unwrap();
            let o = t.tanh(o);
            t.add(o, v[0]).unwrap()
        }),
    );
    w.record(
        "reused node",
        check(inputs(&[(3, 3)]), |t, v| {
            let a = t.matmul(v[0], v[0]).unwrap();
            let b = t.sub(a, v[0]).unwrap();
            let c = t.concat_cols(&[b, v[0]]).unwrap();
            t.mean_rows(c).unwrap()
        }),
    );
    w
}

/// Seeded backbone with weights pushed away from the small init scale.
pub fn perturbed_backbone(layers: usize, dim: usize) -> Backbone<f64> {
    let cfg = BackboneConfig {
        dim,
        layers,
        heads: 2,
        ffn_mult: 2,
        max_context: 8,
        init_seed: 3,
        ..Default::default()
    };
    let mut b = Backbone::<f64>::init(&cfg, "backbone.").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.3).unwrap();
    for i in 0..b.params().len() {
        b.params_mut()
            .value_mut(ParamId(i))
            .data
            .iter_mut()
            .for_each(|x| *x += noise.sample(&mut rng));
    }
    b.lock();
    b
}

/// Gradient with respect to the input of a 2-layer, width-16 backbone.
pub fn backbone_input() -> Worst {
    let b = perturbed_backbone(2, 16);
    let mut w = Worst::default();
    w.record(
        "backbone",
        check(inputs(&[(5, 16)]), |t, v| {
            let bound = b.params().bind(t);
            b.forward(t, &bound, v[0]).unwrap()
        }),
    );
    let small = perturbed_backbone(2, 8);
    let p = Tensor::from_fn(3, 8, |i, j| 0.1 * (i as f64 - j as f64));
    w.record(
        "prompt injection then backbone",
        check(inputs(&[(3, 8)]), |t, v| {
            let z = inject(t, v[0], p.clone()).unwrap();
            let bound = small.params().bind(t);
            small.forward(t, &bound, z).unwrap()
        }),
    );
    w
}

fn shell_loss(model: &AutoCasModel<f64>, tape: &mut Tape<f64>, tokens: &Tensor<f64>, target: f64) -> (Var, Vec<Var>) {
    let bound = model.bind(tape);
    let f = model.forward(tape, &bound, tokens).unwrap();
    let y = tape.leaf(Tensor::scalar(target), false);
    let mut l = tape.mse_sum(f.pred, y).unwrap();
    if let Some(tl) = f.token_loss {
        l = tape.add(l, tl).unwrap();
    }
    (l, bound.shell)
}

/// Finite differences over every trainable shell parameter of `model`.
pub fn shell_params(model: &AutoCasModel<f64>, tokens: &Tensor<f64>, target: f64) -> Worst {
    let loss_of = |shell: &Params<f64>| -> f64 {
        let mut m = model.clone();
        *m.shell_mut() = shell.clone();
        let mut tape = Tape::new();
        let (l, _) = shell_loss(&m, &mut tape, tokens, target);
        tape.value(l).item()
    };
    let mut tape = Tape::new();
    let (l, shell) = shell_loss(model, &mut tape, tokens, target);
    let g = tape.backward(l).unwrap();
    let mut w = Worst::default();
    for (i, p) in model.shell().iter().enumerate() {
        if !p.requires_grad {
            continue;
        }
        let analytic = g
            .get(shell[i])
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(p.value.rows, p.value.cols));
        let mut numeric = vec![0.0; p.value.len()];
        for k in 0..p.value.len() {
            let mut plus = model.shell().clone();
            plus.value_mut(ParamId(i)).data[k] += H;
            let mut minus = model.shell().clone();
            minus.value_mut(ParamId(i)).data[k] -= H;
            numeric[k] = (loss_of(&plus) - loss_of(&minus)) / (2.0 * H);
        }
        w.record(
            &format!("{} {}", model.variant(), p.name),
            rel_err(&analytic.data, &numeric),
        );
    }
    w
}

/// Projector, adapter, head and trainable mixers of several variants.
pub fn shells() -> Worst {
    let bb = Arc::new(perturbed_backbone(2, 8));
    let prompt = Arc::new(PromptEncoder::new(builtin_template("weibo").unwrap(), 4096, 8, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tokens = rand_tensor(&mut rng, 4, 6, 1.0);
    let cfg = ShellConfig {
        hidden: Some(8),
        head_hidden: Some(5),
        ..Default::default()
    };
    let mut w = Worst::default();
    for v in [Variant::Full, Variant::WoAuto, Variant::WoMapping, Variant::Llm2Rnn, Variant::Llm2Trans] {
        let m = AutoCasModel::new(v, 6, bb.clone(), Some(prompt.clone()), &cfg).unwrap();
        w.merge(shell_params(&m, &tokens, 2.5));
    }
    w
}
