use serde::{Deserialize, Serialize};

use super::{ParamId, Params, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction; state is kept per trainable parameter.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    cfg: AdamConfig,
    step: i32,
    m: Vec<Option<Vec<T>>>,
    v: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: AdamConfig, params: &Params<T>) -> Self {
        let state = || {
            params
                .iter()
                .map(|p| p.requires_grad.then(|| vec![T::zero(); p.value.len()]))
                .collect()
        };
        Self {
            cfg,
            step: 0,
            m: state(),
            v: state(),
        }
    }

    /// One update; `grads[i]` belongs to parameter `i`. Frozen parameters
    /// and missing gradients are skipped.
    pub fn step(&mut self, params: &mut Params<T>, grads: &[Option<Tensor<T>>]) {
        self.step += 1;
        let (b1, b2) = (self.cfg.beta1, self.cfg.beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let lr = T::c(self.cfg.lr);
        let eps = T::c(self.cfg.eps);
        let (tb1, tb2) = (T::c(b1), T::c(b2));
        let (tc1, tc2) = (T::c(c1), T::c(c2));
        for (i, g) in grads.iter().enumerate() {
            let (Some(g), Some(m), Some(v)) = (g, self.m[i].as_mut(), self.v[i].as_mut()) else {
                continue;
            };
            let w = params.value_mut(ParamId(i));
            for k in 0..w.data.len() {
                let gk = g.data[k];
                m[k] = tb1 * m[k] + (T::one() - tb1) * gk;
                v[k] = tb2 * v[k] + (T::one() - tb2) * gk * gk;
                let mh = m[k] / tc1;
                let vh = v[k] / tc2;
                w.data[k] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::Tape;

    #[test]
    fn minimizes_quadratic_and_skips_frozen() {
        let mut p = Params::<f64>::new();
        let x = p.add("x", Tensor::row_vector(vec![2.0, -3.0]), true);
        let frozen = p.add("f", Tensor::row_vector(vec![1.0]), false);
        let mut opt = Adam::new(AdamConfig { lr: 0.05, ..Default::default() }, &p);
        for _ in 0..500 {
            let mut t = Tape::new();
            let vars = p.bind(&mut t);
            let z = t.leaf(Tensor::zeros(1, 2), false);
            let l = t.mse_sum(vars[x.0], z).unwrap();
            let mut g = t.backward(l).unwrap();
            let grads: Vec<_> = vars.iter().map(|&v| g.take(v)).collect();
            assert!(grads[frozen.0].is_none());
            opt.step(&mut p, &grads);
        }
        assert!(p.get(x).data.iter().all(|v| v.abs() < 1e-2));
        assert_eq!(p.get(frozen).data, vec![1.0]);
    }
}
