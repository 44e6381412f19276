use std::sync::Arc;

use super::{Scalar, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    /// Position on the tape.
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Scale(Var, T),
    Gelu(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    CausalMask(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    MseSum(Var, Var),
    Sum(Var),
    MeanRows(Var),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    Transpose(Var),
}

#[derive(Debug)]
struct Node<T> {
    value: Arc<Tensor<T>>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records a computation for one reverse sweep.
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients indexed by [`Var`]; only nodes that require grad have one.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }

    /// Number of materialized gradient buffers.
    pub fn materialized(&self) -> usize {
        self.grads.iter().filter(|g| g.is_some()).count()
    }
}

const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_C: f64 = 0.044715;

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Arc::new(value),
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Value of the `i`-th recorded node.
    pub fn value_at(&self, i: usize) -> &Tensor<T> {
        &self.nodes[i].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    pub fn leaf(&mut self, t: Tensor<T>, requires_grad: bool) -> Var {
        self.push(t, Op::Leaf, requires_grad)
    }

    /// Leaf sharing storage with a parameter.
    pub fn param(&mut self, t: &Arc<Tensor<T>>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Arc::clone(t),
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols != vb.rows {
            return Err(Error::shape("matmul", format!("{:?} x {:?}", va.shape(), vb.shape())));
        }
        let out = mm(va, vb);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data.iter().zip(&vb.data).map(|(&x, &y)| x + y).collect();
        let out = Tensor::new(va.rows, va.cols, data)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    /// `a + 1 bᵀ`: adds the `1 x c` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if vb.rows != 1 || vb.cols != va.cols {
            return Err(Error::shape("add_row", format!("{:?} + row {:?}", va.shape(), vb.shape())));
        }
        let mut out = (*va).clone();
        for r in out.data.chunks_mut(va.cols) {
            r.iter_mut().zip(&vb.data).for_each(|(x, &y)| *x += y);
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::AddRow(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data.iter().zip(&vb.data).map(|(&x, &y)| x - y).collect();
        let out = Tensor::new(va.rows, va.cols, data)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let va = self.value(a);
        let out = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|&x| x * c).collect(),
        };
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, c), rg)
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let (k, c) = (T::c(GELU_K), T::c(GELU_C));
        let half = T::c(0.5);
        let data = va
            .data
            .iter()
            .map(|&x| half * x * (T::one() + (k * (x + c * x * x * x)).tanh()))
            .collect();
        let out = Tensor {
            rows: va.rows,
            cols: va.cols,
            data,
        };
        let rg = self.rg(a);
        self.push(out, Op::Gelu(a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let out = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|x| x.tanh()).collect(),
        };
        let rg = self.rg(a);
        self.push(out, Op::Tanh(a), rg)
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let mut out = (*va).clone();
        for r in out.data.chunks_mut(va.cols.max(1)) {
            let m = r.iter().copied().fold(T::neg_infinity(), T::max);
            let mut s = T::zero();
            for x in r.iter_mut() {
                *x = (*x - m).exp();
                s += *x;
            }
            r.iter_mut().for_each(|x| *x = *x / s);
        }
        let rg = self.rg(a);
        self.push(out, Op::SoftmaxRows(a), rg)
    }

    /// Sets entries above the diagonal (`j > i`) to `-inf`.
    pub fn causal_mask(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let mut out = (*va).clone();
        for i in 0..va.rows {
            for j in (i + 1)..va.cols {
                out.data[i * va.cols + j] = T::neg_infinity();
            }
        }
        let rg = self.rg(a);
        self.push(out, Op::CausalMask(a), rg)
    }

    /// Row-wise layer normalization with `1 x c` gain and bias.
    pub fn layernorm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let (vx, vg, vb) = (self.value(x), self.value(gamma), self.value(beta));
        let c = vx.cols;
        if vg.shape() != (1, c) || vb.shape() != (1, c) {
            return Err(Error::shape(
                "layernorm",
                format!("input {:?}, gamma {:?}, beta {:?}", vx.shape(), vg.shape(), vb.shape()),
            ));
        }
        let n = T::c(c as f64);
        let eps = T::c(eps);
        let mut xhat = Vec::with_capacity(vx.data.len());
        let mut inv_std = Vec::with_capacity(vx.rows);
        let mut out = Vec::with_capacity(vx.data.len());
        for r in vx.data.chunks(c) {
            let mean = r.iter().copied().sum::<T>() / n;
            let var = r.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let inv = T::one() / (var + eps).sqrt();
            inv_std.push(inv);
            for (j, &v) in r.iter().enumerate() {
                let h = (v - mean) * inv;
                xhat.push(h);
                out.push(h * vg.data[j] + vb.data[j]);
            }
        }
        let out = Tensor::new(vx.rows, c, out)?;
        let rg = self.rg(x) || self.rg(gamma) || self.rg(beta);
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            rg,
        ))
    }

    /// `Σ (a - b)²` as a `1 x 1` tensor.
    pub fn mse_sum(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mse_sum", a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let s = va
            .data
            .iter()
            .zip(&vb.data)
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::scalar(s), Op::MseSum(a, b), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().copied().sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    /// Column means as a `1 x c` row.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let va = self.value(a);
        if va.rows == 0 {
            return Err(Error::shape("mean_rows", "no rows"));
        }
        let inv = T::one() / T::c(va.rows as f64);
        let mut out = vec![T::zero(); va.cols];
        for r in va.data.chunks(va.cols) {
            out.iter_mut().zip(r).for_each(|(o, &x)| *o += x);
        }
        out.iter_mut().for_each(|o| *o *= inv);
        let rg = self.rg(a);
        Ok(self.push(Tensor::row_vector(out), Op::MeanRows(a), rg))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let va = self.value(a);
        if start + len > va.rows {
            return Err(Error::shape("slice_rows", format!("rows {start}..{} of {:?}", start + len, va.shape())));
        }
        let data = va.data[start * va.cols..(start + len) * va.cols].to_vec();
        let out = Tensor::new(len, va.cols, data)?;
        let rg = self.rg(a);
        Ok(self.push(out, Op::SliceRows(a, start), rg))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let va = self.value(a);
        if start + len > va.cols {
            return Err(Error::shape("slice_cols", format!("cols {start}..{} of {:?}", start + len, va.shape())));
        }
        let mut data = Vec::with_capacity(va.rows * len);
        for r in va.data.chunks(va.cols) {
            data.extend_from_slice(&r[start..start + len]);
        }
        let out = Tensor::new(va.rows, len, data)?;
        let rg = self.rg(a);
        Ok(self.push(out, Op::SliceCols(a, start), rg))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = parts.first().map(|&p| self.shape(p).1).unwrap_or(0);
        if parts.is_empty() || parts.iter().any(|&p| self.shape(p).1 != cols) {
            return Err(Error::shape("concat_rows", "column counts differ or no inputs"));
        }
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            rows += v.rows;
            data.extend_from_slice(&v.data);
        }
        let out = Tensor::new(rows, cols, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map(|&p| self.shape(p).0).unwrap_or(0);
        if parts.is_empty() || parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(Error::shape("concat_cols", "row counts differ or no inputs"));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        let out = Tensor::new(rows, cols, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = transpose(self.value(a));
        let rg = self.rg(a);
        self.push(out, Op::Transpose(a), rg)
    }

    /// Reverse sweep from a `1 x 1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::shape("backward", format!("loss has shape {:?}", self.shape(loss))));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        if self.rg(loss) {
            grads[loss.0] = Some(Tensor::scalar(T::one()));
        }
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, delta: Tensor<T>) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(g) => g.data.iter_mut().zip(delta.data).for_each(|(a, b)| *a += b),
            slot => *slot = Some(delta),
        }
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, mm_nt(g, self.value(*b)));
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, mm_tn(self.value(*a), g));
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::AddRow(a, b) => {
                self.accumulate(grads, *a, g.clone());
                if self.rg(*b) {
                    let mut col = vec![T::zero(); g.cols];
                    for r in g.data.chunks(g.cols) {
                        col.iter_mut().zip(r).for_each(|(c, &x)| *c += x);
                    }
                    self.accumulate(grads, *b, Tensor::row_vector(col));
                }
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, map(g, |x| -x));
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, map(g, |x| x * *c)),
            Op::Gelu(a) => {
                let x = self.value(*a);
                let (k, c) = (T::c(GELU_K), T::c(GELU_C));
                let half = T::c(0.5);
                let three = T::c(3.0);
                let d = zip(g, x, |gi, xi| {
                    let t = (k * (xi + c * xi * xi * xi)).tanh();
                    let dt = (T::one() - t * t) * k * (T::one() + three * c * xi * xi);
                    gi * (half * (T::one() + t) + half * xi * dt)
                });
                self.accumulate(grads, *a, d);
            }
            Op::Tanh(a) => self.accumulate(grads, *a, zip(g, y, |gi, yi| gi * (T::one() - yi * yi))),
            Op::SoftmaxRows(a) => {
                let mut d = g.clone();
                for (dr, yr) in d.data.chunks_mut(g.cols).zip(y.data.chunks(g.cols)) {
                    let dot: T = dr.iter().zip(yr).map(|(&a, &b)| a * b).sum();
                    dr.iter_mut().zip(yr).for_each(|(x, &yi)| *x = yi * (*x - dot));
                }
                self.accumulate(grads, *a, d);
            }
            Op::CausalMask(a) => {
                let mut d = g.clone();
                for i in 0..g.rows {
                    for j in (i + 1)..g.cols {
                        d.data[i * g.cols + j] = T::zero();
                    }
                }
                self.accumulate(grads, *a, d);
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let c = g.cols;
                let gv = self.value(*gamma);
                if self.rg(*gamma) {
                    let mut dg = vec![T::zero(); c];
                    for (gr, hr) in g.data.chunks(c).zip(xhat.chunks(c)) {
                        dg.iter_mut().zip(gr.iter().zip(hr)).for_each(|(d, (&a, &b))| *d += a * b);
                    }
                    self.accumulate(grads, *gamma, Tensor::row_vector(dg));
                }
                if self.rg(*beta) {
                    let mut db = vec![T::zero(); c];
                    for gr in g.data.chunks(c) {
                        db.iter_mut().zip(gr).for_each(|(d, &a)| *d += a);
                    }
                    self.accumulate(grads, *beta, Tensor::row_vector(db));
                }
                if self.rg(*x) {
                    let n = T::c(c as f64);
                    let mut dx = Vec::with_capacity(g.data.len());
                    for ((gr, hr), &inv) in g.data.chunks(c).zip(xhat.chunks(c)).zip(inv_std) {
                        let dh: Vec<T> = gr.iter().zip(&gv.data).map(|(&a, &b)| a * b).collect();
                        let s1: T = dh.iter().copied().sum();
                        let s2: T = dh.iter().zip(hr).map(|(&a, &b)| a * b).sum();
                        for (&d, &h) in dh.iter().zip(hr) {
                            dx.push(inv / n * (n * d - s1 - h * s2));
                        }
                    }
                    self.accumulate(grads, *x, Tensor { rows: g.rows, cols: c, data: dx });
                }
            }
            Op::MseSum(a, b) => {
                let two = T::c(2.0) * g.item();
                let diff = zip(self.value(*a), self.value(*b), |x, y| two * (x - y));
                if self.rg(*b) {
                    self.accumulate(grads, *b, map(&diff, |x| -x));
                }
                self.accumulate(grads, *a, diff);
            }
            Op::Sum(a) => {
                let (r, c) = self.shape(*a);
                self.accumulate(grads, *a, Tensor::filled(r, c, g.item()));
            }
            Op::MeanRows(a) => {
                let (r, c) = self.shape(*a);
                let inv = T::one() / T::c(r as f64);
                let d = Tensor::from_fn(r, c, |_, j| g.data[j] * inv);
                self.accumulate(grads, *a, d);
            }
            Op::SliceRows(a, start) => {
                let (r, c) = self.shape(*a);
                let mut d = Tensor::zeros(r, c);
                d.data[start * c..start * c + g.data.len()].copy_from_slice(&g.data);
                self.accumulate(grads, *a, d);
            }
            Op::SliceCols(a, start) => {
                let (r, c) = self.shape(*a);
                let mut d = Tensor::zeros(r, c);
                for i in 0..r {
                    d.data[i * c + start..i * c + start + g.cols].copy_from_slice(g.row(i));
                }
                self.accumulate(grads, *a, d);
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).len();
                    if self.rg(p) {
                        let (r, c) = self.shape(p);
                        let d = Tensor { rows: r, cols: c, data: g.data[offset..offset + n].to_vec() };
                        self.accumulate(grads, p, d);
                    }
                    offset += n;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (r, c) = self.shape(p);
                    if self.rg(p) {
                        let d = Tensor::from_fn(r, c, |i, j| g.at(i, offset + j));
                        self.accumulate(grads, p, d);
                    }
                    offset += c;
                }
            }
            Op::Transpose(a) => self.accumulate(grads, *a, transpose(g)),
        }
    }
}

fn map<T: Scalar>(t: &Tensor<T>, f: impl Fn(T) -> T) -> Tensor<T> {
    Tensor {
        rows: t.rows,
        cols: t.cols,
        data: t.data.iter().map(|&x| f(x)).collect(),
    }
}

fn zip<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    Tensor {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

fn transpose<T: Scalar>(a: &Tensor<T>) -> Tensor<T> {
    Tensor::from_fn(a.cols, a.rows, |i, j| a.at(j, i))
}

/// `a b`, `(m x k)(k x n)`.
fn mm<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a.data[i * k + p];
            if aip == T::zero() {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            orow.iter_mut().zip(brow).for_each(|(o, &bv)| *o += aip * bv);
        }
    }
    Tensor { rows: m, cols: n, data: out }
}

/// `a bᵀ`, `(m x n)(k x n)ᵀ`.
fn mm_nt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = (a.rows, b.rows);
    let mut out = Vec::with_capacity(m * k);
    for i in 0..m {
        let ar = a.row(i);
        for j in 0..k {
            out.push(ar.iter().zip(b.row(j)).map(|(&x, &y)| x * y).sum());
        }
    }
    Tensor { rows: m, cols: k, data: out }
}

/// `aᵀ b`, `(m x k)ᵀ(m x n)`.
fn mm_tn<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![T::zero(); k * n];
    for i in 0..m {
        let brow = b.row(i);
        for p in 0..k {
            let aip = a.data[i * k + p];
            if aip == T::zero() {
                continue;
            }
            out[p * n..(p + 1) * n]
                .iter_mut()
                .zip(brow)
                .for_each(|(o, &bv)| *o += aip * bv);
        }
    }
    Tensor { rows: k, cols: n, data: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matmul() {
        let mut t = Tape::<f64>::new();
        let i = t.leaf(Tensor::from_fn(3, 3, |a, b| if a == b { 1.0 } else { 0.0 }), false);
        let x = t.leaf(Tensor::from_fn(3, 2, |a, b| (a * 2 + b) as f64), false);
        let y = t.matmul(i, x).unwrap();
        assert_eq!(t.value(y), t.value(x));
        assert!(t.matmul(x, x).unwrap_err().to_string().contains("matmul"));
    }

    #[test]
    fn softmax_constant_row_and_gelu_zero() {
        let mut t = Tape::<f64>::new();
        let a = t.leaf(Tensor::filled(2, 5, 3.0), false);
        let s = t.softmax_rows(a);
        assert!(t.value(s).data.iter().all(|&x| (x - 0.2).abs() < 1e-15));
        let z = t.leaf(Tensor::zeros(1, 1), false);
        let g = t.gelu(z);
        assert_eq!(t.value(g).item(), 0.0);
    }

    #[test]
    fn sum_of_squares_gradient() {
        let mut t = Tape::<f64>::new();
        let x = t.leaf(Tensor::row_vector(vec![3.0, -1.0]), true);
        let z = t.leaf(Tensor::zeros(1, 2), false);
        let l = t.mse_sum(x, z).unwrap();
        assert_eq!(t.value(l).item(), 10.0);
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data, vec![6.0, -2.0]);
        assert!(g.get(z).is_none());
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut t = Tape::<f64>::new();
        let x = t.leaf(Tensor::zeros(2, 2), true);
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn layernorm_rows_standardized() {
        let mut t = Tape::<f64>::new();
        let x = t.leaf(Tensor::from_fn(3, 6, |i, j| (i * 7 + j * j) as f64 * 0.3 - 1.0), false);
        let g = t.leaf(Tensor::filled(1, 6, 1.0), false);
        let b = t.leaf(Tensor::zeros(1, 6), false);
        let y = t.layernorm(x, g, b, 1e-12).unwrap();
        for r in t.value(y).data.chunks(6) {
            let mean: f64 = r.iter().sum::<f64>() / 6.0;
            let var: f64 = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 6.0;
            assert!(mean.abs() < 1e-6 && (var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mse_of_identical_is_zero_and_frozen_grads_absent() {
        let mut t = Tape::<f32>::new();
        let w = t.leaf(Tensor::filled(2, 2, 0.5), false);
        let x = t.leaf(Tensor::filled(1, 2, 1.0), true);
        let y = t.matmul(x, w).unwrap();
        let l = t.mse_sum(y, y).unwrap();
        assert_eq!(t.value(l).item(), 0.0);
        let g = t.backward(l).unwrap();
        assert!(g.get(w).is_none());
        assert!(g.get(x).is_some());
    }
}
