//! Minimal dense reverse-mode autodiff over row-major matrices.
//!
//! A [`Tape`] records primitive applications in execution order, which is
//! already a topological order, so [`Tape::backward`] is a single reverse
//! sweep. Values are generic over [`Scalar`]: training runs in `f32`, the
//! finite-difference checks in `f64`.

mod optim;
mod tape;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};
use std::sync::Arc;

use num_traits::Float;

use crate::{Error, Result};

pub use optim::{Adam, AdamConfig};
pub use tape::{Gradients, Tape, Var};

pub trait Scalar:
    Float + Default + Debug + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    fn c(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn c(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn c(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Row-major matrix. Vectors are `1 x n`, scalars `1 x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "tensor",
                format!("{} values for shape {rows}x{cols}", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, v: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn scalar(v: T) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn row_vector(data: Vec<T>) -> Self {
        Self {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::c(x.to_f64())).collect(),
        }
    }

    pub fn item(&self) -> T {
        self.data[0]
    }
}

/// A named tensor plus its trainability flag.
#[derive(Debug, Clone)]
pub struct Param<T> {
    pub name: String,
    pub value: Arc<Tensor<T>>,
    pub requires_grad: bool,
}

/// Ordered collection of named parameters.
#[derive(Debug, Clone, Default)]
pub struct Params<T> {
    entries: Vec<Param<T>>,
}

/// Index of a parameter inside its [`Params`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub usize);

impl<T: Scalar> Params<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>, requires_grad: bool) -> ParamId {
        self.entries.push(Param {
            name: name.into(),
            value: Arc::new(value),
            requires_grad,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.entries.iter()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].value
    }

    pub fn entry(&self, id: ParamId) -> &Param<T> {
        &self.entries[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries.iter().find(|p| p.name == name).map(|p| &*p.value)
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        Arc::make_mut(&mut self.entries[id.0].value)
    }

    /// Appends copies of `other`'s entries; returns the index of the first.
    pub fn extend(&mut self, other: &Params<T>) -> usize {
        let offset = self.entries.len();
        self.entries.extend(other.entries.iter().cloned());
        offset
    }

    pub fn set_requires_grad(&mut self, on: bool) {
        self.entries.iter_mut().for_each(|p| p.requires_grad = on);
    }

    /// Total number of scalar values.
    pub fn count(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|p| p.requires_grad)
            .map(|p| p.value.len())
            .sum()
    }

    /// Places every parameter on `tape` as a leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.entries
            .iter()
            .map(|p| tape.param(&p.value, p.requires_grad))
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> Params<U> {
        Params {
            entries: self
                .entries
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: Arc::new(p.value.cast()),
                    requires_grad: p.requires_grad,
                })
                .collect(),
        }
    }

    /// Replaces values by name; every stored name must be present.
    pub fn load_named<'a>(&mut self, named: impl IntoIterator<Item = (&'a str, &'a Tensor<f32>)>) -> Result<()> {
        let map: std::collections::HashMap<&str, &Tensor<f32>> = named.into_iter().collect();
        for p in &mut self.entries {
            let t = map
                .get(p.name.as_str())
                .ok_or_else(|| Error::Format(format!("checkpoint lacks tensor {}", p.name)))?;
            if t.shape() != p.value.shape() {
                return Err(Error::shape(
                    "load_named",
                    format!("{}: {:?} vs {:?}", p.name, t.shape(), p.value.shape()),
                ));
            }
            p.value = Arc::new(t.cast());
        }
        Ok(())
    }

    /// FNV-1a over names and raw value bits.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for p in &self.entries {
            eat(p.name.as_bytes());
            for &x in &p.value.data {
                eat(&x.to_f64().to_bits().to_le_bytes());
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_bookkeeping() {
        let mut p = Params::<f32>::new();
        let a = p.add("a", Tensor::zeros(2, 3), true);
        p.add("b", Tensor::zeros(1, 3), false);
        assert_eq!(p.count(), 9);
        assert_eq!(p.trainable_count(), 6);
        let before = p.checksum();
        p.value_mut(a).data[0] = 1.0;
        assert_ne!(before, p.checksum());
        assert!(p.by_name("b").is_some());
        assert!(Tensor::<f32>::new(2, 2, vec![0.0; 3]).is_err());
    }
}
