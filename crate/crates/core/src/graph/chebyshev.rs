use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::CsrMatrix;
use crate::{Error, Result};

pub const DEFAULT_CHEB_ORDER: usize = 30;

const GRID_POINTS: usize = 1000;

/// Truncated Chebyshev expansion of a spectral filter on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebFilter {
    coefficients: Vec<f64>,
    interval: (f64, f64),
}

impl ChebFilter {
    pub fn new(coefficients: Vec<f64>, interval: (f64, f64)) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::Config("Chebyshev filter needs order K >= 1".into()));
        }
        if !(interval.1 > interval.0) {
            return Err(Error::Config(format!(
                "Chebyshev interval [{}, {}] is empty",
                interval.0, interval.1
            )));
        }
        Ok(Self {
            coefficients,
            interval,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    fn to_unit(&self, x: f64) -> f64 {
        let (lo, hi) = self.interval;
        (2.0 * x - (hi + lo)) / (hi - lo)
    }

    /// Evaluates the expansion at `x` (Clenshaw recurrence).
    pub fn eval(&self, x: f64) -> f64 {
        let y = self.to_unit(x);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coefficients.iter().skip(1).rev() {
            let b0 = 2.0 * y * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        y * b1 - b2 + self.coefficients[0]
    }

    /// Sup-norm error against `g` on a uniform grid of 1000 points.
    pub fn grid_error(&self, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.interval;
        (0..GRID_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
            .map(|x| (self.eval(x) - g(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Interpolates `g` at the `K + 1` Chebyshev nodes of `interval`.
pub fn cheb_fit(g: impl Fn(f64) -> f64, interval: (f64, f64), order: usize) -> Result<ChebFilter> {
    if order < 1 {
        return Err(Error::Config("Chebyshev filter needs order K >= 1".into()));
    }
    let (lo, hi) = interval;
    let m = order + 1;
    let samples: Vec<f64> = (0..m)
        .map(|j| {
            let y = (PI * (j as f64 + 0.5) / m as f64).cos();
            g(0.5 * (hi - lo) * y + 0.5 * (hi + lo))
        })
        .collect();
    let coefficients = (0..m)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .enumerate()
                .map(|(j, &f)| f * (PI * k as f64 * (j as f64 + 0.5) / m as f64).cos())
                .sum();
            let c = 2.0 * s / m as f64;
            if k == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect();
    ChebFilter::new(coefficients, interval)
}

/// Fits the heat kernel `e^{-sλ}` and checks it against `tolerance` on the
/// evaluation grid.
pub fn cheb_fit_heat(
    scale: f64,
    interval: (f64, f64),
    order: usize,
    tolerance: f64,
) -> Result<ChebFilter> {
    if !(scale > 0.0) {
        return Err(Error::Config(format!("heat scale must be positive, got {scale}")));
    }
    let g = |x: f64| (-scale * x).exp();
    let filter = cheb_fit(g, interval, order)?;
    let err = filter.grid_error(g);
    if err > tolerance {
        return Err(Error::Numeric(format!(
            "heat kernel s={scale} at order {order} reaches grid error {err:.3e} > tolerance {tolerance:.3e}"
        )));
    }
    Ok(filter)
}

/// `g(L) X` by the three-term recurrence; `L` stays sparse throughout.
pub fn cheb_apply(filter: &ChebFilter, l: &CsrMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if l.rows() != l.cols() || l.cols() != x.nrows() {
        return Err(Error::shape(
            "cheb_apply",
            format!("L is {}x{}, X is {}x{}", l.rows(), l.cols(), x.nrows(), x.ncols()),
        ));
    }
    let (lo, hi) = filter.interval;
    let a = 2.0 / (hi - lo);
    let b = -(hi + lo) / (hi - lo);
    let shifted = |v: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mut out = l.mul_dense(v)?;
        out *= a;
        out += v * b;
        Ok(out)
    };

    let c = &filter.coefficients;
    let mut prev = x.clone();
    let mut cur = shifted(x)?;
    let mut out = x * c[0] + &cur * c[1];
    for &ck in &c[2..] {
        let mut next = shifted(&cur)?;
        next *= 2.0;
        next -= &prev;
        out += &next * ck;
        prev = cur;
        cur = next;
    }
    Ok(out)
}
