//! Log-scale popularity metrics.

use crate::{Error, Result};

/// `log2(count + 1)`.
pub fn log_pop(count: f64) -> f64 {
    (count + 1.0).log2()
}

/// Reported count for a log-scale prediction.
pub fn count_from_log(y: f64) -> u64 {
    let c = (y.exp2() - 1.0).round();
    if c.is_finite() && c > 1.0 {
        c as u64
    } else {
        1
    }
}

fn check(pred: &[f64], truth: &[u64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::Validation("metrics need at least one prediction".into()));
    }
    if pred.len() != truth.len() {
        return Err(Error::shape("metrics", format!("{} predictions, {} labels", pred.len(), truth.len())));
    }
    if let Some(i) = truth.iter().position(|&p| p == 0) {
        return Err(Error::Validation(format!("label {i} has popularity 0")));
    }
    Ok(())
}

pub fn msle(pred: &[f64], truth: &[u64]) -> Result<f64> {
    check(pred, truth)?;
    let s: f64 = pred
        .iter()
        .zip(truth)
        .map(|(y, &p)| (y - log_pop(p as f64)).powi(2))
        .sum();
    Ok(s / pred.len() as f64)
}

pub fn mape(pred: &[f64], truth: &[u64]) -> Result<f64> {
    check(pred, truth)?;
    let s: f64 = pred
        .iter()
        .zip(truth)
        .map(|(y, &p)| (y - log_pop(p as f64)).abs() / (p as f64 + 2.0).log2())
        .sum();
    Ok(s / pred.len() as f64)
}
