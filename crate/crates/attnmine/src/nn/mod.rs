//! Deterministic numeric kernel: the handful of differentiable operations
//! the classifier needs, an Adam optimizer, and finite-difference gradient
//! checking. Everything is double precision and free of global state; random
//! sources are explicit parameters.

mod adam;
mod tensor;

pub use adam::AdamState;
pub use tensor::Tensor;

use rand::rngs::StdRng;
use rand::Rng;

use crate::error::{Error, Result};

/// Numerically stable softmax (max subtraction). The output is nonnegative
/// and sums to 1 within 1e-12.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("softmax of empty vector".into()));
    }
    if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite score {bad} in softmax")));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Shannon entropy -sum(a * ln a) of a probability vector, with the
/// convention 0 * ln 0 = 0. Rejects vectors with negative entries or whose
/// mass is not 1 within 1e-6.
pub fn entropy(alpha: &[f64]) -> Result<f64> {
    if alpha.is_empty() {
        return Err(Error::InvalidInput("entropy of empty vector".into()));
    }
    if let Some(bad) = alpha.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "entropy: invalid probability entry {bad}"
        )));
    }
    let sum: f64 = alpha.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "entropy: probabilities sum to {sum}, not 1"
        )));
    }
    Ok(alpha
        .iter()
        .map(|&a| if a > 0.0 { -a * a.ln() } else { 0.0 })
        .sum())
}

/// Inverted-dropout mask: each entry is 0 with probability `rate` and
/// 1/(1-rate) otherwise, so the expectation of a masked value is unchanged.
/// Evaluation-mode callers simply do not apply a mask.
pub fn dropout_mask(shape: &[usize], rate: f64, rng: &mut StdRng) -> Result<Tensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidInput(format!(
            "dropout rate {rate} outside [0, 1)"
        )));
    }
    let keep = 1.0 / (1.0 - rate);
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect();
    Tensor::new(shape.to_vec(), data)
}

/// Compare an analytic gradient against central finite differences,
/// coordinate by coordinate. Returns the maximum relative error
/// |a - n| / max(1e-8, |a| + |n|).
pub fn grad_check<F>(mut f: F, params: &Tensor, analytic: &Tensor, h: f64) -> Result<f64>
where
    F: FnMut(&Tensor) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::InvalidInput(format!("grad_check step {h} <= 0")));
    }
    if !params.same_shape(analytic) {
        return Err(Error::Shape(format!(
            "grad_check: params {:?} vs analytic {:?}",
            params.shape(),
            analytic.shape()
        )));
    }
    let mut work = params.clone();
    let mut max_err = 0.0f64;
    for i in 0..params.len() {
        let orig = params.data()[i];
        work.data_mut()[i] = orig + h;
        let up = f(&work)?;
        work.data_mut()[i] = orig - h;
        let down = f(&work)?;
        work.data_mut()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!(
                "grad_check: non-finite function value at coordinate {i}"
            )));
        }
        let numeric = (up - down) / (2.0 * h);
        let a = analytic.data()[i];
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        max_err = max_err.max(err);
    }
    Ok(max_err)
}

/// Derive an independent seed from a master seed and a counter
/// (splitmix64 finalizer). Used wherever a run needs several decoupled
/// random streams that must not depend on scheduling.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master
        .wrapping_add(counter.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
