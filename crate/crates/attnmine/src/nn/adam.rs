use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Bias-corrected Adam state for a single parameter tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    first_moment: Tensor,
    second_moment: Tensor,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(shape: &[usize], learning_rate: f64) -> Self {
        AdamState {
            first_moment: Tensor::zeros(shape.to_vec()),
            second_moment: Tensor::zeros(shape.to_vec()),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update: params -= lr * m_hat / (sqrt(v_hat) + eps).
    pub fn step(&mut self, params: &mut Tensor, grads: &Tensor) -> Result<()> {
        if !params.same_shape(grads) || !params.same_shape(&self.first_moment) {
            return Err(Error::Shape(format!(
                "adam step: params {:?}, grads {:?}, state {:?}",
                params.shape(),
                grads.shape(),
                self.first_moment.shape()
            )));
        }
        self.step += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step as i32);
        let m = self.first_moment.data_mut();
        let v = self.second_moment.data_mut();
        let p = params.data_mut();
        let g = grads.data();
        for i in 0..p.len() {
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_with_zero_moments_is_noop() {
        let mut state = AdamState::new(&[3], 0.001);
        let mut params = Tensor::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let grads = Tensor::zeros(vec![3]);
        let before = params.clone();
        for _ in 0..5 {
            state.step(&mut params, &grads).unwrap();
        }
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_matches_closed_form() {
        // After one step from zero moments the update is exactly
        // -lr * g / (|g| + eps), which is approximately -lr * sign(g).
        let lr = 0.001;
        let mut state = AdamState::new(&[2], lr);
        let mut params = Tensor::new(vec![2], vec![0.3, -0.7]).unwrap();
        let grads = Tensor::new(vec![2], vec![0.02, -5.0]).unwrap();
        let before = params.clone();
        state.step(&mut params, &grads).unwrap();
        for i in 0..2 {
            let g: f64 = grads.data()[i];
            let expected = -lr * g / (g.abs() + 1e-8);
            let delta = params.data()[i] - before.data()[i];
            assert!(
                (delta - expected).abs() < 1e-15,
                "delta {delta} vs {expected}"
            );
            assert!((delta - (-lr * g.signum())).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_runs_give_identical_trajectories() {
        let run = || {
            let mut state = AdamState::new(&[2], 0.01);
            let mut params = Tensor::new(vec![2], vec![1.0, -2.0]).unwrap();
            for step in 1..=20 {
                let g = Tensor::new(vec![2], vec![0.1 * step as f64, -0.3]).unwrap();
                state.step(&mut params, &g).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut state = AdamState::new(&[2], 0.001);
        let mut params = Tensor::zeros(vec![2]);
        let grads = Tensor::zeros(vec![3]);
        assert!(state.step(&mut params, &grads).is_err());
    }
}
