use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `theta`. A non-finite gradient leaves
/// both `theta` and the moments untouched.
pub fn step(
    p: &AdamParams,
    s: &mut AdamState,
    theta: &mut [f64],
    grad: &[f64],
    lr: f64,
) -> Result<()> {
    if grad.len() != theta.len() || s.m.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: grad.len(),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("non-finite gradient".into()));
    }
    s.step += 1;
    let t = s.step as i32;
    let c1 = 1.0 - p.beta1.powi(t);
    let c2 = 1.0 - p.beta2.powi(t);
    for i in 0..theta.len() {
        s.m[i] = p.beta1 * s.m[i] + (1.0 - p.beta1) * grad[i];
        s.v[i] = p.beta2 * s.v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
        let m_hat = s.m[i] / c1;
        let v_hat = s.v[i] / c2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + p.epsilon);
    }
    Ok(())
}

/// [`step`] with the default hyperparameters.
pub fn adam_step(s: &mut AdamState, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    step(&AdamParams::default(), s, theta, grad, lr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut s = AdamState::new(3);
        let mut theta = vec![0.1, -0.2, 0.3];
        adam_step(&mut s, &mut theta, &[0.0; 3], 1e-3).unwrap();
        assert_eq!(theta, vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn first_step_matches_reference() {
        let g = [2.0, -1e-3, 1e-9, 0.0];
        let mut s = AdamState::new(4);
        let mut theta = vec![0.0; 4];
        adam_step(&mut s, &mut theta, &g, 0.01).unwrap();
        for i in 0..4 {
            // m_hat = g, v_hat = g^2
            let reference = -0.01 * g[i] / (g[i].abs() + 1e-8);
            assert!((theta[i] - reference).abs() < 1e-15, "{i}");
        }
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let mut s = AdamState::new(2);
        let mut theta = vec![0.0; 2];
        let mut prev = theta.clone();
        for _ in 0..2000 {
            prev.copy_from_slice(&theta);
            adam_step(&mut s, &mut theta, &[0.5, -3.0], 1e-3).unwrap();
        }
        assert!((theta[0] - prev[0] + 1e-3).abs() < 1e-9);
        assert!((theta[1] - prev[1] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut s = AdamState::new(1);
        let mut theta = vec![1.0];
        assert!(adam_step(&mut s, &mut theta, &[f64::NAN], 1e-3).is_err());
        assert_eq!(theta, vec![1.0]);
        assert_eq!(s.step, 0);
    }
}
