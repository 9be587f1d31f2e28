//! Adam optimizer with bias correction.

use crate::error::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || self.learning_rate.is_nan() {
            return Err(Error::InvalidParam {
                name: "learning_rate",
                message: "must be positive".into(),
            });
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidParam {
                    name: "betas",
                    message: format!("{name} must be in [0, 1), got {beta}"),
                });
            }
        }
        Ok(())
    }
}

/// First/second moment state plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl AdamState {
    pub fn new(dim: usize, params: AdamParams) -> Self {
        Self {
            params,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// One bias-corrected update of `values` in place.
    pub fn step(&mut self, values: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(values.len(), grad.len());
        self.t += 1;
        let p = &self.params;
        let bc1 = 1.0 - p.beta1.powi(self.t as i32);
        let bc2 = 1.0 - p.beta2.powi(self.t as i32);
        for i in 0..values.len() {
            self.m[i] = p.beta1 * self.m[i] + (1.0 - p.beta1) * grad[i];
            self.v[i] = p.beta2 * self.v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            values[i] -= p.learning_rate * m_hat / (v_hat.sqrt() + p.epsilon);
        }
    }
}

/// Runs Adam for `steps` updates against a loss/gradient oracle.
///
/// The trace holds the loss before each step and once more after the last,
/// so it has `steps + 1` entries. A non-finite gradient aborts with the
/// step index.
pub fn adam_optimize(
    mut oracle: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    initial: &[f64],
    params: AdamParams,
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    let mut values = initial.to_vec();
    let mut state = AdamState::new(values.len(), params);
    let mut trace = Vec::with_capacity(steps + 1);
    for step in 0..steps {
        let (loss, grad) = oracle(&values)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::GradientFailure { step });
        }
        trace.push(loss);
        state.step(&mut values, &grad);
    }
    let (final_loss, _) = oracle(&values)?;
    if !final_loss.is_finite() {
        return Err(Error::GradientFailure { step: steps });
    }
    trace.push(final_loss);
    Ok((values, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let loss = p.iter().map(|x| x * x).sum();
        let grad = p.iter().map(|x| 2.0 * x).collect();
        Ok((loss, grad))
    }

    #[test]
    fn converges_on_a_convex_bowl() {
        let params = AdamParams {
            learning_rate: 1e-2,
            ..AdamParams::default()
        };
        let (final_p, trace) = adam_optimize(quadratic, &[1.0, 1.0], params, 500).unwrap();
        let norm = (final_p[0] * final_p[0] + final_p[1] * final_p[1]).sqrt();
        assert!(norm < 0.1, "final norm {norm}");
        assert_eq!(trace.len(), 501);
        for w in trace[3..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "trace increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn first_step_matches_hand_derivation() {
        // With beta = (0, 0.9): m_hat = g, v_hat = g^2, so the first update
        // is lr * g / (|g| + eps).
        let params = AdamParams {
            learning_rate: 1e-4,
            beta1: 0.0,
            beta2: 0.9,
            epsilon: 1e-8,
        };
        let (p, _) = adam_optimize(quadratic, &[1.0], params, 1).unwrap();
        assert!((p[0] - (1.0 - 1e-4)).abs() <= 1e-9, "p1 = {}", p[0]);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let (p, trace) = adam_optimize(
            |p| Ok((0.0, vec![0.0; p.len()])),
            &[0.3, -0.7],
            AdamParams::default(),
            50,
        )
        .unwrap();
        assert_eq!(p, vec![0.3, -0.7]);
        assert!(trace.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn non_finite_gradient_aborts_with_step_index() {
        let err = adam_optimize(
            |p| {
                if p[0] < 0.95 {
                    Ok((f64::NAN, vec![f64::NAN]))
                } else {
                    quadratic(p)
                }
            },
            &[1.0],
            AdamParams {
                learning_rate: 0.05,
                ..AdamParams::default()
            },
            100,
        )
        .unwrap_err();
        match err {
            Error::GradientFailure { step } => assert!(step > 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_betas() {
        let params = AdamParams {
            beta1: 1.0,
            ..AdamParams::default()
        };
        assert!(adam_optimize(quadratic, &[1.0], params, 1).is_err());
    }
}
