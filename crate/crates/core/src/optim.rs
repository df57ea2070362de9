//! Adadelta, plus plain SGD as a reference baseline.
//!
//! Adadelta keeps two exponentially decaying averages per parameter, one of
//! squared gradients and one of squared updates, and scales each step by the
//! ratio of their RMS values:
//!
//! ```text
//! E[g²]  <- γ E[g²] + (1 - γ) g²
//! Δθ     = -(sqrt(E[Δθ²] + ε) / sqrt(E[g²] + ε)) g
//! E[Δθ²] <- γ E[Δθ²] + (1 - γ) Δθ²
//! θ      <- θ + Δθ
//! ```
//!
//! There is no learning rate. On the first step `E[Δθ²] = 0`, so the step size
//! is `sqrt(ε) / RMS[g]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_GAMMA: f64 = 0.9;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("shape mismatch: {what} has {actual} entries, expected {expected}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaState {
    gamma: f64,
    epsilon: f64,
    avg_sq_grad: Vec<f64>,
    avg_sq_update: Vec<f64>,
}

impl AdadeltaState {
    /// Zeroed accumulators for `num_params` parameters, γ = 0.9, ε = 1e-6.
    pub fn new(num_params: usize) -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            epsilon: DEFAULT_EPSILON,
            avg_sq_grad: vec![0.0; num_params],
            avg_sq_update: vec![0.0; num_params],
        }
    }

    pub fn with_hyperparameters(num_params: usize, gamma: f64, epsilon: f64) -> Result<Self, OptimError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(OptimError::InvalidHyperparameter("gamma must lie in (0, 1)"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(OptimError::InvalidHyperparameter("epsilon must be positive"));
        }
        Ok(Self {
            gamma,
            epsilon,
            ..Self::new(num_params)
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.avg_sq_grad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.avg_sq_grad.is_empty()
    }

    pub fn avg_sq_grad(&self) -> &[f64] {
        &self.avg_sq_grad
    }

    pub fn avg_sq_update(&self) -> &[f64] {
        &self.avg_sq_update
    }

    /// Checks a deserialized state before use.
    pub fn validate(&self) -> Result<(), OptimError> {
        Self::with_hyperparameters(0, self.gamma, self.epsilon)?;
        if self.avg_sq_update.len() != self.avg_sq_grad.len() {
            return Err(OptimError::ShapeMismatch {
                what: "avg_sq_update",
                expected: self.avg_sq_grad.len(),
                actual: self.avg_sq_update.len(),
            });
        }
        if self
            .avg_sq_grad
            .iter()
            .chain(&self.avg_sq_update)
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(OptimError::InvalidHyperparameter(
                "accumulators must be finite and nonnegative",
            ));
        }
        Ok(())
    }

    /// One Adadelta update applied in place. Nothing is modified on error.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), OptimError> {
        let n = self.avg_sq_grad.len();
        if params.len() != n {
            return Err(OptimError::ShapeMismatch {
                what: "params",
                expected: n,
                actual: params.len(),
            });
        }
        if grads.len() != n {
            return Err(OptimError::ShapeMismatch {
                what: "grads",
                expected: n,
                actual: grads.len(),
            });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(OptimError::NonFiniteGradient { index });
        }
        let (gamma, eps) = (self.gamma, self.epsilon);
        for i in 0..n {
            let g = grads[i];
            let eg = gamma * self.avg_sq_grad[i] + (1.0 - gamma) * g * g;
            self.avg_sq_grad[i] = eg;
            let delta = -((self.avg_sq_update[i] + eps).sqrt() / (eg + eps).sqrt()) * g;
            self.avg_sq_update[i] = gamma * self.avg_sq_update[i] + (1.0 - gamma) * delta * delta;
            params[i] += delta;
        }
        Ok(())
    }
}

/// `θ <- θ - η g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], eta: f64) -> Result<(), OptimError> {
    if grads.len() != params.len() {
        return Err(OptimError::ShapeMismatch {
            what: "grads",
            expected: params.len(),
            actual: grads.len(),
        });
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(OptimError::InvalidHyperparameter("eta must be nonnegative"));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= eta * g;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_accumulators() {
        let mut state = AdadeltaState::new(3);
        state.avg_sq_grad = vec![1.0, 2.0, 0.5];
        state.avg_sq_update = vec![0.1, 0.2, 0.3];
        let mut params = vec![1.0, -2.0, 3.0];
        state.step(&mut params, &[0.0; 3]).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 3.0]);
        assert_eq!(state.avg_sq_grad, vec![0.9 * 1.0, 0.9 * 2.0, 0.9 * 0.5]);
        assert_eq!(state.avg_sq_update, vec![0.9 * 0.1, 0.9 * 0.2, 0.9 * 0.3]);
    }

    #[test]
    fn first_scalar_step_matches_hand_recurrence() {
        let mut state = AdadeltaState::new(1);
        let mut theta = [0.0];
        state.step(&mut theta, &[1.0]).unwrap();
        // values from an independent scalar script
        assert!((state.avg_sq_grad[0] - 0.1).abs() < 1e-15);
        assert!((theta[0] - -0.003_162_261_848_898_663_6).abs() < 1e-15);
        assert!((state.avg_sq_update[0] - 9.999_900_000_999_991e-7).abs() < 1e-18);
    }

    #[test]
    fn quadratic_descends() {
        let mut state = AdadeltaState::new(1);
        let mut theta = [1.0f64];
        let mut prev = theta[0].abs();
        for step in 0..500 {
            let g = 2.0 * theta[0];
            state.step(&mut theta, &[g]).unwrap();
            if step >= 1 {
                assert!(theta[0].abs() < prev, "not monotone at step {step}");
            }
            prev = theta[0].abs();
        }
        assert!(theta[0].abs() < 0.5);
    }

    #[test]
    fn errors_leave_state_untouched() {
        let mut state = AdadeltaState::new(2);
        let mut params = vec![1.0, 1.0];
        assert!(matches!(
            state.step(&mut params, &[1.0]),
            Err(OptimError::ShapeMismatch { .. })
        ));
        assert_eq!(
            state.step(&mut params, &[1.0, f64::NAN]),
            Err(OptimError::NonFiniteGradient { index: 1 })
        );
        assert_eq!(params, vec![1.0, 1.0]);
        assert_eq!(state, AdadeltaState::new(2));
        assert!(state.step(&mut [0.0; 3], &[0.0; 3]).is_err());
    }

    #[test]
    fn hyperparameter_validation() {
        assert!(AdadeltaState::with_hyperparameters(1, 1.0, 1e-6).is_err());
        assert!(AdadeltaState::with_hyperparameters(1, 0.9, 0.0).is_err());
        assert!(AdadeltaState::with_hyperparameters(1, 0.95, 1e-8).is_ok());
    }

    #[test]
    fn sgd_examples() {
        let mut p = vec![1.0];
        sgd_step(&mut p, &[2.0], 0.0).unwrap();
        assert_eq!(p, vec![1.0]);
        sgd_step(&mut p, &[2.0], 0.1).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        assert!(sgd_step(&mut p, &[1.0, 2.0], 0.1).is_err());
    }

    #[test]
    fn serialized_state_has_no_learning_rate() {
        let json = serde_json::to_value(AdadeltaState::new(2)).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["avg_sq_grad", "avg_sq_update", "epsilon", "gamma"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn update_opposes_gradient_and_matches_sgd_direction(
            grads in prop::collection::vec(-100.0f64..100.0, 1..16)
        ) {
            let mut state = AdadeltaState::new(grads.len());
            let mut ada = vec![0.0; grads.len()];
            let mut sgd = vec![0.0; grads.len()];
            state.step(&mut ada, &grads).unwrap();
            sgd_step(&mut sgd, &grads, 0.01).unwrap();
            for ((g, a), s) in grads.iter().zip(&ada).zip(&sgd) {
                if *g != 0.0 {
                    prop_assert_eq!(a.signum(), -g.signum());
                    prop_assert_eq!(a.signum(), s.signum());
                }
            }
        }

        #[test]
        fn accumulators_stay_finite_and_nonnegative(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut state = AdadeltaState::new(4);
            let mut params = vec![0.0; 4];
            for _ in 0..10_000 {
                let scale = 10f64.powi(rng.gen_range(-6..6));
                let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
                state.step(&mut params, &g).unwrap();
            }
            for v in state.avg_sq_grad.iter().chain(&state.avg_sq_update) {
                prop_assert!(v.is_finite() && *v >= 0.0);
            }
            prop_assert!(params.iter().all(|p| p.is_finite()));
        }
    }
}
