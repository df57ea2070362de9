//! Dense (fully connected) layer with an element-wise activation.
//!
//! Weights are stored row-major with shape `(out_dim, in_dim)`, so
//! `y = activation(W x + b)` reads each output unit from one contiguous row.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

/// Gradients produced by [`DenseLayer::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub input: Vec<f64>,
    /// Row-major, same layout as the layer weights.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    /// All-zero layer.
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    /// Builds a layer from explicit parameters, checking shapes and finiteness.
    pub fn from_parts(
        out_dim: usize,
        in_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, NnError> {
        if weights.len() != out_dim * in_dim {
            return Err(NnError::DimensionMismatch {
                context: "layer weights",
                expected: out_dim * in_dim,
                actual: weights.len(),
            });
        }
        if biases.len() != out_dim {
            return Err(NnError::DimensionMismatch {
                context: "layer biases",
                expected: out_dim,
                actual: biases.len(),
            });
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite {
                context: "layer parameters",
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            biases,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NnError> {
        if input.len() != self.in_dim {
            return Err(NnError::DimensionMismatch {
                context: "dense input",
                expected: self.in_dim,
                actual: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(input)?;
        Ok(self
            .weights
            .chunks_exact(self.in_dim.max(1))
            .take(self.out_dim)
            .zip(&self.biases)
            .map(|(row, b)| {
                let pre = if self.in_dim == 0 {
                    *b
                } else {
                    row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b
                };
                self.activation.apply(pre)
            })
            .collect())
    }

    /// Exact gradients of the forward map given the upstream gradient.
    ///
    /// The forward pass is recomputed from `input`, so callers need not cache
    /// activations.
    pub fn backward(&self, input: &[f64], grad_output: &[f64]) -> Result<DenseGrads, NnError> {
        if grad_output.len() != self.out_dim {
            return Err(NnError::DimensionMismatch {
                context: "dense grad_output",
                expected: self.out_dim,
                actual: grad_output.len(),
            });
        }
        let output = self.forward(input)?;
        let delta: Vec<f64> = output
            .iter()
            .zip(grad_output)
            .map(|(&y, &g)| g * self.activation.derivative_from_output(y))
            .collect();

        let mut grad_input = vec![0.0; self.in_dim];
        let mut grad_weights = vec![0.0; self.weights.len()];
        for (o, &d) in delta.iter().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut grad_weights[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] = d * input[i];
                grad_input[i] += row[i] * d;
            }
        }
        Ok(DenseGrads {
            input: grad_input,
            weights: grad_weights,
            biases: delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_linear_passthrough() {
        let layer =
            DenseLayer::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], Activation::Linear)
                .unwrap();
        assert_eq!(layer.forward(&[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
    }

    #[test]
    fn zero_weights_pass_bias() {
        let layer = DenseLayer::from_parts(2, 3, vec![0.0; 6], vec![1.0, 2.0], Activation::Linear)
            .unwrap();
        assert_eq!(layer.forward(&[5.0, -1.0, 9.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn tanh_single_unit() {
        let layer = DenseLayer::from_parts(1, 1, vec![2.0], vec![0.0], Activation::Tanh).unwrap();
        let y = layer.forward(&[0.5]).unwrap()[0];
        // tanh(1) = 0.76159415595576...
        assert!((y - 0.761_594_155_955_764_9).abs() < 1e-12);
    }

    #[test]
    fn input_dimension_mismatch_is_reported() {
        let layer = DenseLayer::zeros(3, 2, Activation::Linear);
        match layer.forward(&[1.0, 2.0]) {
            Err(NnError::DimensionMismatch {
                expected, actual, ..
            }) => assert_eq!((expected, actual), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(layer.backward(&[1.0, 2.0, 3.0], &[1.0]).is_err());
    }

    #[test]
    fn from_parts_rejects_bad_shapes_and_nan() {
        assert!(DenseLayer::from_parts(2, 2, vec![0.0; 3], vec![0.0; 2], Activation::Linear).is_err());
        assert!(DenseLayer::from_parts(2, 2, vec![0.0; 4], vec![0.0; 1], Activation::Linear).is_err());
        assert!(
            DenseLayer::from_parts(1, 1, vec![f64::NAN], vec![0.0], Activation::Linear).is_err()
        );
    }

    #[test]
    fn linear_weight_grad_is_outer_product() {
        let layer = DenseLayer::from_parts(
            2,
            3,
            vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6],
            vec![0.0, 0.0],
            Activation::Linear,
        )
        .unwrap();
        let x = [1.0, -2.0, 0.5];
        let g = [0.7, -1.1];
        let grads = layer.backward(&x, &g).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(grads.weights[o * 3 + i], g[o] * x[i]);
            }
        }
        assert_eq!(grads.biases, g.to_vec());
    }

    #[test]
    fn tanh_at_zero_gives_transposed_weights() {
        let w = vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6];
        let layer = DenseLayer::from_parts(2, 3, w.clone(), vec![0.0, 0.0], Activation::Tanh).unwrap();
        let g = [0.7, -1.1];
        let grads = layer.backward(&[0.0, 0.0, 0.0], &g).unwrap();
        for i in 0..3 {
            let expect = w[i] * g[0] + w[3 + i] * g[1];
            assert!((grads.input[i] - expect).abs() < 1e-15);
        }
    }

    fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn analytic_grads_match_finite_differences() {
        let h = 1e-5;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for act in [Activation::Tanh, Activation::Linear] {
                let layer = DenseLayer::glorot(3, 4, act, &mut rng);
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                // scalar objective: g . forward(x)
                let objective = |l: &DenseLayer, x: &[f64]| -> f64 {
                    l.forward(x).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum()
                };
                let grads = layer.backward(&x, &g).unwrap();
                let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);

                for k in 0..layer.weights.len() {
                    let num = central_diff(
                        |v| {
                            let mut l = layer.clone();
                            l.weights[k] = v;
                            objective(&l, &x)
                        },
                        layer.weights[k],
                        h,
                    );
                    assert!(rel(grads.weights[k], num) < 1e-6, "weight {k}");
                }
                for k in 0..layer.biases.len() {
                    let num = central_diff(
                        |v| {
                            let mut l = layer.clone();
                            l.biases[k] = v;
                            objective(&l, &x)
                        },
                        layer.biases[k],
                        h,
                    );
                    assert!(rel(grads.biases[k], num) < 1e-6, "bias {k}");
                }
                for k in 0..3 {
                    let num = central_diff(
                        |v| {
                            let mut xx = x.clone();
                            xx[k] = v;
                            objective(&layer, &xx)
                        },
                        x[k],
                        h,
                    );
                    assert!(rel(grads.input[k], num) < 1e-6, "input {k}");
                }
            }
        }
    }
}
