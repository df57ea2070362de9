//! Variational autoencoder over movement vectors.
//!
//! The encoder maps a normalized movement to a diagonal Gaussian posterior
//! `(z_mean, z_log_sigma)` where `z_log_sigma` holds the log-variance. The
//! decoder maps a latent point back to a movement. During training the decoder
//! acts as a next-movement predictor: the target of an input is the movement
//! that follows it.
//!
//! The latent prior is a single Gaussian shared by every latent dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, NnError};
use crate::dataset::NormStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    mean: f64,
    std: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, std: f64) -> Result<Self, NnError> {
        if !mean.is_finite() || !std.is_finite() || std <= 0.0 {
            return Err(NnError::InvalidPrior { mean, std });
        }
        Ok(Self { mean, std })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    /// Draws `len` independent samples from `Normal(mean, std²)`.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        let normal = Normal::new(self.mean, self.std).expect("validated prior");
        (0..len).map(|_| normal.sample(rng)).collect()
    }
}

impl Default for GaussianPrior {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    pub z_mean: Vec<f64>,
    /// Log-variance of the posterior; the standard deviation is `exp(z_log_sigma / 2)`.
    pub z_log_sigma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub reconstruction: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VaeConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self {
            input_dim: 20,
            hidden_dim: 64,
            latent_dim: 2,
        }
    }
}

/// Layers of the model, in parameter-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerId {
    EncoderHidden,
    EncMean,
    EncLogSigma,
    DecoderHidden,
    DecoderOut,
}

impl LayerId {
    pub const ALL: [LayerId; 5] = [
        LayerId::EncoderHidden,
        LayerId::EncMean,
        LayerId::EncLogSigma,
        LayerId::DecoderHidden,
        LayerId::DecoderOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerId::EncoderHidden => "encoder_hidden",
            LayerId::EncMean => "enc_mean",
            LayerId::EncLogSigma => "enc_log_sigma",
            LayerId::DecoderHidden => "decoder_hidden",
            LayerId::DecoderOut => "decoder_out",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    pub(crate) encoder_hidden: DenseLayer,
    pub(crate) enc_mean: DenseLayer,
    pub(crate) enc_log_sigma: DenseLayer,
    pub(crate) decoder_hidden: DenseLayer,
    pub(crate) decoder_out: DenseLayer,
    pub(crate) prior: GaussianPrior,
    pub(crate) norm: NormStats,
    pub(crate) epochs_trained: u32,
    pub(crate) seed: u64,
}

impl VaeModel {
    /// Glorot-initialized model, seeded.
    pub fn new(config: VaeConfig, prior: GaussianPrior, norm: NormStats, seed: u64) -> Result<Self, NnError> {
        check_config(&config, &norm)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let VaeConfig {
            input_dim,
            hidden_dim,
            latent_dim,
        } = config;
        Ok(Self {
            encoder_hidden: DenseLayer::glorot(input_dim, hidden_dim, Activation::Tanh, &mut rng),
            enc_mean: DenseLayer::glorot(hidden_dim, latent_dim, Activation::Linear, &mut rng),
            enc_log_sigma: DenseLayer::glorot(hidden_dim, latent_dim, Activation::Linear, &mut rng),
            decoder_hidden: DenseLayer::glorot(latent_dim, hidden_dim, Activation::Tanh, &mut rng),
            decoder_out: DenseLayer::glorot(hidden_dim, input_dim, Activation::Linear, &mut rng),
            prior,
            norm,
            epochs_trained: 0,
            seed,
        })
    }

    /// Model with every weight and bias set to zero.
    pub fn zeros(config: VaeConfig, prior: GaussianPrior, norm: NormStats) -> Result<Self, NnError> {
        check_config(&config, &norm)?;
        let VaeConfig {
            input_dim,
            hidden_dim,
            latent_dim,
        } = config;
        Ok(Self {
            encoder_hidden: DenseLayer::zeros(input_dim, hidden_dim, Activation::Tanh),
            enc_mean: DenseLayer::zeros(hidden_dim, latent_dim, Activation::Linear),
            enc_log_sigma: DenseLayer::zeros(hidden_dim, latent_dim, Activation::Linear),
            decoder_hidden: DenseLayer::zeros(latent_dim, hidden_dim, Activation::Tanh),
            decoder_out: DenseLayer::zeros(hidden_dim, input_dim, Activation::Linear),
            prior,
            norm,
            epochs_trained: 0,
            seed: 0,
        })
    }

    /// Assembles a model from layers, validating the shape contract between them.
    pub fn from_layers(
        layers: [DenseLayer; 5],
        prior: GaussianPrior,
        norm: NormStats,
        epochs_trained: u32,
        seed: u64,
    ) -> Result<Self, NnError> {
        let [encoder_hidden, enc_mean, enc_log_sigma, decoder_hidden, decoder_out] = layers;
        let input_dim = encoder_hidden.in_dim();
        let hidden = encoder_hidden.out_dim();
        let latent = enc_mean.out_dim();
        let checks = [
            ("enc_mean.in", enc_mean.in_dim(), hidden),
            ("enc_log_sigma.in", enc_log_sigma.in_dim(), hidden),
            ("enc_log_sigma.out", enc_log_sigma.out_dim(), latent),
            ("decoder_hidden.in", decoder_hidden.in_dim(), latent),
            ("decoder_out.in", decoder_out.in_dim(), decoder_hidden.out_dim()),
            ("decoder_out.out", decoder_out.out_dim(), input_dim),
            ("norm", norm.dim(), input_dim),
        ];
        for (what, got, want) in checks {
            if got != want {
                return Err(NnError::InvalidModel(format!(
                    "{what} has dimension {got}, expected {want}"
                )));
            }
        }
        if latent == 0 || input_dim == 0 {
            return Err(NnError::InvalidModel("zero-sized input or latent".into()));
        }
        Ok(Self {
            encoder_hidden,
            enc_mean,
            enc_log_sigma,
            decoder_hidden,
            decoder_out,
            prior,
            norm,
            epochs_trained,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder_hidden.in_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.enc_mean.out_dim()
    }

    pub fn prior(&self) -> GaussianPrior {
        self.prior
    }

    pub fn set_prior(&mut self, prior: GaussianPrior) {
        self.prior = prior;
    }

    pub fn norm(&self) -> &NormStats {
        &self.norm
    }

    pub fn epochs_trained(&self) -> u32 {
        self.epochs_trained
    }

    pub fn set_epochs_trained(&mut self, epochs: u32) {
        self.epochs_trained = epochs;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layer(&self, id: LayerId) -> &DenseLayer {
        match id {
            LayerId::EncoderHidden => &self.encoder_hidden,
            LayerId::EncMean => &self.enc_mean,
            LayerId::EncLogSigma => &self.enc_log_sigma,
            LayerId::DecoderHidden => &self.decoder_hidden,
            LayerId::DecoderOut => &self.decoder_out,
        }
    }

    fn layer_mut(&mut self, id: LayerId) -> &mut DenseLayer {
        match id {
            LayerId::EncoderHidden => &mut self.encoder_hidden,
            LayerId::EncMean => &mut self.enc_mean,
            LayerId::EncLogSigma => &mut self.enc_log_sigma,
            LayerId::DecoderHidden => &mut self.decoder_hidden,
            LayerId::DecoderOut => &mut self.decoder_out,
        }
    }

    pub fn num_params(&self) -> usize {
        LayerId::ALL.iter().map(|&id| self.layer(id).num_params()).sum()
    }

    /// All parameters as one vector: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for id in LayerId::ALL {
            let l = self.layer(id);
            out.extend_from_slice(l.weights());
            out.extend_from_slice(l.biases());
        }
        out
    }

    /// Inverse of [`VaeModel::params`].
    pub fn set_params(&mut self, values: &[f64]) -> Result<(), NnError> {
        if values.len() != self.num_params() {
            return Err(NnError::DimensionMismatch {
                context: "parameter vector",
                expected: self.num_params(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite {
                context: "parameter vector",
            });
        }
        let mut offset = 0;
        for id in LayerId::ALL {
            let l = self.layer_mut(id);
            let nw = l.weights().len();
            l.weights_mut().copy_from_slice(&values[offset..offset + nw]);
            offset += nw;
            let nb = l.biases().len();
            l.biases_mut().copy_from_slice(&values[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    pub fn encode(&self, movement: &[f64]) -> Result<LatentCode, NnError> {
        if movement.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                context: "encode input",
                expected: self.input_dim(),
                actual: movement.len(),
            });
        }
        if movement.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite {
                context: "encode input",
            });
        }
        let h = self.encoder_hidden.forward(movement)?;
        let code = LatentCode {
            z_mean: self.enc_mean.forward(&h)?,
            z_log_sigma: self.enc_log_sigma.forward(&h)?,
        };
        ensure_finite(code.z_mean.iter().chain(&code.z_log_sigma), "latent code")?;
        Ok(code)
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>, NnError> {
        if z.len() != self.latent_dim() {
            return Err(NnError::DimensionMismatch {
                context: "decode input",
                expected: self.latent_dim(),
                actual: z.len(),
            });
        }
        let d = self.decoder_hidden.forward(z)?;
        let y = self.decoder_out.forward(&d)?;
        ensure_finite(y.iter(), "decoder output")?;
        Ok(y)
    }
}

fn check_config(config: &VaeConfig, norm: &NormStats) -> Result<(), NnError> {
    if config.input_dim == 0 || config.hidden_dim == 0 || config.latent_dim == 0 {
        return Err(NnError::InvalidModel("layer sizes must be positive".into()));
    }
    if norm.dim() != config.input_dim {
        return Err(NnError::DimensionMismatch {
            context: "normalization stats",
            expected: config.input_dim,
            actual: norm.dim(),
        });
    }
    Ok(())
}

fn ensure_finite<'a>(mut values: impl Iterator<Item = &'a f64>, context: &'static str) -> Result<(), NnError> {
    if values.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NonFinite { context })
    }
}

/// `z_i = z_mean_i + exp(z_log_sigma_i / 2) * noise_i`.
///
/// `noise` is supplied by the caller (drawn from the model prior during
/// training), which keeps the map deterministic.
pub fn reparameterize(code: &LatentCode, noise: &[f64]) -> Result<Vec<f64>, NnError> {
    let n = code.z_mean.len();
    if code.z_log_sigma.len() != n {
        return Err(NnError::DimensionMismatch {
            context: "latent code",
            expected: n,
            actual: code.z_log_sigma.len(),
        });
    }
    if noise.len() != n {
        return Err(NnError::DimensionMismatch {
            context: "reparameterization noise",
            expected: n,
            actual: noise.len(),
        });
    }
    Ok(code
        .z_mean
        .iter()
        .zip(&code.z_log_sigma)
        .zip(noise)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect())
}

/// Closed-form `KL(N(z_mean, exp(z_log_sigma)) || N(prior.mean, prior.std²))`,
/// summed over latent dimensions.
pub fn kl_gaussian(code: &LatentCode, prior: &GaussianPrior) -> Result<f64, NnError> {
    if code.z_log_sigma.len() != code.z_mean.len() {
        return Err(NnError::DimensionMismatch {
            context: "latent code",
            expected: code.z_mean.len(),
            actual: code.z_log_sigma.len(),
        });
    }
    let prior_var = prior.std * prior.std;
    let ln_prior_std = prior.std.ln();
    let kl: f64 = code
        .z_mean
        .iter()
        .zip(&code.z_log_sigma)
        .map(|(&m, &lv)| {
            let dm = m - prior.mean;
            ln_prior_std - 0.5 * lv + (lv.exp() + dm * dm) / (2.0 * prior_var) - 0.5
        })
        .sum();
    // the closed form is >= 0 analytically; rounding can dip below by an ulp
    Ok(kl.max(0.0))
}

/// Gradient of the batch loss with respect to every model parameter, laid out
/// like [`VaeModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    values: Vec<f64>,
}

impl ParamGrads {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Negative ELBO on a batch: squared reconstruction error against the
/// targets (summed over the movement's coordinates) plus the KL regularizer,
/// both averaged over the batch.
///
/// Summing rather than averaging over coordinates keeps the reconstruction
/// term on the scale of a Gaussian log-likelihood; with a per-coordinate mean
/// the KL term dominates and the latent collapses onto the prior.
///
/// `noise_batch[i]` is the reparameterization noise for sample `i`.
pub fn elbo_loss(
    model: &VaeModel,
    input_batch: &[Vec<f64>],
    target_batch: &[Vec<f64>],
    noise_batch: &[Vec<f64>],
) -> Result<(LossReport, ParamGrads), NnError> {
    if input_batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    if input_batch.len() != target_batch.len() || input_batch.len() != noise_batch.len() {
        return Err(NnError::BatchMismatch {
            inputs: input_batch.len(),
            targets: target_batch.len(),
            noise: noise_batch.len(),
        });
    }
    let batch = input_batch.len() as f64;
    let prior = model.prior;
    let prior_var = prior.std * prior.std;

    let mut grads = vec![0.0; model.num_params()];
    let offsets = layer_offsets(model);
    let mut rec_sum = 0.0;
    let mut kl_sum = 0.0;

    for ((x, target), noise) in input_batch.iter().zip(target_batch).zip(noise_batch) {
        if target.len() != model.input_dim() {
            return Err(NnError::DimensionMismatch {
                context: "target vector",
                expected: model.input_dim(),
                actual: target.len(),
            });
        }
        let h = model.encoder_hidden.forward(x)?;
        let code = model.encode(x)?;
        let z = reparameterize(&code, noise)?;
        let d = model.decoder_hidden.forward(&z)?;
        let y = model.decoder_out.forward(&d)?;

        let sq: f64 = y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
        rec_sum += sq;
        kl_sum += kl_gaussian(&code, &prior)?;

        // backward
        let grad_y: Vec<f64> = y
            .iter()
            .zip(target)
            .map(|(a, b)| 2.0 * (a - b) / batch)
            .collect();
        let g_out = model.decoder_out.backward(&d, &grad_y)?;
        accumulate(&mut grads, offsets[4], &g_out.weights, &g_out.biases);
        let g_dh = model.decoder_hidden.backward(&z, &g_out.input)?;
        accumulate(&mut grads, offsets[3], &g_dh.weights, &g_dh.biases);
        let grad_z = g_dh.input;

        let mut grad_mean = Vec::with_capacity(z.len());
        let mut grad_log_sigma = Vec::with_capacity(z.len());
        for k in 0..z.len() {
            let m = code.z_mean[k];
            let lv = code.z_log_sigma[k];
            grad_mean.push(grad_z[k] + (m - prior.mean) / prior_var / batch);
            grad_log_sigma.push(
                grad_z[k] * 0.5 * (0.5 * lv).exp() * noise[k]
                    + (-0.5 + lv.exp() / (2.0 * prior_var)) / batch,
            );
        }
        let g_mean = model.enc_mean.backward(&h, &grad_mean)?;
        accumulate(&mut grads, offsets[1], &g_mean.weights, &g_mean.biases);
        let g_ls = model.enc_log_sigma.backward(&h, &grad_log_sigma)?;
        accumulate(&mut grads, offsets[2], &g_ls.weights, &g_ls.biases);
        let grad_h: Vec<f64> = g_mean.input.iter().zip(&g_ls.input).map(|(a, b)| a + b).collect();
        let g_enc = model.encoder_hidden.backward(x, &grad_h)?;
        accumulate(&mut grads, offsets[0], &g_enc.weights, &g_enc.biases);
    }

    let reconstruction = rec_sum / batch;
    let kl = kl_sum / batch;
    let report = LossReport {
        reconstruction,
        kl,
        total: reconstruction + kl,
    };
    if !report.total.is_finite() {
        return Err(NnError::NonFinite { context: "loss" });
    }
    ensure_finite(grads.iter(), "gradients")?;
    Ok((report, ParamGrads { values: grads }))
}

fn layer_offsets(model: &VaeModel) -> [usize; 5] {
    let mut offsets = [0; 5];
    let mut acc = 0;
    for (slot, id) in offsets.iter_mut().zip(LayerId::ALL) {
        *slot = acc;
        acc += model.layer(id).num_params();
    }
    offsets
}

fn accumulate(grads: &mut [f64], offset: usize, weights: &[f64], biases: &[f64]) {
    let dst = &mut grads[offset..offset + weights.len() + biases.len()];
    for (g, v) in dst.iter_mut().zip(weights.iter().chain(biases)) {
        *g += v;
    }
}
