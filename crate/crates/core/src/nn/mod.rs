//! Feed-forward network substrate and the movement variational autoencoder.

mod layer;
mod model_file;
mod vae;

pub use layer::{Activation, DenseGrads, DenseLayer};
pub use model_file::{LayerRecord, ModelFile};
pub use vae::{
    elbo_loss, kl_gaussian, reparameterize, GaussianPrior, LatentCode, LayerId, LossReport,
    ParamGrads, VaeConfig, VaeModel,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch length mismatch: {inputs} inputs, {targets} targets, {noise} noise vectors")]
    BatchMismatch {
        inputs: usize,
        targets: usize,
        noise: usize,
    },
    #[error("invalid prior: std must be finite and > 0 (got mean {mean}, std {std})")]
    InvalidPrior { mean: f64, std: f64 },
    #[error("invalid model file: {0}")]
    InvalidModel(String),
}
