//! Seeded, resumable mini-batch training of the movement VAE with Adadelta.
//!
//! Every epoch draws its own permutation and reparameterization noise from a
//! ChaCha stream keyed by `(seed, epoch)`, so stopping after epoch `k` and
//! resuming from the checkpoint yields exactly the same parameters as an
//! uninterrupted run.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::TrainingSet;
use crate::nn::{elbo_loss, LossReport, NnError, VaeModel};
use crate::optim::{AdadeltaState, OptimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub seed: u64,
    pub checkpoint_every: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            batch_size: 32,
            seed: 0,
            checkpoint_every: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch size must be positive"));
        }
        if self.checkpoint_every == 0 {
            return Err(TrainError::InvalidConfig("checkpoint interval must be positive"));
        }
        Ok(())
    }

    /// Epoch 1 is always checkpointed, then every `checkpoint_every` epochs.
    pub fn is_checkpoint_epoch(&self, epoch: u32) -> bool {
        epoch == 1 || epoch % self.checkpoint_every == 0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
    #[error("need at least {required} training pairs, got {actual}")]
    TooFewPairs { required: usize, actual: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: u32, batch: usize },
    #[error("non-finite parameters after epoch {epoch}, batch {batch}")]
    NonFiniteParams { epoch: u32, batch: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// Sample-weighted mean of the batch losses seen during one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    pub epoch: u32,
    pub loss: LossReport,
}

fn epoch_rng(seed: u64, epoch: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    rng
}

/// Runs one epoch (numbered `epoch`, 1-based) over `set`.
pub fn train_epoch(
    model: &mut VaeModel,
    optimizer: &mut AdadeltaState,
    set: &TrainingSet,
    config: &TrainConfig,
    epoch: u32,
) -> Result<EpochReport, TrainError> {
    let mut rng = epoch_rng(config.seed, epoch);
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut rng);
    let prior = model.prior();
    let latent_dim = model.latent_dim();

    let (mut rec, mut kl, mut total) = (0.0, 0.0, 0.0);
    let mut params = model.params();
    for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
        let inputs: Vec<Vec<f64>> = chunk.iter().map(|&i| set.inputs[i].clone()).collect();
        let targets: Vec<Vec<f64>> = chunk.iter().map(|&i| set.targets[i].clone()).collect();
        let noise: Vec<Vec<f64>> = chunk.iter().map(|_| prior.sample(latent_dim, &mut rng)).collect();
        let batch = batch_idx + 1;
        let (report, grads) = match elbo_loss(model, &inputs, &targets, &noise) {
            Ok(r) => r,
            Err(NnError::NonFinite { .. }) => return Err(TrainError::NonFiniteLoss { epoch, batch }),
            Err(e) => return Err(e.into()),
        };
        if !report.total.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch, batch });
        }
        match optimizer.step(&mut params, grads.as_slice()) {
            Ok(()) => {}
            Err(OptimError::NonFiniteGradient { .. }) => return Err(TrainError::NonFiniteLoss { epoch, batch }),
            Err(e) => return Err(e.into()),
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(TrainError::NonFiniteParams { epoch, batch });
        }
        model.set_params(&params)?;

        let w = chunk.len() as f64;
        rec += w * report.reconstruction;
        kl += w * report.kl;
        total += w * report.total;
    }
    let n = set.len() as f64;
    model.set_epochs_trained(epoch);
    Ok(EpochReport {
        epoch,
        loss: LossReport {
            reconstruction: rec / n,
            kl: kl / n,
            total: total / n,
        },
    })
}

/// Trains for `config.epochs` further epochs, continuing from
/// `model.epochs_trained()`. `on_epoch` sees the model and optimizer state at
/// the end of every epoch (for logging and checkpoints); an error from it
/// stops training.
pub fn train<E, F>(
    model: &mut VaeModel,
    optimizer: &mut AdadeltaState,
    set: &TrainingSet,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<Vec<EpochReport>, E>
where
    E: From<TrainError>,
    F: FnMut(&EpochReport, &VaeModel, &AdadeltaState) -> Result<(), E>,
{
    config.validate()?;
    if set.len() < 2 {
        return Err(TrainError::TooFewPairs {
            required: 2,
            actual: set.len(),
        }
        .into());
    }
    if optimizer.len() != model.num_params() {
        return Err(TrainError::from(OptimError::ShapeMismatch {
            what: "optimizer state",
            expected: model.num_params(),
            actual: optimizer.len(),
        })
        .into());
    }
    let first = model.epochs_trained() + 1;
    let mut reports = Vec::with_capacity(config.epochs as usize);
    for epoch in first..first + config.epochs {
        let report = train_epoch(model, optimizer, set, config, epoch)?;
        on_epoch(&report, model, optimizer)?;
        reports.push(report);
    }
    Ok(reports)
}
