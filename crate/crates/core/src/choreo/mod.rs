//! Music-driven movement generation.
//!
//! Each inter-beat segment's loudness and dynamics are ranked against the
//! rest of the clip, pushed through the normal quantile function into the
//! latent space, and decoded into one movement scheduled on that interval.

mod generate;
mod probit;

pub use generate::{
    empirical_cdf, features_to_latent, generate_sequence, schedule_check, Choreography, ChoreographyFile,
    LatentPoint, MoveRecord, ScheduledMove, CDF_CLAMP,
};
pub use probit::probit;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::nn::NnError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChoreoError {
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("empty feature summary")]
    EmptySummary,
    #[error("{features} segment features for {intervals} beat intervals")]
    CountMismatch { features: usize, intervals: usize },
    #[error("only {0} beat(s), need at least 2")]
    TooFewBeats(usize),
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("model shape {input_dim}->{latent_dim} is not usable for generation")]
    IncompatibleModel { input_dim: usize, latent_dim: usize },
    #[error("invalid choreography file: {0}")]
    InvalidFile(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
