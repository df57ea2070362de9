//! Beat-synchronized robot choreography from music.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`audio`] decodes a clip, tracks its beats and measures the loudness and
//!    dynamics of every inter-beat segment.
//! 2. [`mocap`] retargets human skeleton captures onto a ten-joint humanoid
//!    upper body and samples them on the beat grid.
//! 3. [`dataset`] pairs consecutive movements, and [`train`] fits the movement
//!    VAE in [`nn`] with the Adadelta optimizer from [`optim`].
//! 4. [`choreo`] maps each music segment into the latent space and decodes
//!    one movement per beat interval.

pub mod audio;
pub mod choreo;
pub mod dataset;
pub mod mocap;
pub mod nn;
pub mod optim;
pub mod synth;
pub mod train;

pub use audio::{analyze, AnalysisConfig, AudioError, AudioFeatures, BeatGrid, FeaturesFile, PcmSignal, SegmentFeatures};
pub use choreo::{generate_sequence, schedule_check, ChoreoError, Choreography, ChoreographyFile};
pub use dataset::{DatasetError, DatasetFile, Movement, NormStats, TrainingSet};
pub use mocap::{JointLimits, MocapError, RobotJoint, RobotPose, SkeletonFrame};
pub use nn::{GaussianPrior, LossReport, ModelFile, NnError, VaeConfig, VaeModel};
pub use optim::{AdadeltaState, OptimError};
pub use train::{EpochReport, TrainConfig, TrainError};
