//! Training corpus construction and joint-variance metrics.
//!
//! A movement is an ordered couple of poses, flattened to 20 reals: the ten
//! joints of the first pose in canonical order, then the ten of the second.
//! Training pairs map each movement to the one that follows it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mocap::{RobotJoint, RobotPose, NUM_ROBOT_JOINTS};

pub const MOVEMENT_DIM: usize = 2 * NUM_ROBOT_JOINTS;

/// Standard deviations below this are treated as this value.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("need at least {required} {what}, got {actual}")]
    TooFew {
        what: &'static str,
        required: usize,
        actual: usize,
    },
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("vector has {actual} entries, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid normalization stats: {0}")]
    InvalidNorm(String),
    #[error("invalid dataset file: {0}")]
    InvalidFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Movement {
    pub pose_a: RobotPose,
    pub pose_b: RobotPose,
}

impl Movement {
    pub fn new(pose_a: RobotPose, pose_b: RobotPose) -> Self {
        Self { pose_a, pose_b }
    }

    pub fn as_vector(&self) -> [f64; MOVEMENT_DIM] {
        let mut v = [0.0; MOVEMENT_DIM];
        v[..NUM_ROBOT_JOINTS].copy_from_slice(self.pose_a.angles());
        v[NUM_ROBOT_JOINTS..].copy_from_slice(self.pose_b.angles());
        v
    }

    pub fn from_vector(v: &[f64]) -> Result<Self, DatasetError> {
        if v.len() != MOVEMENT_DIM {
            return Err(DatasetError::DimensionMismatch {
                expected: MOVEMENT_DIM,
                actual: v.len(),
            });
        }
        let a: [f64; NUM_ROBOT_JOINTS] = v[..NUM_ROBOT_JOINTS].try_into().expect("length checked");
        let b: [f64; NUM_ROBOT_JOINTS] = v[NUM_ROBOT_JOINTS..].try_into().expect("length checked");
        Ok(Self::new(RobotPose::from_angles(a), RobotPose::from_angles(b)))
    }
}

/// Per-dimension standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl NormStats {
    /// Zero means, unit deviations.
    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    /// Population statistics of `rows`, with deviations floored at [`STD_FLOOR`].
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let first = rows.first().ok_or(DatasetError::TooFew {
            what: "rows",
            required: 1,
            actual: 0,
        })?;
        let dim = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(DatasetError::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..dim).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let stds = (0..dim)
            .map(|d| {
                let var = rows.iter().map(|r| (r[d] - means[d]).powi(2)).sum::<f64>() / n;
                var.sqrt().max(STD_FLOOR)
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.means.len() != self.stds.len() {
            return Err(DatasetError::InvalidNorm(format!(
                "{} means but {} stds",
                self.means.len(),
                self.stds.len()
            )));
        }
        if self.means.iter().any(|m| !m.is_finite()) || self.stds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(DatasetError::InvalidNorm("means must be finite and stds positive".into()));
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| x * s + m)
            .collect()
    }
}

/// Input/target movement vectors; `targets[i]` is the movement after `inputs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// Set once the vectors have been standardized.
    pub norm: Option<NormStats>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Non-overlapping couples `(p0, p1), (p2, p3), …`; an odd trailing pose is dropped.
pub fn build_movements(poses: &[RobotPose]) -> Result<Vec<Movement>, DatasetError> {
    if poses.len() < 2 {
        return Err(DatasetError::TooFew {
            what: "poses",
            required: 2,
            actual: poses.len(),
        });
    }
    Ok(poses.chunks_exact(2).map(|c| Movement::new(c[0], c[1])).collect())
}

/// Pairs each movement with its successor: `n` movements give `n - 1` pairs.
pub fn make_training_pairs(movements: &[Movement]) -> Result<TrainingSet, DatasetError> {
    if movements.len() < 2 {
        return Err(DatasetError::TooFew {
            what: "movements",
            required: 2,
            actual: movements.len(),
        });
    }
    let vectors: Vec<Vec<f64>> = movements.iter().map(|m| m.as_vector().to_vec()).collect();
    Ok(TrainingSet {
        inputs: vectors[..vectors.len() - 1].to_vec(),
        targets: vectors[1..].to_vec(),
        norm: None,
    })
}

/// Standardizes inputs and targets with statistics fitted on the inputs only.
pub fn normalize(set: &TrainingSet) -> Result<TrainingSet, DatasetError> {
    let norm = NormStats::fit(&set.inputs)?;
    Ok(normalize_with(set, norm))
}

/// Standardizes with externally supplied statistics.
pub fn normalize_with(set: &TrainingSet, norm: NormStats) -> TrainingSet {
    TrainingSet {
        inputs: set.inputs.iter().map(|v| norm.apply(v)).collect(),
        targets: set.targets.iter().map(|v| norm.apply(v)).collect(),
        norm: Some(norm),
    }
}

/// Undoes [`normalize`]; a set without statistics is returned unchanged.
pub fn denormalize(set: &TrainingSet) -> TrainingSet {
    match &set.norm {
        Some(norm) => TrainingSet {
            inputs: set.inputs.iter().map(|v| norm.invert(v)).collect(),
            targets: set.targets.iter().map(|v| norm.invert(v)).collect(),
            norm: None,
        },
        None => set.clone(),
    }
}

/// Contiguous prefix/suffix split preserving temporal order.
///
/// The training part gets `round(len * ratio)` pairs, adjusted so neither part
/// is empty. `seed` is accepted for interface stability; the split is not
/// shuffled.
pub fn split(set: &TrainingSet, ratio: f64, _seed: u64) -> Result<(TrainingSet, TrainingSet), DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    let n = set.len();
    if n < 2 {
        return Err(DatasetError::TooFew {
            what: "pairs",
            required: 2,
            actual: n,
        });
    }
    let cut = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
    let part = |range: std::ops::Range<usize>| TrainingSet {
        inputs: set.inputs[range.clone()].to_vec(),
        targets: set.targets[range].to_vec(),
        norm: set.norm.clone(),
    };
    Ok((part(0..cut), part(cut..n)))
}

/// Population variance of every joint over a pose sequence.
pub fn joint_variance(poses: &[RobotPose]) -> Result<[f64; NUM_ROBOT_JOINTS], DatasetError> {
    if poses.is_empty() {
        return Err(DatasetError::TooFew {
            what: "poses",
            required: 1,
            actual: 0,
        });
    }
    let n = poses.len() as f64;
    let mut out = [0.0; NUM_ROBOT_JOINTS];
    for j in RobotJoint::ALL {
        // deviations from the first sample, so constant series give exactly 0
        let x0 = poses[0].get(j);
        let mean = poses.iter().map(|p| p.get(j) - x0).sum::<f64>() / n;
        out[j.index()] = poses.iter().map(|p| (p.get(j) - x0 - mean).powi(2)).sum::<f64>() / n;
    }
    Ok(out)
}

/// Every pose of every movement, in order.
pub fn movement_poses(movements: &[Movement]) -> Vec<RobotPose> {
    movements.iter().flat_map(|m| [m.pose_a, m.pose_b]).collect()
}

pub fn mean_variance(per_joint: &[f64; NUM_ROBOT_JOINTS]) -> f64 {
    per_joint.iter().sum::<f64>() / NUM_ROBOT_JOINTS as f64
}

/// Dataset file: raw movement vectors plus the statistics used for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub joint_order: Vec<String>,
    pub movements: Vec<Vec<f64>>,
    pub norm: NormStats,
}

impl DatasetFile {
    /// Statistics are fitted on the training inputs, i.e. every movement but the last.
    pub fn from_movements(movements: &[Movement]) -> Result<Self, DatasetError> {
        let pairs = make_training_pairs(movements)?;
        let norm = NormStats::fit(&pairs.inputs)?;
        Ok(Self {
            joint_order: RobotJoint::ALL.iter().map(|j| j.name().to_string()).collect(),
            movements: movements.iter().map(|m| m.as_vector().to_vec()).collect(),
            norm,
        })
    }

    pub fn to_movements(&self) -> Result<Vec<Movement>, DatasetError> {
        let expected: Vec<&str> = RobotJoint::ALL.iter().map(|j| j.name()).collect();
        if self.joint_order.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(DatasetError::InvalidFile(format!(
                "joint_order must be {expected:?}"
            )));
        }
        self.norm.validate()?;
        if self.norm.dim() != MOVEMENT_DIM {
            return Err(DatasetError::InvalidNorm(format!(
                "expected {MOVEMENT_DIM} dimensions, found {}",
                self.norm.dim()
            )));
        }
        self.movements
            .iter()
            .map(|v| {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(DatasetError::InvalidFile("non-finite movement value".into()));
                }
                Movement::from_vector(v)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
