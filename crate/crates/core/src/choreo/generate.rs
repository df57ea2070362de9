use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{probit, ChoreoError};
use crate::audio::{BeatGrid, FeatureSummary, SegmentFeatures};
use crate::dataset::{Movement, MOVEMENT_DIM};
use crate::mocap::{clamp_pose, JointLimits, RobotJoint, RobotPose};
use crate::nn::{GaussianPrior, VaeModel};

/// Empirical CDFs are kept away from 0 and 1 by this margin before the probit.
pub const CDF_CLAMP: f64 = 1e-3;

/// Latent coordinates driven by music: `z[0]` from loudness, `z[1]` from variance.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPoint {
    pub z: Vec<f64>,
}

/// Position of `x` in an ascending sample on `[0, 1]`.
///
/// Present values map to the mean index of their tie block divided by
/// `n - 1`; values between samples are interpolated linearly; values outside
/// the sample map to 0 or 1. A single-element sample maps everything equal to
/// it to 0.5.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> Result<f64, ChoreoError> {
    let n = sorted.len();
    if n == 0 {
        return Err(ChoreoError::EmptySummary);
    }
    let block_pos = |v: f64| -> f64 {
        let lo = sorted.partition_point(|s| *s < v);
        let hi = sorted.partition_point(|s| *s <= v);
        0.5 * (lo + hi - 1) as f64
    };
    if n == 1 {
        return Ok(if x < sorted[0] {
            0.0
        } else if x > sorted[0] {
            1.0
        } else {
            0.5
        });
    }
    let last = (n - 1) as f64;
    let lo = sorted.partition_point(|s| *s < x);
    let hi = sorted.partition_point(|s| *s <= x);
    let pos = if lo < hi {
        block_pos(x)
    } else if lo == 0 {
        return Ok(0.0);
    } else if lo == n {
        return Ok(1.0);
    } else {
        let (a, b) = (sorted[lo - 1], sorted[lo]);
        let (pa, pb) = (block_pos(a), block_pos(b));
        pa + (pb - pa) * (x - a) / (b - a)
    };
    Ok(pos / last)
}

/// Maps one segment's loudness and variance into latent coordinates through
/// the clip's empirical CDFs and the probit, scaled by the prior.
pub fn features_to_latent(
    seg: &SegmentFeatures,
    summary: &FeatureSummary,
    prior: &GaussianPrior,
) -> Result<LatentPoint, ChoreoError> {
    let to_z = |sorted: &[f64], x: f64| -> Result<f64, ChoreoError> {
        let u = empirical_cdf(sorted, x)?.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
        Ok(prior.mean() + prior.std() * probit(u)?)
    };
    Ok(LatentPoint {
        z: vec![
            to_z(&summary.loudness_sorted, seg.loudness_db)?,
            to_z(&summary.variance_sorted, seg.variance)?,
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledMove {
    pub t_start: f64,
    pub t_end: f64,
    pub movement: Movement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choreography {
    pub moves: Vec<ScheduledMove>,
    pub source_bpm: f64,
}

impl Choreography {
    pub fn poses(&self) -> Vec<RobotPose> {
        self.moves
            .iter()
            .flat_map(|m| [m.movement.pose_a, m.movement.pose_b])
            .collect()
    }
}

/// Decodes one movement per inter-beat segment and schedules it on that
/// interval. Generation takes the latent point straight from the music
/// features; no sampling noise is involved.
pub fn generate_sequence(
    model: &VaeModel,
    features: &[SegmentFeatures],
    summary: &FeatureSummary,
    grid: &BeatGrid,
    limits: &JointLimits,
) -> Result<Choreography, ChoreoError> {
    if grid.len() < 2 {
        return Err(ChoreoError::TooFewBeats(grid.len()));
    }
    if features.len() != grid.intervals().len() {
        return Err(ChoreoError::CountMismatch {
            features: features.len(),
            intervals: grid.intervals().len(),
        });
    }
    if model.epochs_trained() == 0 {
        return Err(ChoreoError::UntrainedModel);
    }
    if model.latent_dim() != 2 || model.input_dim() != MOVEMENT_DIM {
        return Err(ChoreoError::IncompatibleModel {
            input_dim: model.input_dim(),
            latent_dim: model.latent_dim(),
        });
    }
    let prior = model.prior();
    let beats = grid.beats();
    let moves = features
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let latent = features_to_latent(seg, summary, &prior)?;
            let raw = model.decode(&latent.z)?;
            let m = Movement::from_vector(&model.norm().invert(&raw))?;
            Ok(ScheduledMove {
                t_start: beats[i],
                t_end: beats[i + 1],
                movement: Movement::new(clamp_pose(&m.pose_a, limits), clamp_pose(&m.pose_b, limits)),
            })
        })
        .collect::<Result<Vec<_>, ChoreoError>>()?;
    Ok(Choreography {
        moves,
        source_bpm: grid.bpm().expect("at least two beats"),
    })
}

/// True iff move `i` spans exactly `[beats[i], beats[i + 1]]` for every interval.
pub fn schedule_check(c: &Choreography, grid: &BeatGrid) -> bool {
    let beats = grid.beats();
    c.moves.len() == grid.intervals().len()
        && c
            .moves
            .iter()
            .enumerate()
            .all(|(i, m)| m.t_start == beats[i] && m.t_end == beats[i + 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub t_start: f64,
    pub t_end: f64,
    pub pose_a: BTreeMap<String, f64>,
    pub pose_b: BTreeMap<String, f64>,
}

/// `choreography.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoreographyFile {
    pub source_audio: String,
    pub bpm: f64,
    pub joint_order: Vec<String>,
    pub moves: Vec<MoveRecord>,
}

fn pose_map(pose: &RobotPose) -> BTreeMap<String, f64> {
    RobotJoint::ALL
        .iter()
        .map(|j| (j.name().to_string(), pose.get(*j)))
        .collect()
}

fn map_pose(map: &BTreeMap<String, f64>) -> Result<RobotPose, ChoreoError> {
    let mut pose = RobotPose::default();
    for j in RobotJoint::ALL {
        let v = map
            .get(j.name())
            .ok_or_else(|| ChoreoError::InvalidFile(format!("missing joint {}", j.name())))?;
        pose.set(j, *v);
    }
    Ok(pose)
}

impl ChoreographyFile {
    pub fn from_choreography(c: &Choreography, source_audio: &str) -> Self {
        Self {
            source_audio: source_audio.to_string(),
            bpm: c.source_bpm,
            joint_order: RobotJoint::ALL.iter().map(|j| j.name().to_string()).collect(),
            moves: c
                .moves
                .iter()
                .map(|m| MoveRecord {
                    t_start: m.t_start,
                    t_end: m.t_end,
                    pose_a: pose_map(&m.movement.pose_a),
                    pose_b: pose_map(&m.movement.pose_b),
                })
                .collect(),
        }
    }

    pub fn to_choreography(&self) -> Result<Choreography, ChoreoError> {
        let moves = self
            .moves
            .iter()
            .map(|m| {
                Ok(ScheduledMove {
                    t_start: m.t_start,
                    t_end: m.t_end,
                    movement: Movement::new(map_pose(&m.pose_a)?, map_pose(&m.pose_b)?),
                })
            })
            .collect::<Result<_, ChoreoError>>()?;
        Ok(Choreography {
            moves,
            source_bpm: self.bpm,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("choreography serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
