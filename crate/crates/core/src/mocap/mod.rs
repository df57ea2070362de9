//! Skeleton capture ingestion and retargeting onto the robot's joints.

mod pose;
mod retarget;
mod skeleton;

pub use pose::{clamp_pose, JointLimits, RobotJoint, RobotPose, NUM_ROBOT_JOINTS};
pub use retarget::{body_frame, nearest_frame_index, retarget, sample_on_beats, BodyFrame};
pub use skeleton::{parse_skeleton, write_skeleton, SkeletonFrame, SkeletonJoint, NUM_SKELETON_JOINTS};

pub(crate) use retarget::elbow_reference;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MocapError {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: missing joint '{joint}'")]
    MissingJoint { line: usize, joint: &'static str },
    #[error("line {line}: timestamp {current} does not follow {previous}")]
    NonMonotonicTimestamp {
        line: usize,
        previous: f64,
        current: f64,
    },
    #[error("degenerate skeleton: {0}")]
    DegenerateGeometry(&'static str),
    #[error("zero-length limb: {0}")]
    DegenerateLimb(&'static str),
    #[error("unknown joint '{0}'")]
    UnknownJoint(String),
    #[error("invalid joint limit '{key}': {reason}")]
    InvalidLimits { key: String, reason: String },
    #[error("no capture frames")]
    NoFrames,
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    t: f64,
    joints: BTreeMap<String, f64>,
}

/// One `{"t": seconds, "joints": {"JointName": radians}}` object per line.
pub fn write_poses(poses: &[(f64, RobotPose)]) -> String {
    let mut out = String::new();
    for (t, pose) in poses {
        let rec = PoseRecord {
            t: *t,
            joints: RobotJoint::ALL
                .iter()
                .map(|j| (j.name().to_string(), pose.get(*j)))
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("pose serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_poses(text: &str) -> Result<Vec<(f64, RobotPose)>, MocapError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let rec: PoseRecord = serde_json::from_str(line).map_err(|e| MocapError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let mut pose = RobotPose::default();
        for j in RobotJoint::ALL {
            let v = rec.joints.get(j.name()).ok_or(MocapError::MissingJoint {
                line: line_no,
                joint: j.name(),
            })?;
            pose.set(j, *v);
        }
        if rec.joints.len() != RobotJoint::ALL.len() {
            let extra = rec
                .joints
                .keys()
                .find(|k| k.parse::<RobotJoint>().is_err())
                .cloned()
                .unwrap_or_default();
            return Err(MocapError::MalformedLine {
                line: line_no,
                message: format!("unknown joint '{extra}'"),
            });
        }
        out.push((rec.t, pose));
    }
    Ok(out)
}
