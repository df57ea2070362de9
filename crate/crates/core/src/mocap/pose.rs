//! Robot pose space: ten upper-body and head joint angles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MocapError;

/// Robot joints in canonical order. Movement vectors, dataset files and
/// evaluation reports all use this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RobotJoint {
    LElbowRoll,
    RElbowRoll,
    LElbowYaw,
    RElbowYaw,
    LShoulderRoll,
    RShoulderRoll,
    LShoulderPitch,
    RShoulderPitch,
    HeadYaw,
    HeadPitch,
}

pub const NUM_ROBOT_JOINTS: usize = 10;

impl RobotJoint {
    pub const ALL: [RobotJoint; NUM_ROBOT_JOINTS] = [
        RobotJoint::LElbowRoll,
        RobotJoint::RElbowRoll,
        RobotJoint::LElbowYaw,
        RobotJoint::RElbowYaw,
        RobotJoint::LShoulderRoll,
        RobotJoint::RShoulderRoll,
        RobotJoint::LShoulderPitch,
        RobotJoint::RShoulderPitch,
        RobotJoint::HeadYaw,
        RobotJoint::HeadPitch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RobotJoint::LElbowRoll => "LElbowRoll",
            RobotJoint::RElbowRoll => "RElbowRoll",
            RobotJoint::LElbowYaw => "LElbowYaw",
            RobotJoint::RElbowYaw => "RElbowYaw",
            RobotJoint::LShoulderRoll => "LShoulderRoll",
            RobotJoint::RShoulderRoll => "RShoulderRoll",
            RobotJoint::LShoulderPitch => "LShoulderPitch",
            RobotJoint::RShoulderPitch => "RShoulderPitch",
            RobotJoint::HeadYaw => "HeadYaw",
            RobotJoint::HeadPitch => "HeadPitch",
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RobotJoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RobotJoint {
    type Err = MocapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|j| j.name() == s)
            .ok_or_else(|| MocapError::UnknownJoint(s.to_string()))
    }
}

/// Joint angles in radians, indexed by [`RobotJoint`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotPose {
    angles: [f64; NUM_ROBOT_JOINTS],
}

impl RobotPose {
    pub fn from_angles(angles: [f64; NUM_ROBOT_JOINTS]) -> Self {
        Self { angles }
    }

    pub fn angles(&self) -> &[f64; NUM_ROBOT_JOINTS] {
        &self.angles
    }

    pub fn get(&self, joint: RobotJoint) -> f64 {
        self.angles[joint.index()]
    }

    pub fn set(&mut self, joint: RobotJoint, radians: f64) {
        self.angles[joint.index()] = radians;
    }

    pub fn is_finite(&self) -> bool {
        self.angles.iter().all(|a| a.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointLimits {
    min: [f64; NUM_ROBOT_JOINTS],
    max: [f64; NUM_ROBOT_JOINTS],
}

const DEFAULT_LIMITS: &str = include_str!("../../config/joint_limits.conf");

impl JointLimits {
    pub fn new(min: [f64; NUM_ROBOT_JOINTS], max: [f64; NUM_ROBOT_JOINTS]) -> Result<Self, MocapError> {
        for j in RobotJoint::ALL {
            let (lo, hi) = (min[j.index()], max[j.index()]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(MocapError::InvalidLimits {
                    key: j.name().to_string(),
                    reason: format!("min {lo} must be finite and below max {hi}"),
                });
            }
        }
        Ok(Self { min, max })
    }

    /// The limit table shipped in `config/joint_limits.conf`.
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_LIMITS).expect("bundled joint limits are valid")
    }

    pub fn min(&self, joint: RobotJoint) -> f64 {
        self.min[joint.index()]
    }

    pub fn max(&self, joint: RobotJoint) -> f64 {
        self.max[joint.index()]
    }

    pub fn contains(&self, pose: &RobotPose) -> bool {
        RobotJoint::ALL.iter().all(|&j| {
            let a = pose.get(j);
            a >= self.min(j) && a <= self.max(j)
        })
    }

    /// Parses `JointName.min = value` / `JointName.max = value` lines.
    /// Blank lines and `#` comments are ignored; every joint needs both bounds.
    pub fn parse(text: &str) -> Result<Self, MocapError> {
        let mut min = [None; NUM_ROBOT_JOINTS];
        let mut max = [None; NUM_ROBOT_JOINTS];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| MocapError::InvalidLimits {
                key: line.to_string(),
                reason: format!("line {}: {reason}", lineno + 1),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected 'JointName.min = value'".into()))?;
            let key = key.trim();
            let (joint, bound) = key
                .rsplit_once('.')
                .ok_or_else(|| invalid_key(key, lineno, "expected JointName.min or JointName.max"))?;
            let joint: RobotJoint = joint
                .parse()
                .map_err(|_| invalid_key(key, lineno, "unknown joint"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| invalid_key(key, lineno, "value is not a number"))?;
            let slot = match bound {
                "min" => &mut min[joint.index()],
                "max" => &mut max[joint.index()],
                _ => return Err(invalid_key(key, lineno, "bound must be 'min' or 'max'")),
            };
            if slot.replace(value).is_some() {
                return Err(invalid_key(key, lineno, "duplicate key"));
            }
        }
        let mut lo = [0.0; NUM_ROBOT_JOINTS];
        let mut hi = [0.0; NUM_ROBOT_JOINTS];
        for j in RobotJoint::ALL {
            let i = j.index();
            lo[i] = min[i].ok_or_else(|| MocapError::InvalidLimits {
                key: format!("{}.min", j.name()),
                reason: "missing".into(),
            })?;
            hi[i] = max[i].ok_or_else(|| MocapError::InvalidLimits {
                key: format!("{}.max", j.name()),
                reason: "missing".into(),
            })?;
        }
        Self::new(lo, hi)
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for j in RobotJoint::ALL {
            out.push_str(&format!("{}.min = {:?}\n", j.name(), self.min(j)));
            out.push_str(&format!("{}.max = {:?}\n", j.name(), self.max(j)));
        }
        out
    }
}

fn invalid_key(key: &str, lineno: usize, reason: &str) -> MocapError {
    MocapError::InvalidLimits {
        key: key.to_string(),
        reason: format!("line {}: {reason}", lineno + 1),
    }
}

/// Clamps every angle into its `[min, max]` range. Idempotent.
pub fn clamp_pose(pose: &RobotPose, limits: &JointLimits) -> RobotPose {
    let mut out = *pose;
    for j in RobotJoint::ALL {
        out.set(j, pose.get(j).clamp(limits.min(j), limits.max(j)));
    }
    out
}
