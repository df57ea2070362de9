//! 15-joint skeleton captures stored as JSON lines.
//!
//! Each line is `{"t": seconds, "joints": {"head": [x, y, z], ...}}` with
//! coordinates in meters. Timestamps must be strictly increasing.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::MocapError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SkeletonJoint {
    Head,
    Neck,
    Torso,
    LeftShoulder,
    LeftElbow,
    LeftHand,
    RightShoulder,
    RightElbow,
    RightHand,
    LeftHip,
    LeftKnee,
    LeftFoot,
    RightHip,
    RightKnee,
    RightFoot,
}

pub const NUM_SKELETON_JOINTS: usize = 15;

impl SkeletonJoint {
    pub const ALL: [SkeletonJoint; NUM_SKELETON_JOINTS] = [
        SkeletonJoint::Head,
        SkeletonJoint::Neck,
        SkeletonJoint::Torso,
        SkeletonJoint::LeftShoulder,
        SkeletonJoint::LeftElbow,
        SkeletonJoint::LeftHand,
        SkeletonJoint::RightShoulder,
        SkeletonJoint::RightElbow,
        SkeletonJoint::RightHand,
        SkeletonJoint::LeftHip,
        SkeletonJoint::LeftKnee,
        SkeletonJoint::LeftFoot,
        SkeletonJoint::RightHip,
        SkeletonJoint::RightKnee,
        SkeletonJoint::RightFoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SkeletonJoint::Head => "head",
            SkeletonJoint::Neck => "neck",
            SkeletonJoint::Torso => "torso",
            SkeletonJoint::LeftShoulder => "left_shoulder",
            SkeletonJoint::LeftElbow => "left_elbow",
            SkeletonJoint::LeftHand => "left_hand",
            SkeletonJoint::RightShoulder => "right_shoulder",
            SkeletonJoint::RightElbow => "right_elbow",
            SkeletonJoint::RightHand => "right_hand",
            SkeletonJoint::LeftHip => "left_hip",
            SkeletonJoint::LeftKnee => "left_knee",
            SkeletonJoint::LeftFoot => "left_foot",
            SkeletonJoint::RightHip => "right_hip",
            SkeletonJoint::RightKnee => "right_knee",
            SkeletonJoint::RightFoot => "right_foot",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|j| j.name() == name)
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SkeletonJoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonFrame {
    pub timestamp: f64,
    pub joints: [Vector3<f64>; NUM_SKELETON_JOINTS],
}

impl SkeletonFrame {
    #[inline]
    pub fn joint(&self, joint: SkeletonJoint) -> Vector3<f64> {
        self.joints[joint.index()]
    }

    pub fn joint_mut(&mut self, joint: SkeletonJoint) -> &mut Vector3<f64> {
        &mut self.joints[joint.index()]
    }
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    joints: BTreeMap<String, [f64; 3]>,
}

/// Parses skeleton JSON lines. Blank lines are skipped; an empty input yields
/// no frames.
pub fn parse_skeleton(text: &str) -> Result<Vec<SkeletonFrame>, MocapError> {
    let mut frames: Vec<SkeletonFrame> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(line).map_err(|e| MocapError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if !rec.t.is_finite() {
            return Err(MocapError::MalformedLine {
                line: line_no,
                message: "timestamp is not finite".into(),
            });
        }
        if let Some(unknown) = rec.joints.keys().find(|k| SkeletonJoint::from_name(k).is_none()) {
            return Err(MocapError::MalformedLine {
                line: line_no,
                message: format!("unknown joint '{unknown}'"),
            });
        }
        let mut joints = [Vector3::zeros(); NUM_SKELETON_JOINTS];
        for joint in SkeletonJoint::ALL {
            let p = rec.joints.get(joint.name()).ok_or(MocapError::MissingJoint {
                line: line_no,
                joint: joint.name(),
            })?;
            joints[joint.index()] = Vector3::new(p[0], p[1], p[2]);
        }
        if let Some(prev) = frames.last() {
            if rec.t <= prev.timestamp {
                return Err(MocapError::NonMonotonicTimestamp {
                    line: line_no,
                    previous: prev.timestamp,
                    current: rec.t,
                });
            }
        }
        frames.push(SkeletonFrame {
            timestamp: rec.t,
            joints,
        });
    }
    Ok(frames)
}

pub fn write_skeleton(frames: &[SkeletonFrame]) -> String {
    let mut out = String::new();
    for frame in frames {
        let rec = FrameRecord {
            t: frame.timestamp,
            joints: SkeletonJoint::ALL
                .iter()
                .map(|j| {
                    let p = frame.joint(*j);
                    (j.name().to_string(), [p.x, p.y, p.z])
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("frame serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64) -> SkeletonFrame {
        SkeletonFrame {
            timestamp: t,
            joints: std::array::from_fn(|i| Vector3::new(i as f64 * 0.1, 1.0 / (i as f64 + 3.0), -0.25 * t)),
        }
    }

    #[test]
    fn empty_input_yields_no_frames() {
        assert!(parse_skeleton("").unwrap().is_empty());
        assert!(parse_skeleton("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn write_then_parse_is_bit_identical() {
        let frames = vec![frame(0.0), frame(1.0 / 30.0)];
        let text = write_skeleton(&frames);
        let back = parse_skeleton(&text).unwrap();
        assert_eq!(back, frames);
        assert_eq!(write_skeleton(&back), text);
    }

    #[test]
    fn missing_joint_names_line_and_joint() {
        let frames: Vec<_> = (0..3).map(|i| frame(i as f64 * 0.1)).collect();
        let text = write_skeleton(&frames);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut v: serde_json::Value = serde_json::from_str(&lines[2]).unwrap();
        v["joints"].as_object_mut().unwrap().remove("left_elbow");
        lines[2] = v.to_string();
        let err = parse_skeleton(&lines.join("\n")).unwrap_err();
        assert_eq!(
            err,
            MocapError::MissingJoint {
                line: 3,
                joint: "left_elbow"
            }
        );
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn rejects_backwards_time_and_garbage() {
        let text = write_skeleton(&[frame(0.5), frame(0.2)]);
        assert!(matches!(
            parse_skeleton(&text),
            Err(MocapError::NonMonotonicTimestamp { line: 2, .. })
        ));
        let text = format!("{}not json\n", write_skeleton(&[frame(0.0)]));
        assert!(matches!(
            parse_skeleton(&text),
            Err(MocapError::MalformedLine { line: 2, .. })
        ));
    }
}
