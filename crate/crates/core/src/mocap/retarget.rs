//! Human skeleton to robot pose retargeting.
//!
//! All angles are measured in a body frame anchored at the torso:
//!
//! ```text
//!            up
//!            |   forward (out of the chest)
//!            |  /
//!            | /
//!   left ----o---- right
//! ```
//!
//! `up` points from torso to neck, `right` from the left shoulder to the right
//! shoulder (orthogonalized against `up`), and `forward = up × right`. For an
//! upper-arm vector `a = elbow - shoulder` with body-frame components
//! `(a_r, a_u, a_f)`:
//!
//! - `ShoulderPitch = atan2(a_f, -a_u)`: 0 with the arm hanging, π/2 pointing forward.
//! - `ShoulderRoll = asin(-a_r / |a|)`: positive swings the arm toward the body's
//!   left, so the left arm lifts outward with positive roll and the right arm
//!   with negative roll.
//! - `ElbowRoll` is the angle between upper arm and forearm, negated on the left.
//! - `ElbowYaw` is the forearm's azimuth around the upper arm, 0 when the elbow
//!   bends inside the pitch plane; mirrored between sides.
//!
//! The head angles come from `head - neck`: pitch tilts toward `forward`, yaw
//! leans toward the body's left. Leg joints never contribute.

use nalgebra::Vector3;

use super::pose::{clamp_pose, JointLimits, RobotJoint, RobotPose};
use super::skeleton::{SkeletonFrame, SkeletonJoint};
use super::MocapError;
use crate::audio::BeatGrid;

const DEGENERATE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFrame {
    pub origin: Vector3<f64>,
    pub up: Vector3<f64>,
    pub right: Vector3<f64>,
    pub forward: Vector3<f64>,
}

impl BodyFrame {
    /// Components `(right, up, forward)` of a world-space direction.
    pub fn local(&self, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(v.dot(&self.right), v.dot(&self.up), v.dot(&self.forward))
    }
}

pub fn body_frame(frame: &SkeletonFrame) -> Result<BodyFrame, MocapError> {
    let torso = frame.joint(SkeletonJoint::Torso);
    let spine = frame.joint(SkeletonJoint::Neck) - torso;
    let spine_len = spine.norm();
    if !(spine_len > DEGENERATE) {
        return Err(MocapError::DegenerateGeometry("neck coincides with torso"));
    }
    let up = spine / spine_len;
    let across = frame.joint(SkeletonJoint::RightShoulder) - frame.joint(SkeletonJoint::LeftShoulder);
    let lateral = across - up * across.dot(&up);
    let lateral_len = lateral.norm();
    if !(lateral_len > DEGENERATE) {
        return Err(MocapError::DegenerateGeometry(
            "shoulders coincide or are aligned with the spine",
        ));
    }
    let right = lateral / lateral_len;
    let forward = up.cross(&right);
    Ok(BodyFrame {
        origin: torso,
        up,
        right,
        forward,
    })
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

struct ArmAngles {
    pitch: f64,
    roll: f64,
    elbow_yaw: f64,
    elbow_roll: f64,
}

fn arm_angles(frame: &SkeletonFrame, body: &BodyFrame, side: Side) -> Result<ArmAngles, MocapError> {
    let (shoulder, elbow, hand) = match side {
        Side::Left => (
            SkeletonJoint::LeftShoulder,
            SkeletonJoint::LeftElbow,
            SkeletonJoint::LeftHand,
        ),
        Side::Right => (
            SkeletonJoint::RightShoulder,
            SkeletonJoint::RightElbow,
            SkeletonJoint::RightHand,
        ),
    };
    let upper = body.local(&(frame.joint(elbow) - frame.joint(shoulder)));
    let fore = body.local(&(frame.joint(hand) - frame.joint(elbow)));
    let upper_len = upper.norm();
    let fore_len = fore.norm();
    if !(upper_len > DEGENERATE) {
        return Err(MocapError::DegenerateLimb(match side {
            Side::Left => "left upper arm",
            Side::Right => "right upper arm",
        }));
    }
    if !(fore_len > DEGENERATE) {
        return Err(MocapError::DegenerateLimb(match side {
            Side::Left => "left forearm",
            Side::Right => "right forearm",
        }));
    }
    let a = upper / upper_len;
    let f = fore / fore_len;

    let pitch = a.z.atan2(-a.y);
    let roll = (-a.x).clamp(-1.0, 1.0).asin();
    let bend = a.dot(&f).clamp(-1.0, 1.0).acos();

    let (r1, r2) = elbow_reference(&a);
    let perp = f - a * f.dot(&a);
    let yaw = if perp.norm() > 1e-9 {
        perp.dot(&r1).atan2(perp.dot(&r2))
    } else {
        0.0
    };

    Ok(match side {
        Side::Left => ArmAngles {
            pitch,
            roll,
            elbow_yaw: -yaw,
            elbow_roll: -bend,
        },
        Side::Right => ArmAngles {
            pitch,
            roll,
            elbow_yaw: yaw,
            elbow_roll: bend,
        },
    })
}

/// Orthonormal basis `(r1, r2)` of the plane normal to the unit upper-arm
/// direction `a`, in body coordinates. `r2` lies in the pitch plane, so a
/// forearm bending along `r2` has zero elbow yaw.
pub(crate) fn elbow_reference(a: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let right = Vector3::x();
    let r1 = right - a * a.x;
    if r1.norm() > 1e-6 {
        let r1 = r1.normalize();
        let r2 = a.cross(&r1);
        (r1, r2)
    } else {
        // arm points straight sideways; fall back to the forward axis
        let forward = Vector3::z();
        let r2 = (forward - a * a.z).normalize();
        let r1 = r2.cross(a);
        (r1, r2)
    }
}

/// Maps one skeleton frame to a clamped robot pose.
pub fn retarget(frame: &SkeletonFrame, limits: &JointLimits) -> Result<RobotPose, MocapError> {
    let body = body_frame(frame)?;
    let left = arm_angles(frame, &body, Side::Left)?;
    let right = arm_angles(frame, &body, Side::Right)?;

    let head = body.local(&(frame.joint(SkeletonJoint::Head) - frame.joint(SkeletonJoint::Neck)));
    if !(head.norm() > DEGENERATE) {
        return Err(MocapError::DegenerateLimb("neck to head"));
    }
    let head_pitch = head.z.atan2(head.y);
    let head_yaw = (-head.x).atan2(head.y.hypot(head.z));

    let mut pose = RobotPose::default();
    pose.set(RobotJoint::LShoulderPitch, left.pitch);
    pose.set(RobotJoint::RShoulderPitch, right.pitch);
    pose.set(RobotJoint::LShoulderRoll, left.roll);
    pose.set(RobotJoint::RShoulderRoll, right.roll);
    pose.set(RobotJoint::LElbowYaw, left.elbow_yaw);
    pose.set(RobotJoint::RElbowYaw, right.elbow_yaw);
    pose.set(RobotJoint::LElbowRoll, left.elbow_roll);
    pose.set(RobotJoint::RElbowRoll, right.elbow_roll);
    pose.set(RobotJoint::HeadYaw, head_yaw);
    pose.set(RobotJoint::HeadPitch, head_pitch);
    Ok(clamp_pose(&pose, limits))
}

/// Index of the frame whose timestamp is closest to `t`; ties go to the
/// earlier frame. `frames` must be sorted and non-empty.
pub fn nearest_frame_index(frames: &[SkeletonFrame], t: f64) -> usize {
    let idx = frames.partition_point(|f| f.timestamp < t);
    if idx == 0 {
        return 0;
    }
    if idx == frames.len() {
        return frames.len() - 1;
    }
    let before = t - frames[idx - 1].timestamp;
    let after = frames[idx].timestamp - t;
    if after < before {
        idx
    } else {
        idx - 1
    }
}

/// One retargeted pose per beat, taken from the capture frame nearest to it.
/// Capture and audio timelines must share `t = 0`.
pub fn sample_on_beats(
    frames: &[SkeletonFrame],
    grid: &BeatGrid,
    limits: &JointLimits,
) -> Result<Vec<(f64, RobotPose)>, MocapError> {
    if frames.is_empty() {
        return Err(MocapError::NoFrames);
    }
    grid.beats()
        .iter()
        .map(|&t| {
            let frame = &frames[nearest_frame_index(frames, t)];
            retarget(frame, limits).map(|pose| (t, pose))
        })
        .collect()
}
