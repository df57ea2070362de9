//! Procedural fixtures: click tracks with known beats, oscillating arm
//! choreographies, and skeletons posed by forward kinematics.
//!
//! These drive the test suites and benchmarks, and give the CLI something to
//! chew on without recorded data.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::PcmSignal;
use crate::dataset::Movement;
use crate::mocap::{clamp_pose, JointLimits, RobotJoint, RobotPose, SkeletonFrame, SkeletonJoint};

/// A metronome-like signal: a decaying 2 kHz burst on every beat, plus
/// optional white noise. With an accent pattern, click levels follow it and a
/// low tone bed whose level and tremolo change from beat to beat is added, so
/// segments differ in loudness and dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickTrack {
    pub bpm: f64,
    pub seconds: f64,
    pub sample_rate: u32,
    /// Time of the first click.
    pub offset: f64,
    /// Per-beat level multipliers, cycled. Empty means all ones.
    pub accents: Vec<f64>,
    /// RMS level of additive Gaussian noise in dBFS.
    pub noise_dbfs: Option<f64>,
}

impl ClickTrack {
    pub fn new(bpm: f64, seconds: f64) -> Self {
        Self {
            bpm,
            seconds,
            sample_rate: 22_050,
            offset: 0.25,
            accents: Vec::new(),
            noise_dbfs: None,
        }
    }

    pub fn with_noise(mut self, dbfs: f64) -> Self {
        self.noise_dbfs = Some(dbfs);
        self
    }

    pub fn with_accents(mut self, accents: Vec<f64>) -> Self {
        self.accents = accents;
        self
    }

    /// Click onset times that fall inside the clip.
    pub fn beat_times(&self) -> Vec<f64> {
        let period = 60.0 / self.bpm;
        (0..)
            .map(|k| self.offset + k as f64 * period)
            .take_while(|t| *t < self.seconds)
            .collect()
    }

    fn accent(&self, k: usize) -> f64 {
        if self.accents.is_empty() {
            1.0
        } else {
            self.accents[k % self.accents.len()]
        }
    }

    pub fn render(&self, seed: u64) -> PcmSignal {
        let sr = self.sample_rate as f64;
        let n = (self.seconds * sr) as usize;
        let mut samples = vec![0.0; n];
        let beats = self.beat_times();

        // tone bed (accented tracks only): level follows the accent of the
        // preceding beat, with a tremolo whose depth cycles every three beats
        for (k, &t0) in beats.iter().enumerate().filter(|_| !self.accents.is_empty()) {
            let t1 = beats.get(k + 1).copied().unwrap_or(self.seconds);
            let level = 0.08 * self.accent(k);
            let wobble = 0.5 + 0.5 * ((k % 3) as f64) / 2.0;
            for i in (t0 * sr) as usize..((t1 * sr) as usize).min(n) {
                let t = i as f64 / sr;
                let env = 1.0 - wobble * 0.5 * (1.0 + (2.0 * PI * 8.0 * (t - t0)).cos()) * 0.5;
                samples[i] += level * env * (2.0 * PI * 220.0 * t).sin();
            }
        }

        let burst = (0.03 * sr) as usize;
        for (k, &t0) in beats.iter().enumerate() {
            let start = (t0 * sr).round() as usize;
            let amp = 0.5 * self.accent(k).min(1.5);
            for j in 0..burst.min(n.saturating_sub(start)) {
                let t = j as f64 / sr;
                samples[start + j] += amp * (-t / 0.005).exp() * (2.0 * PI * 2000.0 * t).sin();
            }
        }

        if let Some(db) = self.noise_dbfs {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 10f64.powf(db / 20.0)).expect("finite noise level");
            for s in &mut samples {
                *s += noise.sample(&mut rng);
            }
        }
        PcmSignal::new(samples, self.sample_rate).expect("finite samples and nonzero rate")
    }
}

/// Arm-oscillation dance sampled once per beat: shoulders trace ellipses with
/// a period of eight beats, elbows pump at half that period, the head nods.
/// Small seeded jitter keeps the sequence from being exactly periodic.
pub fn oscillation_poses(count: usize, seed: u64) -> Vec<RobotPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = JointLimits::default_table();
    let jitter = Normal::new(0.0, 0.03).expect("valid jitter");
    let phase0 = rng.gen_range(0.0..2.0 * PI);
    (0..count)
        .map(|k| {
            let th = phase0 + 2.0 * PI * k as f64 / 8.0;
            let mut pose = RobotPose::default();
            let mut put = |j: RobotJoint, v: f64| pose.set(j, v);
            put(RobotJoint::LShoulderPitch, 1.2 + 0.6 * th.sin());
            put(RobotJoint::RShoulderPitch, 1.2 - 0.6 * th.sin());
            put(RobotJoint::LShoulderRoll, 0.5 + 0.35 * th.cos());
            put(RobotJoint::RShoulderRoll, -0.5 + 0.35 * th.cos());
            put(RobotJoint::LElbowRoll, -0.8 - 0.5 * (2.0 * th).sin());
            put(RobotJoint::RElbowRoll, 0.8 + 0.5 * (2.0 * th).sin());
            put(RobotJoint::LElbowYaw, -0.6 + 0.4 * th.cos());
            put(RobotJoint::RElbowYaw, 0.6 - 0.4 * th.cos());
            put(RobotJoint::HeadYaw, 0.15 * th.sin());
            put(RobotJoint::HeadPitch, 0.1 * (2.0 * th).cos());
            for j in RobotJoint::ALL {
                let v = pose.get(j) + jitter.sample(&mut rng);
                pose.set(j, v);
            }
            clamp_pose(&pose, &limits)
        })
        .collect()
}

/// `count` consecutive movements from [`oscillation_poses`].
pub fn oscillation_movements(count: usize, seed: u64) -> Vec<Movement> {
    oscillation_poses(2 * count, seed)
        .chunks_exact(2)
        .map(|c| Movement::new(c[0], c[1]))
        .collect()
}

const SPINE: f64 = 0.3;
const SHOULDER_HALF: f64 = 0.2;
const SHOULDER_DROP: f64 = 0.05;
const UPPER_ARM: f64 = 0.28;
const FOREARM: f64 = 0.25;
const NECK_TO_HEAD: f64 = 0.2;

fn arm_vectors(pitch: f64, roll: f64, yaw: f64, bend: f64) -> (Vector3<f64>, Vector3<f64>) {
    let a = Vector3::new(-roll.sin(), -roll.cos() * pitch.cos(), roll.cos() * pitch.sin());
    let (r1, r2) = crate::mocap::elbow_reference(&a);
    let f = a * bend.cos() + (r1 * yaw.sin() + r2 * yaw.cos()) * bend.sin();
    (a * UPPER_ARM, f * FOREARM)
}

/// Skeleton whose retargeted angles reproduce `pose` (for poses away from the
/// singular configurations: |roll| < π/2, nonzero elbow bend).
///
/// The body stands upright with the torso at `(0, 1.2, 0)`, `up = +y`,
/// `forward = +z` and the right shoulder toward `-x`.
pub fn skeleton_from_pose(pose: &RobotPose, timestamp: f64) -> SkeletonFrame {
    let (right, up, forward) = (-Vector3::x(), Vector3::y(), Vector3::z());
    let world = |v: Vector3<f64>| right * v.x + up * v.y + forward * v.z;
    let torso = Vector3::new(0.0, 1.2, 0.0);
    let neck = torso + up * SPINE;
    let l_shoulder = neck - right * SHOULDER_HALF - up * SHOULDER_DROP;
    let r_shoulder = neck + right * SHOULDER_HALF - up * SHOULDER_DROP;

    let (la, lf) = arm_vectors(
        pose.get(RobotJoint::LShoulderPitch),
        pose.get(RobotJoint::LShoulderRoll),
        -pose.get(RobotJoint::LElbowYaw),
        -pose.get(RobotJoint::LElbowRoll),
    );
    let (ra, rf) = arm_vectors(
        pose.get(RobotJoint::RShoulderPitch),
        pose.get(RobotJoint::RShoulderRoll),
        pose.get(RobotJoint::RElbowYaw),
        pose.get(RobotJoint::RElbowRoll),
    );
    let (hy, hp) = (pose.get(RobotJoint::HeadYaw), pose.get(RobotJoint::HeadPitch));
    let head = Vector3::new(-hy.sin(), hy.cos() * hp.cos(), hy.cos() * hp.sin()) * NECK_TO_HEAD;

    let mut joints = [Vector3::zeros(); crate::mocap::NUM_SKELETON_JOINTS];
    let mut put = |j: SkeletonJoint, p: Vector3<f64>| joints[j.index()] = p;
    put(SkeletonJoint::Torso, torso);
    put(SkeletonJoint::Neck, neck);
    put(SkeletonJoint::Head, neck + world(head));
    put(SkeletonJoint::LeftShoulder, l_shoulder);
    put(SkeletonJoint::LeftElbow, l_shoulder + world(la));
    put(SkeletonJoint::LeftHand, l_shoulder + world(la) + world(lf));
    put(SkeletonJoint::RightShoulder, r_shoulder);
    put(SkeletonJoint::RightElbow, r_shoulder + world(ra));
    put(SkeletonJoint::RightHand, r_shoulder + world(ra) + world(rf));
    for (hip, knee, foot, side) in [
        (SkeletonJoint::LeftHip, SkeletonJoint::LeftKnee, SkeletonJoint::LeftFoot, -1.0),
        (SkeletonJoint::RightHip, SkeletonJoint::RightKnee, SkeletonJoint::RightFoot, 1.0),
    ] {
        let h = torso + right * (0.1 * side) - up * 0.3;
        put(hip, h);
        put(knee, h - up * 0.4);
        put(foot, h - up * 0.85);
    }
    SkeletonFrame { timestamp, joints }
}

/// Skeleton capture of the oscillation dance at `fps`, lasting `seconds`;
/// the dance advances one pose per `beat_period` and is interpolated between.
pub fn oscillation_capture(seconds: f64, fps: f64, beat_period: f64, seed: u64) -> Vec<SkeletonFrame> {
    let n_beats = (seconds / beat_period).ceil() as usize + 2;
    let poses = oscillation_poses(n_beats, seed);
    let n_frames = (seconds * fps) as usize;
    (0..n_frames)
        .map(|i| {
            let t = i as f64 / fps;
            let x = t / beat_period;
            let k = x.floor() as usize;
            let w = x - k as f64;
            let a = poses[k].angles();
            let b = poses[k + 1].angles();
            let mut angles = [0.0; 10];
            for j in 0..10 {
                angles[j] = a[j] + w * (b[j] - a[j]);
            }
            skeleton_from_pose(&RobotPose::from_angles(angles), t)
        })
        .collect()
}
