//! Audio decoding and beat-aligned music features.
//!
//! The chain is: PCM → spectral-flux onset envelope → autocorrelation tempo
//! and comb-fitted beat grid → loudness and short-frame RMS variance for every
//! inter-beat segment.

mod beats;
mod features;
mod onset;
mod wav;

pub use beats::{track_beats, BeatGrid, MAX_BPM, MIN_BPM};
pub use features::{
    segment_features, summarize, FeatureSummary, SegmentFeatures, LOUDNESS_FLOOR_DB, VARIANCE_FRAME_SECONDS,
};
pub use onset::onset_envelope;
pub use wav::{decode_wav, encode_wav_i16, PcmSignal};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AudioError {
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated audio data: {0}")]
    Truncated(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid analysis parameters: {0}")]
    InvalidParameters(String),
    #[error("signal has {samples} samples, need at least {required}")]
    SignalTooShort { samples: usize, required: usize },
    #[error("no beat detected")]
    NoBeatDetected,
    #[error("only {0} beat(s) detected, need at least 2")]
    TooFewBeats(usize),
    #[error("invalid beat grid: {0}")]
    InvalidBeats(String),
    #[error("beat at {beat} s lies outside the signal (duration {duration} s)")]
    BeatOutOfRange { beat: f64, duration: f64 },
    #[error("empty segment between beats {t_start} s and {t_end} s")]
    EmptySegment { t_start: f64, t_end: f64 },
    #[error("no segments to summarize")]
    NoSegments,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub frame_size: usize,
    pub hop: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frame_size: 1024,
            hop: 512,
        }
    }
}

/// Everything extracted from one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeatures {
    pub sample_rate: u32,
    pub grid: BeatGrid,
    pub segments: Vec<SegmentFeatures>,
    pub summary: FeatureSummary,
}

/// Runs the full feature chain on a decoded signal.
///
/// Beat times refer to the centre of the analysis frame in which each onset
/// is detected.
pub fn analyze(signal: &PcmSignal, config: &AnalysisConfig) -> Result<AudioFeatures, AudioError> {
    let envelope = onset_envelope(signal, config.frame_size, config.hop)?;
    let sr = signal.sample_rate() as f64;
    let grid = track_beats(&envelope, config.hop as f64 / sr)?;
    let grid = grid.shifted(0.5 * config.frame_size as f64 / sr)?;
    let segments = segment_features(signal, &grid)?;
    let summary = summarize(&segments)?;
    Ok(AudioFeatures {
        sample_rate: signal.sample_rate(),
        grid,
        segments,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub loudness_mean: f64,
    pub variance_mean: f64,
}

/// `features.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesFile {
    pub sample_rate: u32,
    pub bpm: f64,
    pub beats: Vec<f64>,
    pub intervals: Vec<f64>,
    pub segments: Vec<SegmentFeatures>,
    pub summary: SummaryRecord,
}

impl FeaturesFile {
    pub fn from_features(features: &AudioFeatures) -> Self {
        Self {
            sample_rate: features.sample_rate,
            bpm: features.grid.bpm().unwrap_or(0.0),
            beats: features.grid.beats().to_vec(),
            intervals: features.grid.intervals().to_vec(),
            segments: features.segments.clone(),
            summary: SummaryRecord {
                loudness_mean: features.summary.loudness_mean,
                variance_mean: features.summary.variance_mean,
            },
        }
    }

    /// Rebuilds the in-memory features, checking the document's internal consistency.
    pub fn to_features(&self) -> Result<AudioFeatures, AudioError> {
        let grid = BeatGrid::from_beats(self.beats.clone())?;
        if grid.len() < 2 {
            return Err(AudioError::TooFewBeats(grid.len()));
        }
        if self.segments.len() != grid.intervals().len() {
            return Err(AudioError::InvalidBeats(format!(
                "{} segments for {} intervals",
                self.segments.len(),
                grid.intervals().len()
            )));
        }
        let summary = summarize(&self.segments)?;
        Ok(AudioFeatures {
            sample_rate: self.sample_rate,
            grid,
            segments: self.segments.clone(),
            summary,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("features serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
