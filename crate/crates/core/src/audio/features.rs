use serde::{Deserialize, Serialize};

use super::{AudioError, BeatGrid, PcmSignal};

/// Loudness floor in dBFS, the noise floor of 16-bit audio.
pub const LOUDNESS_FLOOR_DB: f64 = -96.0;

/// Length of the short frames whose RMS values feed the segment variance.
pub const VARIANCE_FRAME_SECONDS: f64 = 0.01;

/// Loudness and dynamics of the audio between two consecutive beats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentFeatures {
    pub t_start: f64,
    pub t_end: f64,
    /// RMS level of the segment in dBFS, clamped to `[-96, 0]`.
    pub loudness_db: f64,
    /// Population variance of the 10 ms frame RMS values inside the segment.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSummary {
    pub loudness_mean: f64,
    pub variance_mean: f64,
    /// Ascending copies of the per-segment values.
    pub loudness_sorted: Vec<f64>,
    pub variance_sorted: Vec<f64>,
}

fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

fn to_db(rms: f64) -> f64 {
    if rms <= 0.0 {
        LOUDNESS_FLOOR_DB
    } else {
        (20.0 * rms.log10()).clamp(LOUDNESS_FLOOR_DB, 0.0)
    }
}

/// One [`SegmentFeatures`] per inter-beat interval, in beat order.
pub fn segment_features(signal: &PcmSignal, grid: &BeatGrid) -> Result<Vec<SegmentFeatures>, AudioError> {
    let sr = signal.sample_rate() as f64;
    let samples = signal.samples();
    let duration = signal.duration();
    if let Some(&b) = grid.beats().iter().find(|&&b| b < 0.0 || b > duration) {
        return Err(AudioError::BeatOutOfRange { beat: b, duration });
    }
    let frame_len = ((VARIANCE_FRAME_SECONDS * sr).round() as usize).max(1);

    grid.beats()
        .windows(2)
        .map(|w| {
            let (t_start, t_end) = (w[0], w[1]);
            let start = (t_start * sr).round() as usize;
            let end = ((t_end * sr).round() as usize).min(samples.len());
            if start >= end {
                return Err(AudioError::EmptySegment { t_start, t_end });
            }
            let seg = &samples[start..end];
            let frame_rms: Vec<f64> = if seg.len() < frame_len {
                vec![rms(seg)]
            } else {
                seg.chunks_exact(frame_len).map(rms).collect()
            };
            let mean = frame_rms.iter().sum::<f64>() / frame_rms.len() as f64;
            let variance =
                frame_rms.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / frame_rms.len() as f64;
            Ok(SegmentFeatures {
                t_start,
                t_end,
                loudness_db: to_db(rms(seg)),
                variance,
            })
        })
        .collect()
}

pub fn summarize(features: &[SegmentFeatures]) -> Result<FeatureSummary, AudioError> {
    if features.is_empty() {
        return Err(AudioError::NoSegments);
    }
    let n = features.len() as f64;
    let mut loudness_sorted: Vec<f64> = features.iter().map(|f| f.loudness_db).collect();
    let mut variance_sorted: Vec<f64> = features.iter().map(|f| f.variance).collect();
    let loudness_mean = loudness_sorted.iter().sum::<f64>() / n;
    let variance_mean = variance_sorted.iter().sum::<f64>() / n;
    loudness_sorted.sort_by(f64::total_cmp);
    variance_sorted.sort_by(f64::total_cmp);
    Ok(FeatureSummary {
        loudness_mean,
        variance_mean,
        loudness_sorted,
        variance_sorted,
    })
}
