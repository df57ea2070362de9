use super::AudioError;

/// Tempo search range in beats per minute.
pub const MIN_BPM: f64 = 40.0;
pub const MAX_BPM: f64 = 200.0;

/// Centre of the log-tempo preference used to break octave ambiguity.
const PREFERRED_BPM: f64 = 120.0;

/// Beat timestamps with their tempo and inter-beat intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatGrid {
    beats: Vec<f64>,
    intervals: Vec<f64>,
    bpm: Option<f64>,
}

impl BeatGrid {
    /// Builds a grid from strictly increasing, finite timestamps in seconds.
    ///
    /// Grids with fewer than two beats are allowed but have no tempo.
    pub fn from_beats(beats: Vec<f64>) -> Result<Self, AudioError> {
        if let Some(i) = beats.iter().position(|b| !b.is_finite()) {
            return Err(AudioError::InvalidBeats(format!("beat {i} is not finite")));
        }
        if let Some(i) = beats.windows(2).position(|w| w[1] <= w[0]) {
            return Err(AudioError::InvalidBeats(format!(
                "beats {} and {} are not strictly increasing ({} >= {})",
                i,
                i + 1,
                beats[i],
                beats[i + 1]
            )));
        }
        let intervals: Vec<f64> = beats.windows(2).map(|w| w[1] - w[0]).collect();
        let bpm = median(&intervals).map(|m| 60.0 / m);
        Ok(Self {
            beats,
            intervals,
            bpm,
        })
    }

    pub fn beats(&self) -> &[f64] {
        &self.beats
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    /// `60 / median(intervals)`; `None` with fewer than two beats.
    pub fn bpm(&self) -> Option<f64> {
        self.bpm
    }

    pub fn len(&self) -> usize {
        self.beats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_empty()
    }

    /// The same grid shifted by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> Result<Self, AudioError> {
        Self::from_beats(self.beats.iter().map(|b| b + offset).collect())
    }
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

/// Linear interpolation into the envelope at a fractional frame position.
fn sample_at(envelope: &[f64], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match (envelope.get(i), envelope.get(i + 1)) {
        (Some(a), Some(b)) => a + (b - a) * frac,
        (Some(a), None) => *a,
        _ => 0.0,
    }
}

/// Mean envelope value over the comb `phase + k * period`.
fn comb_score(envelope: &[f64], period: f64, phase: f64) -> f64 {
    let last = (envelope.len() - 1) as f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut pos = phase;
    while pos <= last {
        sum += sample_at(envelope, pos);
        count += 1;
        pos += period;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}


/// Width (standard deviation, in frames) of the smoothing applied before autocorrelation.
const ACF_SMOOTH_FRAMES: f64 = 1.5;

fn gaussian_smooth(x: &[f64], sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            (-radius..=radius)
                .filter(|k| (0..n).contains(&(i + k)))
                .map(|k| kernel[(k + radius) as usize] * x[(i + k) as usize])
                .sum()
        })
        .collect()
}

/// Estimates a beat grid from an onset envelope whose frames are
/// `hop_seconds` apart. Frame `i` maps to time `i * hop_seconds`.
///
/// The tempo comes from the envelope autocorrelation over lags between 40 and
/// 200 BPM, weighted toward 120 BPM on a log scale to settle octave
/// ambiguity. The period is then refined together with the beat phase by
/// maximizing the envelope sampled on the comb, and beats are emitted on that
/// comb.
pub fn track_beats(envelope: &[f64], hop_seconds: f64) -> Result<BeatGrid, AudioError> {
    if envelope.is_empty() {
        return Err(AudioError::InvalidParameters("empty onset envelope".into()));
    }
    if !(hop_seconds > 0.0 && hop_seconds.is_finite()) {
        return Err(AudioError::InvalidParameters(format!("hop_seconds {hop_seconds} must be positive")));
    }
    if envelope.iter().any(|v| !v.is_finite()) {
        return Err(AudioError::InvalidParameters("onset envelope is not finite".into()));
    }
    let n = envelope.len();
    let mean = envelope.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = envelope.iter().map(|v| v - mean).collect();
    let energy: f64 = centred.iter().map(|v| v * v).sum();
    let scale: f64 = envelope.iter().map(|v| v * v).sum();
    if !(energy > 1e-12 * scale) || energy == 0.0 {
        return Err(AudioError::NoBeatDetected);
    }

    let lag_min = ((60.0 / (MAX_BPM * hop_seconds)).floor() as usize).max(1);
    let lag_max = ((60.0 / (MIN_BPM * hop_seconds)).ceil() as usize).min(n - 1);
    if lag_min + 1 >= lag_max {
        return Err(AudioError::NoBeatDetected);
    }

    // A beat period is rarely a whole number of hops, so onset peaks jitter by
    // a frame; smoothing keeps that jitter from splitting the autocorrelation
    // peak at the true lag while leaving the one at twice the lag intact.
    let smooth = gaussian_smooth(&centred, ACF_SMOOTH_FRAMES);
    let smooth_energy: f64 = smooth.iter().map(|v| v * v).sum();
    let autocorr = |lag: usize| -> f64 {
        smooth[..n - lag]
            .iter()
            .zip(&smooth[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / smooth_energy
    };
    let tempo_weight = |lag: f64| {
        let bpm = 60.0 / (lag * hop_seconds);
        let octaves = (bpm / PREFERRED_BPM).log2();
        (-0.5 * octaves * octaves).exp()
    };
    let ac: Vec<f64> = (0..=lag_max + 1).map(|l| if l < n { autocorr(l) } else { 0.0 }).collect();
    let best = (lag_min..=lag_max)
        .max_by(|&a, &b| {
            let sa = ac[a] * tempo_weight(a as f64);
            let sb = ac[b] * tempo_weight(b as f64);
            sa.total_cmp(&sb)
        })
        .expect("non-empty lag range");
    if ac[best] <= 0.0 {
        return Err(AudioError::NoBeatDetected);
    }

    // parabolic peak interpolation
    let mut period = best as f64;
    if best > lag_min && best < lag_max {
        let (y0, y1, y2) = (ac[best - 1], ac[best], ac[best + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        if denom < 0.0 {
            let shift = 0.5 * (y0 - y2) / denom;
            if shift.abs() < 1.0 {
                period += shift;
            }
        }
    }

    // joint refinement of period (±2 %) and phase on the comb
    let mut best_fit = (f64::NEG_INFINITY, period, 0.0);
    for k in -40..=40 {
        let p = period * (1.0 + 0.0005 * k as f64);
        let steps = (p / 0.05).ceil() as usize;
        for s in 0..steps {
            let phase = s as f64 * 0.05;
            let score = comb_score(envelope, p, phase);
            if score > best_fit.0 {
                best_fit = (score, p, phase);
            }
        }
    }
    let (_, period, phase) = best_fit;

    let last = (n - 1) as f64;
    let mut beats = Vec::new();
    let mut pos = phase;
    while pos <= last {
        beats.push(pos * hop_seconds);
        pos += period;
    }
    if beats.len() < 2 {
        return Err(AudioError::TooFewBeats(beats.len()));
    }
    BeatGrid::from_beats(beats)
}
