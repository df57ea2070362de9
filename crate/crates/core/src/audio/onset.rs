use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioError, PcmSignal};

/// Half-wave-rectified spectral flux, one value per analysis frame.
///
/// Frames start every `hop` samples and span `frame_size` samples under a Hann
/// window, zero-padded to the next power of two. Frame `i` is compared with
/// frame `i - 1` (an all-zero spectrum for the first frame), keeping only bins
/// whose magnitude grew. The result has `floor((n - frame_size) / hop) + 1`
/// entries.
pub fn onset_envelope(signal: &PcmSignal, frame_size: usize, hop: usize) -> Result<Vec<f64>, AudioError> {
    if hop == 0 || frame_size < hop {
        return Err(AudioError::InvalidParameters(format!(
            "need frame_size >= hop > 0 (frame_size {frame_size}, hop {hop})"
        )));
    }
    let samples = signal.samples();
    if samples.len() < frame_size {
        return Err(AudioError::SignalTooShort {
            samples: samples.len(),
            required: frame_size,
        });
    }
    let n_frames = (samples.len() - frame_size) / hop + 1;
    let fft_len = frame_size.next_power_of_two();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_len);
    let window: Vec<f64> = (0..frame_size)
        .map(|i| {
            let s = (std::f64::consts::PI * i as f64 / frame_size as f64).sin();
            s * s
        })
        .collect();

    let bins = fft_len / 2 + 1;
    let mut prev = vec![0.0; bins];
    let mut mag = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    let mut envelope = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let frame = &samples[f * hop..f * hop + frame_size];
        for (slot, (x, w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            *slot = Complex::new(x * w, 0.0);
        }
        for slot in &mut buf[frame_size..] {
            *slot = Complex::new(0.0, 0.0);
        }
        fft.process(&mut buf);
        for (m, c) in mag.iter_mut().zip(&buf) {
            *m = c.norm();
        }
        let flux: f64 = mag
            .iter()
            .zip(&prev)
            .map(|(m, p)| (m - p).max(0.0))
            .sum();
        envelope.push(flux);
        std::mem::swap(&mut prev, &mut mag);
    }
    Ok(envelope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_gives_zero_envelope() {
        let sig = PcmSignal::new(vec![0.0; 8192], 44_100).unwrap();
        let env = onset_envelope(&sig, 1024, 512).unwrap();
        assert_eq!(env.len(), (8192 - 1024) / 512 + 1);
        assert!(env.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stationary_tone_has_no_flux_after_first_frame() {
        // bin-centred tone: an even bin index keeps frames identical across a half-frame hop
        let sr = 44_100;
        let freq = 40.0 * sr as f64 / 1024.0;
        let samples: Vec<f64> = (0..sr)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
            .collect();
        let env = onset_envelope(&PcmSignal::new(samples, sr).unwrap(), 1024, 512).unwrap();
        let peak = env.iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, env[0]);
        assert!(env[1..].iter().all(|&v| v < 1e-6 * peak));
    }

    #[test]
    fn generic_tone_flux_is_small() {
        let sr = 44_100;
        let samples: Vec<f64> = (0..sr)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / sr as f64).sin())
            .collect();
        let env = onset_envelope(&PcmSignal::new(samples, sr).unwrap(), 1024, 512).unwrap();
        let peak = env[0];
        assert!(env[1..].iter().all(|&v| v < 1e-2 * peak));
    }

    #[test]
    fn clicks_peak_within_one_hop() {
        let sr = 44_100u32;
        let hop = 512;
        let mut samples = vec![0.0; sr as usize * 4];
        let clicks: Vec<usize> = (0..8).map(|k| 11_025 + k * 22_050).collect();
        for &c in &clicks {
            samples[c] = 1.0;
        }
        let env = onset_envelope(&PcmSignal::new(samples, sr).unwrap(), 1024, hop).unwrap();
        for &c in &clicks {
            // strongest frame near this click, measured at frame centres
            let (best, _) = env
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let centre = (i * hop + 512) as i64;
                    (centre - c as i64).abs() < 1024
                })
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let centre = (best * hop + 512) as i64;
            assert!((centre - c as i64).abs() <= hop as i64, "click {c} peak {centre}");
        }
    }

    #[test]
    fn parameter_errors() {
        let sig = PcmSignal::new(vec![0.0; 100], 8000).unwrap();
        assert!(matches!(onset_envelope(&sig, 1024, 512), Err(AudioError::SignalTooShort { .. })));
        assert!(matches!(onset_envelope(&sig, 16, 32), Err(AudioError::InvalidParameters(_))));
        assert!(matches!(onset_envelope(&sig, 16, 0), Err(AudioError::InvalidParameters(_))));
    }
}
