use std::io::Cursor;

use super::AudioError;

/// Mono PCM audio normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl PcmSignal {
    /// Samples are clamped into `[-1, 1]`; non-finite samples are rejected.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidSignal(format!("sample {i} is not finite")));
        }
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Decodes a RIFF/WAVE byte stream (16-bit integer or 32-bit float PCM, mono
/// or stereo). Stereo is averaged to mono; 16-bit samples are scaled by 1/32768.
pub fn decode_wav(bytes: &[u8]) -> Result<PcmSignal, AudioError> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(header_error)?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{} channels (only mono and stereo are supported)",
            spec.channels
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(data_error)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(data_error)?,
        (format, bits) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "{bits}-bit {format:?} samples (expected 16-bit int or 32-bit float)"
            )))
        }
    };
    let channels = spec.channels as usize;
    if interleaved.len() % channels != 0 {
        return Err(AudioError::Truncated("partial stereo frame at end of data".into()));
    }
    let mono = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    PcmSignal::new(mono, spec.sample_rate)
}

fn header_error(err: hound::Error) -> AudioError {
    match err {
        hound::Error::Unsupported => AudioError::UnsupportedFormat("codec not supported".into()),
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            AudioError::MalformedHeader("header ends prematurely".into())
        }
        other => AudioError::MalformedHeader(other.to_string()),
    }
}

fn data_error(err: hound::Error) -> AudioError {
    match err {
        // reading from memory, so any I/O failure here means the bytes ran out
        hound::Error::IoError(e) => AudioError::Truncated(format!("sample data ends early: {e}")),
        hound::Error::FormatError(msg) => AudioError::Truncated(msg.to_string()),
        hound::Error::Unsupported => AudioError::UnsupportedFormat("codec not supported".into()),
        other => AudioError::MalformedHeader(other.to_string()),
    }
}

/// Encodes mono samples as 16-bit PCM WAV.
pub fn encode_wav_i16(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec).expect("in-memory writer");
        for &s in samples {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            writer.write_sample(v).expect("in-memory write");
        }
        writer.finalize().expect("in-memory finalize");
    }
    cursor.into_inner()
}
