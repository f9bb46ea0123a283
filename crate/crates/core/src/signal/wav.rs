//! Mono RIFF/WAVE persistence, PCM16 or IEEE float32.
//!
//! PCM16 decodes by division by 32768 and encodes with rounding and
//! saturation, so a write/read round trip errs by at most half a step.

use std::io::ErrorKind;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TimeSignal;
use crate::error::{Error, Result};

const PCM16_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BitDepth {
    #[default]
    Pcm16,
    Float32,
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        // hound reports short reads either as UnexpectedEof or as a custom
        // "Failed to read enough bytes." error.
        hound::Error::IoError(e) if e.kind() == ErrorKind::UnexpectedEof || e.to_string().contains("enough bytes") => {
            Error::Truncated(path.display().to_string())
        }
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::Unsupported => Error::UnsupportedEncoding("unsupported WAVE format".into()),
        hound::Error::FormatError(msg) => Error::Wav(format!("{}: {msg}", path.display())),
        other => Error::Wav(format!("{}: {other}", path.display())),
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<TimeSignal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedChannelCount(spec.channels));
    }
    let declared = reader.len() as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / PCM16_SCALE))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{bits}-bit {fmt:?} (expected 16-bit PCM or 32-bit float)"
            )))
        }
    };
    if samples.len() != declared {
        return Err(Error::Truncated(path.display().to_string()));
    }
    TimeSignal::new(samples, spec.sample_rate)
}

pub fn write_wav(path: impl AsRef<Path>, sig: &TimeSignal, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sig.sample_rate(),
        bits_per_sample: match depth {
            BitDepth::Pcm16 => 16,
            BitDepth::Float32 => 32,
        },
        sample_format: match depth {
            BitDepth::Pcm16 => hound::SampleFormat::Int,
            BitDepth::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in sig.samples() {
        let res = match depth {
            BitDepth::Pcm16 => writer.write_sample(encode_pcm16(s)),
            BitDepth::Float32 => writer.write_sample(s as f32),
        };
        res.map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

fn encode_pcm16(s: f64) -> i16 {
    (s * PCM16_SCALE)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}
