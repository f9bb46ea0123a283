//! Time-domain audio, spectrogram analysis/synthesis, WAV persistence and
//! SNR mixing.

mod stft;
mod wav;

pub use stft::{istft, stft, StftConfig, Window};
pub use wav::{read_wav, write_wav, BitDepth};

use crate::error::{Error, Result};

/// Mono audio with a sample rate. Samples are finite and nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("time signal"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

pub(crate) fn energy(samples: &[f64]) -> f64 {
    samples.iter().map(|s| s * s).sum()
}

/// Scale `noise` so that `10·log10(E_clean / E_noise) = snr_db` and add it to
/// `clean`. Returns `(noisy, scaled_noise)`.
pub fn mix_at_snr(clean: &TimeSignal, noise: &TimeSignal, snr_db: f64) -> Result<(TimeSignal, TimeSignal)> {
    if clean.len() != noise.len() {
        return Err(Error::shape(clean.len(), noise.len()));
    }
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::InvalidConfig(format!(
            "sample rate mismatch: {} vs {}",
            clean.sample_rate, noise.sample_rate
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig("snr_db must be finite".into()));
    }
    let e_clean = clean.energy();
    let e_noise = noise.energy();
    if e_clean <= 0.0 {
        return Err(Error::ZeroEnergy("clean signal"));
    }
    if e_noise <= 0.0 {
        return Err(Error::ZeroEnergy("noise signal"));
    }
    let gain = (e_clean / (e_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled = noise.scaled(gain);
    let noisy: Vec<f64> = clean.samples.iter().zip(&scaled.samples).map(|(c, n)| c + n).collect();
    Ok((TimeSignal::new(noisy, clean.sample_rate)?, scaled))
}

/// Signal-to-noise ratio in dB between two energies.
pub fn snr_db(clean: &TimeSignal, noise: &TimeSignal) -> f64 {
    10.0 * (clean.energy() / noise.energy()).log10()
}
