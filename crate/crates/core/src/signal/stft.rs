//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! The same window is used for analysis and synthesis, and synthesis divides
//! by the overlap-added squared window, so `istft(stft(x)) == x` whenever the
//! squared window never vanishes across a hop period.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::TimeSignal;
use crate::error::{Error, Result};
use crate::spectrogram::ComplexSpectrogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// Periodic Hann, `0.5 - 0.5 cos(2πn/N)`.
    #[default]
    Hann,
    /// Square root of the periodic Hann window.
    SqrtHann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let hann = 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos();
                match self {
                    Window::Hann => hann,
                    Window::SqrtHann => hann.sqrt(),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub window: Window,
    /// Zero-pad `window_len / 2` samples on both sides before framing.
    pub center: bool,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_len: 510,
            hop: 128,
            window: Window::Hann,
            center: true,
        }
    }
}

/// Relative floor below which the overlap-added squared window counts as zero.
const WOLA_FLOOR: f64 = 1e-8;

impl StftConfig {
    pub fn new(window_len: usize, hop: usize) -> Self {
        Self {
            window_len,
            hop,
            ..Self::default()
        }
    }

    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    fn pad(&self) -> usize {
        if self.center {
            self.window_len / 2
        } else {
            0
        }
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        let padded = len + 2 * self.pad();
        if padded <= self.window_len {
            1
        } else {
            1 + (padded - self.window_len).div_ceil(self.hop)
        }
    }

    /// Checks `0 < hop <= window_len` and that the squared window overlap-adds
    /// to a strictly positive sum over one hop period, which is what weighted
    /// overlap-add synthesis needs for perfect reconstruction.
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(Error::InvalidConfig("window_len must be at least 2".into()));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(Error::InvalidConfig(format!(
                "hop must satisfy 0 < hop <= window_len, got hop={} window_len={}",
                self.hop, self.window_len
            )));
        }
        // Written negated so that a NaN flatness is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.wola_flatness() > WOLA_FLOOR) {
            return Err(Error::InvalidConfig(format!(
                "{:?} window of length {} does not overlap-add at hop {}",
                self.window, self.window_len, self.hop
            )));
        }
        Ok(())
    }

    /// `min / max` of the overlap-added squared window over one hop period.
    pub fn wola_flatness(&self) -> f64 {
        let w = self.window.coefficients(self.window_len);
        let sums: Vec<f64> = (0..self.hop)
            .map(|j| w.iter().skip(j).step_by(self.hop).map(|c| c * c).sum())
            .collect();
        let max = sums.iter().cloned().fold(0.0, f64::max);
        sums.iter().cloned().fold(f64::INFINITY, f64::min) / max
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Plans {
    let mut planner = FftPlanner::new();
    Plans {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    }
}

/// Forward STFT of a mono signal. Output is `frames × (window_len/2 + 1)`.
pub fn stft(sig: &TimeSignal, cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    if sig.is_empty() {
        return Err(Error::EmptySignal);
    }
    cfg.validate()?;
    let n = cfg.window_len;
    let pad = cfg.pad();
    let frames = cfg.frames_for(sig.len());
    let total = (frames - 1) * cfg.hop + n;
    let mut padded = vec![0.0; total.max(sig.len() + 2 * pad)];
    padded[pad..pad + sig.len()].copy_from_slice(sig.samples());

    let window = cfg.window.coefficients(n);
    let fft = plans(n).forward;
    let bins = cfg.bins();
    let mut out = Array2::<Complex64>::zeros((frames, bins));
    let mut buf = vec![Complex64::default(); n];
    for f in 0..frames {
        let start = f * cfg.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(padded[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..bins {
            out[[f, k]] = buf[k];
        }
    }
    Ok(ComplexSpectrogram::new(out))
}

/// Inverse STFT by weighted overlap-add, truncated or zero-padded to `out_len`.
///
/// Imaginary parts of the DC and (for even lengths) Nyquist bins are ignored,
/// as no real signal can produce them.
pub fn istft(spec: &ComplexSpectrogram, cfg: &StftConfig, out_len: usize, sample_rate: u32) -> Result<TimeSignal> {
    cfg.validate()?;
    let n = cfg.window_len;
    if spec.bins() != cfg.bins() {
        return Err(Error::shape(
            format!("{} bins", cfg.bins()),
            format!("{} bins", spec.bins()),
        ));
    }
    if spec.frames() == 0 {
        return Err(Error::shape("at least one frame", "0 frames"));
    }
    let frames = spec.frames();
    let total = (frames - 1) * cfg.hop + n;
    let window = cfg.window.coefficients(n);
    let ifft = plans(n).inverse;

    let mut acc = vec![0.0; total];
    let mut wsum = vec![0.0; total];
    let mut buf = vec![Complex64::default(); n];
    let data = spec.data();
    let bins = cfg.bins();
    let scale = 1.0 / n as f64;
    for f in 0..frames {
        buf.iter_mut().for_each(|c| *c = Complex64::default());
        for k in 0..bins {
            let c = data[[f, k]];
            buf[k] = c;
            if k > 0 && n - k != k {
                buf[n - k] = c.conj();
            }
        }
        buf[0].im = 0.0;
        if n.is_multiple_of(2) {
            buf[n / 2].im = 0.0;
        }
        ifft.process(&mut buf);
        let start = f * cfg.hop;
        for i in 0..n {
            acc[start + i] += buf[i].re * scale * window[i];
            wsum[start + i] += window[i] * window[i];
        }
    }

    let max_w = wsum.iter().cloned().fold(0.0, f64::max);
    let floor = WOLA_FLOOR * max_w;
    let pad = cfg.pad();
    let samples: Vec<f64> = (0..out_len)
        .map(|i| {
            let j = i + pad;
            if j < total && wsum[j] > floor {
                acc[j] / wsum[j]
            } else {
                0.0
            }
        })
        .collect();
    TimeSignal::new(samples, sample_rate)
}
