//! Scoring enhancement outputs and running step-count and α sweeps.
//!
//! Items carry their references either as spectrograms (toy tasks, scored on
//! the interleaved real and imaginary parts) or as time signals (audio
//! corpora, scored after inverse STFT).

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{derive_seed, Manifest, ToyItem};
use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricReport, MetricRow};
use crate::sampler::{enhance, EnhanceRequest, Mode, SamplerConfig};
use crate::sde::Sde;
use crate::signal::{istft, stft, StftConfig, TimeSignal};
use crate::spectrogram::ComplexSpectrogram;

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Spectrogram {
        clean: ComplexSpectrogram,
    },
    Time {
        stft: StftConfig,
        clean: TimeSignal,
        noise: TimeSignal,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub id: String,
    pub noisy: ComplexSpectrogram,
    pub reference: Reference,
    /// Audio duration used for real-time factors.
    pub duration_s: f64,
}

impl EvalItem {
    pub fn from_toy(item: &ToyItem, duration_s: f64) -> Self {
        Self {
            id: item.id.clone(),
            noisy: item.noisy.clone(),
            reference: Reference::Spectrogram {
                clean: item.clean.clone(),
            },
            duration_s,
        }
    }

    pub fn from_signals(
        id: impl Into<String>,
        clean: TimeSignal,
        noise: TimeSignal,
        noisy: &TimeSignal,
        cfg: &StftConfig,
    ) -> Result<Self> {
        if clean.len() != noisy.len() || noise.len() != noisy.len() {
            return Err(Error::shape(noisy.len(), format!("{}/{}", clean.len(), noise.len())));
        }
        Ok(Self {
            id: id.into(),
            noisy: stft(noisy, cfg)?,
            duration_s: noisy.duration_s(),
            reference: Reference::Time {
                stft: *cfg,
                clean,
                noise,
            },
        })
    }

    /// Every record of a manifest, read from disk.
    pub fn load_manifest(manifest: &Manifest, cfg: &StftConfig) -> Result<Vec<Self>> {
        manifest
            .records
            .iter()
            .map(|rec| {
                let (clean, noise, noisy) = manifest.read_item(rec)?;
                Self::from_signals(rec.id.clone(), clean, noise, &noisy, cfg)
            })
            .collect()
    }

    /// Time-domain rendering of an estimate, when the item has one.
    pub fn render(&self, est: &ComplexSpectrogram) -> Result<Option<TimeSignal>> {
        match &self.reference {
            Reference::Spectrogram { .. } => Ok(None),
            Reference::Time { stft, clean, .. } => Ok(Some(istft(est, stft, clean.len(), clean.sample_rate())?)),
        }
    }

    /// SI-SDR and, when the references span a plane, SI-SAR of an estimate.
    pub fn score(&self, est: &ComplexSpectrogram) -> Result<(f64, Option<f64>)> {
        est.ensure_same_shape(&self.noisy)?;
        match &self.reference {
            Reference::Spectrogram { clean } => {
                let (e, c) = (est.to_interleaved(), clean.to_interleaved());
                let n: Vec<f64> = self.noisy.to_interleaved().iter().zip(&c).map(|(y, x)| y - x).collect();
                Ok((metrics::si_sdr_slices(&e, &c)?, metrics::si_sar_slices(&e, &c, &n).ok()))
            }
            Reference::Time { clean, noise, .. } => {
                let sig = self.render(est)?.expect("time reference renders");
                Ok((metrics::si_sdr(&sig, clean)?, metrics::si_sar(&sig, clean, noise).ok()))
            }
        }
    }

    /// Score of the unprocessed input.
    pub fn score_noisy(&self) -> Result<(f64, Option<f64>)> {
        self.score(&self.noisy)
    }
}

/// Sampler seed for item `index` of a run seeded with `base`.
pub fn item_seed(base: u64, index: usize) -> u64 {
    derive_seed(base, index as u64)
}

fn request_for(req: &EnhanceRequest, index: usize) -> EnhanceRequest {
    let mut r = req.clone();
    r.sampler.seed = item_seed(req.sampler.seed, index);
    r
}

/// Enhance every item with its own sampler seed and score the outputs.
pub fn evaluate(
    items: &[EvalItem],
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    req: &EnhanceRequest,
) -> Result<MetricReport> {
    let mut report = MetricReport::default();
    for (i, item) in items.iter().enumerate() {
        let r = request_for(req, i);
        let est = enhance(&item.noisy, denoiser, sde, &r)?;
        let (si_sdr, si_sar) = item.score(&est)?;
        report.push(MetricRow {
            utterance_id: item.id.clone(),
            mode: r.mode.to_string(),
            n_steps: r.reported_steps(),
            alpha: r.alpha,
            si_sdr,
            si_sar,
            seed: r.sampler.seed,
        });
    }
    Ok(report)
}

/// Scores of the unprocessed inputs, reported with mode `noisy`.
pub fn evaluate_noisy(items: &[EvalItem]) -> Result<MetricReport> {
    let mut report = MetricReport::default();
    for item in items {
        let (si_sdr, si_sar) = item.score_noisy()?;
        report.push(MetricRow {
            utterance_id: item.id.clone(),
            mode: "noisy".into(),
            n_steps: None,
            alpha: None,
            si_sdr,
            si_sar,
            seed: 0,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub utterance_id: String,
    pub mode: String,
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub corrector: bool,
    pub alpha: Option<f64>,
    pub si_sdr: f64,
    pub si_sar: Option<f64>,
    pub wall_s: f64,
    pub rtf: f64,
    pub seed: u64,
}

/// Per-(N, corrector) aggregate of a step sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub corrector: bool,
    pub mean_si_sdr: f64,
    pub wall_s: f64,
    pub rtf: f64,
}

/// Enhance every item at every step count, with the corrector on and off as
/// listed, timing each trajectory. Runs sequentially so timings are not
/// disturbed by other work.
pub fn steps_sweep(
    items: &[EvalItem],
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    base: &EnhanceRequest,
    steps: &[usize],
    correctors: &[bool],
) -> Result<Vec<StepRow>> {
    if steps.is_empty() || correctors.is_empty() {
        return Err(Error::InvalidParams("sweep grid must not be empty".into()));
    }
    if base.mode == Mode::Regression {
        return Err(Error::InvalidParams(
            "a step sweep needs diffusion or mixture mode".into(),
        ));
    }
    let mut rows = Vec::with_capacity(items.len() * steps.len() * correctors.len());
    for &corrector in correctors {
        for &n in steps {
            for (i, item) in items.iter().enumerate() {
                let mut r = request_for(base, i);
                r.sampler = SamplerConfig {
                    n_steps: n,
                    corrector,
                    ..r.sampler
                };
                let start = Instant::now();
                let est = enhance(&item.noisy, denoiser, sde, &r)?;
                let wall_s = start.elapsed().as_secs_f64();
                let (si_sdr, si_sar) = item.score(&est)?;
                rows.push(StepRow {
                    utterance_id: item.id.clone(),
                    mode: r.mode.to_string(),
                    n_steps: n,
                    corrector,
                    alpha: r.alpha,
                    si_sdr,
                    si_sar,
                    wall_s,
                    rtf: if item.duration_s > 0.0 {
                        wall_s / item.duration_s
                    } else {
                        f64::NAN
                    },
                    seed: r.sampler.seed,
                });
            }
        }
    }
    Ok(rows)
}

/// Mean SI-SDR and total wall-clock per (N, corrector), in first-seen order.
pub fn summarize_steps(rows: &[StepRow]) -> Vec<StepSummary> {
    let mut out: Vec<(StepSummary, usize, f64)> = Vec::new();
    for r in rows {
        let pos = out
            .iter()
            .position(|(s, _, _)| s.n_steps == r.n_steps && s.corrector == r.corrector);
        let idx = pos.unwrap_or_else(|| {
            out.push((
                StepSummary {
                    n_steps: r.n_steps,
                    corrector: r.corrector,
                    mean_si_sdr: 0.0,
                    wall_s: 0.0,
                    rtf: 0.0,
                },
                0,
                0.0,
            ));
            out.len() - 1
        });
        let (s, count, audio) = &mut out[idx];
        s.mean_si_sdr += r.si_sdr;
        s.wall_s += r.wall_s;
        *count += 1;
        *audio += if r.rtf > 0.0 { r.wall_s / r.rtf } else { 0.0 };
    }
    out.into_iter()
        .map(|(mut s, count, audio)| {
            s.mean_si_sdr /= count as f64;
            s.rtf = if audio > 0.0 { s.wall_s / audio } else { f64::NAN };
            s
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub utterance_id: String,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub si_sdr: f64,
    pub si_sar: Option<f64>,
    pub seed: u64,
}

/// Mixture-mode scores for every item at every interpolation weight.
pub fn alpha_sweep(
    items: &[EvalItem],
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    sampler: &SamplerConfig,
    alphas: &[f64],
) -> Result<Vec<AlphaRow>> {
    if alphas.is_empty() {
        return Err(Error::InvalidParams("sweep grid must not be empty".into()));
    }
    let mut rows = Vec::with_capacity(items.len() * alphas.len());
    for &alpha in alphas {
        let base = EnhanceRequest::mixture(alpha, sampler.clone());
        let report = evaluate(items, denoiser, sde, &base)?;
        rows.extend(report.rows.into_iter().map(|r| AlphaRow {
            utterance_id: r.utterance_id,
            alpha,
            n_steps: sampler.n_steps,
            si_sdr: r.si_sdr,
            si_sar: r.si_sar,
            seed: r.seed,
        }));
    }
    Ok(rows)
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
