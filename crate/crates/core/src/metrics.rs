//! Scale-invariant SDR and SAR, capped to ±100 dB.
//!
//! SI-SDR projects the estimate onto the reference. SI-SAR projects it onto
//! the span of the clean and noise references and treats the remainder as
//! artifact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::TimeSignal;

/// Bound applied to every reported ratio.
pub const DB_CAP: f64 = 100.0;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        return -DB_CAP;
    }
    if den == 0.0 {
        return DB_CAP;
    }
    (10.0 * (num / den).log10()).clamp(-DB_CAP, DB_CAP)
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("{} samples", b.len()), a.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(())
}

/// SI-SDR of `est` against `reference`, on raw sample slices.
///
/// An all-zero estimate scores the floor, `-100` dB.
pub fn si_sdr_slices(est: &[f64], reference: &[f64]) -> Result<f64> {
    check_len(est, reference)?;
    let rr = dot(reference, reference);
    if rr == 0.0 {
        return Err(Error::ZeroEnergy("reference"));
    }
    let alpha = dot(est, reference) / rr;
    let target = alpha * alpha * rr;
    let err: f64 = est.iter().zip(reference).map(|(e, r)| (alpha * r - e).powi(2)).sum();
    Ok(ratio_db(target, err))
}

/// SI-SAR of `est` given the clean and noise references, on raw slices.
pub fn si_sar_slices(est: &[f64], clean: &[f64], noise: &[f64]) -> Result<f64> {
    check_len(est, clean)?;
    check_len(noise, clean)?;
    let (cc, nn, cn) = (dot(clean, clean), dot(noise, noise), dot(clean, noise));
    let det = cc * nn - cn * cn;
    if !(cc > 0.0 && nn > 0.0) || det <= 1e-12 * cc * nn {
        return Err(Error::DegenerateSpan);
    }
    let (ec, en) = (dot(est, clean), dot(est, noise));
    let a = (ec * nn - en * cn) / det;
    let b = (en * cc - ec * cn) / det;
    let mut proj_energy = 0.0;
    let mut art_energy = 0.0;
    for ((e, c), n) in est.iter().zip(clean).zip(noise) {
        let p = a * c + b * n;
        proj_energy += p * p;
        art_energy += (e - p).powi(2);
    }
    Ok(ratio_db(proj_energy, art_energy))
}

pub fn si_sdr(est: &TimeSignal, reference: &TimeSignal) -> Result<f64> {
    si_sdr_slices(est.samples(), reference.samples())
}

pub fn si_sar(est: &TimeSignal, clean: &TimeSignal, noise: &TimeSignal) -> Result<f64> {
    si_sar_slices(est.samples(), clean.samples(), noise.samples())
}

/// One CSV row of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub utterance_id: String,
    pub mode: String,
    #[serde(rename = "N")]
    pub n_steps: Option<usize>,
    pub alpha: Option<f64>,
    pub si_sdr: f64,
    pub si_sar: Option<f64>,
    pub seed: u64,
}

/// Per-utterance rows plus corpus means.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn mean_si_sdr(&self) -> Option<f64> {
        mean(self.rows.iter().map(|r| r.si_sdr))
    }

    /// Mean over rows that carry an SI-SAR value.
    pub fn mean_si_sar(&self) -> Option<f64> {
        mean(self.rows.iter().filter_map(|r| r.si_sar))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
