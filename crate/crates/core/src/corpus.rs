//! Synthetic clean/noise corpora and their on-disk layout.
//!
//! A corpus directory holds `clean/`, `noise/` and `noisy/` subdirectories
//! of mono WAV files named `<id>.wav`, plus `manifest.tsv` with the columns
//! `id clean noise noisy snr_db seed`. Paths in the manifest are relative to
//! the corpus directory. Every item draws from its own random stream derived
//! from the corpus seed and the item index, so items can be generated in any
//! order and the corpus is a pure function of its spec.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoiser::GaussianPrior;
use crate::error::{Error, Result};
use crate::signal::{istft, mix_at_snr, read_wav, write_wav, BitDepth, StftConfig, TimeSignal};
use crate::spectrogram::ComplexSpectrogram;
use crate::trainer::TrainingPair;

/// Largest absolute sample value in any generated file.
pub const PEAK_LIMIT: f64 = 0.99;
const TARGET_PEAK: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CleanKind {
    #[default]
    Harmonic,
    FilteredNoise,
    GaussianPrior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    White,
    Pink,
    Babble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    pub n_utterances: usize,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub clean_kind: CleanKind,
    pub noise_kind: NoiseKind,
    pub snr_grid: Vec<f64>,
    pub seed: u64,
    pub bit_depth: BitDepth,
    /// Analysis settings used to synthesize gaussian-prior clean signals.
    pub stft: StftConfig,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_utterances: 10,
            duration_s: 1.0,
            sample_rate: 16_000,
            clean_kind: CleanKind::Harmonic,
            noise_kind: NoiseKind::White,
            snr_grid: vec![0.0, 5.0, 10.0, 15.0],
            seed: 0,
            bit_depth: BitDepth::Float32,
            stft: StftConfig::default(),
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_utterances == 0 {
            return bad("n_utterances must be positive");
        }
        if self.snr_grid.is_empty() {
            return bad("snr_grid must not be empty");
        }
        if self.snr_grid.iter().any(|s| !s.is_finite()) {
            return bad("snr_grid values must be finite");
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) || self.sample_rate == 0 {
            return bad("duration_s and sample_rate must be positive");
        }
        if self.is_empty() {
            return bad("duration is shorter than one sample");
        }
        self.stft.validate()
    }

    /// Samples per utterance.
    pub fn len(&self) -> usize {
        (self.duration_s * f64::from(self.sample_rate)).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Seed of the independent stream for item `index`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng.next_u64()
}

fn normalized(samples: Vec<f64>, sample_rate: u32) -> Result<TimeSignal> {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { TARGET_PEAK / peak } else { 1.0 };
    TimeSignal::new(samples.into_iter().map(|v| v * gain).collect(), sample_rate)
}

fn gaussian(rng: &mut dyn RngCore) -> f64 {
    rng.sample(StandardNormal)
}

fn harmonic_samples(len: usize, sr: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let f0 = rng.random_range(80.0..=300.0);
    let count = rng.random_range(3..=8usize);
    let partials: Vec<(f64, f64, f64)> = (1..=count)
        .map(|k| {
            (
                k as f64 * f0,
                rng.random_range(0.3..=1.0) / k as f64,
                rng.random_range(0.0..TAU),
            )
        })
        .filter(|(f, _, _)| *f < sr / 2.0)
        .collect();
    (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            partials.iter().map(|(f, a, phi)| a * (TAU * f * t + phi).sin()).sum()
        })
        .collect()
}

/// One clean utterance of the spec's kind, peak-normalized to 0.9.
pub fn gen_clean(spec: &CorpusSpec, rng: &mut dyn RngCore) -> Result<TimeSignal> {
    let len = spec.len();
    let sr = f64::from(spec.sample_rate);
    let samples = match spec.clean_kind {
        CleanKind::Harmonic => harmonic_samples(len, sr, rng),
        CleanKind::FilteredNoise => {
            // One-pole low-pass at 1 kHz.
            let a = (-TAU * 1000.0 / sr).exp();
            let mut state = 0.0;
            (0..len)
                .map(|_| {
                    state = a * state + (1.0 - a) * gaussian(rng);
                    state
                })
                .collect()
        }
        CleanKind::GaussianPrior => {
            let prior = GaussianPrior::speech_like(spec.stft.bins())?;
            let x0 = prior.sample_clean(spec.stft.frames_for(len), rng);
            istft(&x0, &spec.stft, len, spec.sample_rate)?.into_samples()
        }
    };
    normalized(samples, spec.sample_rate)
}

/// One noise recording of the spec's kind, peak-normalized to 0.9.
pub fn gen_noise(spec: &CorpusSpec, rng: &mut dyn RngCore) -> Result<TimeSignal> {
    let len = spec.len();
    let sr = f64::from(spec.sample_rate);
    let samples = match spec.noise_kind {
        NoiseKind::White => (0..len).map(|_| gaussian(rng)).collect(),
        NoiseKind::Pink => {
            // Paul Kellet's refined 1/f filter.
            let mut b = [0.0f64; 7];
            (0..len)
                .map(|_| {
                    let w = gaussian(rng);
                    b[0] = 0.99886 * b[0] + w * 0.0555179;
                    b[1] = 0.99332 * b[1] + w * 0.0750759;
                    b[2] = 0.96900 * b[2] + w * 0.1538520;
                    b[3] = 0.86650 * b[3] + w * 0.3104856;
                    b[4] = 0.55000 * b[4] + w * 0.5329522;
                    b[5] = -0.7616 * b[5] - w * 0.0168980;
                    let out = b.iter().sum::<f64>() + w * 0.5362;
                    b[6] = w * 0.115926;
                    out
                })
                .collect()
        }
        NoiseKind::Babble => {
            // Several harmonic talkers with syllable-rate amplitude envelopes.
            let mut acc = vec![0.0; len];
            for _ in 0..6 {
                let voice = harmonic_samples(len, sr, rng);
                let rate = rng.random_range(2.0..=6.0);
                let phase = rng.random_range(0.0..TAU);
                for (n, (a, v)) in acc.iter_mut().zip(voice).enumerate() {
                    let env = 0.5 * (1.0 + (TAU * rate * n as f64 / sr + phase).sin());
                    *a += env * v;
                }
            }
            acc
        }
    };
    normalized(samples, spec.sample_rate)
}

/// Clean, scaled noise and mixture for one item, jointly rescaled if the
/// mixture would exceed [`PEAK_LIMIT`].
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub clean: TimeSignal,
    pub noise: TimeSignal,
    pub noisy: TimeSignal,
    pub snr_db: f64,
    pub seed: u64,
}

pub fn gen_utterance(spec: &CorpusSpec, index: usize) -> Result<Utterance> {
    let seed = derive_seed(spec.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clean = gen_clean(spec, &mut rng)?;
    let noise = gen_noise(spec, &mut rng)?;
    let snr_db = spec.snr_grid[rng.random_range(0..spec.snr_grid.len())];
    let (mut noisy, mut noise) = mix_at_snr(&clean, &noise, snr_db)?;
    let mut clean = clean;
    let peak = noisy.peak().max(clean.peak()).max(noise.peak());
    if peak > PEAK_LIMIT {
        // Headroom so that rounding here and in float32 storage stays under.
        let g = PEAK_LIMIT * (1.0 - 1e-6) / peak;
        clean = clean.scaled(g);
        noise = noise.scaled(g);
        noisy = noisy.scaled(g);
    }
    Ok(Utterance {
        id: format!("utt{index:04}"),
        clean,
        noise,
        noisy,
        snr_db,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub clean: PathBuf,
    pub noise: PathBuf,
    pub noisy: PathBuf,
    pub snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    /// Directory that record paths are relative to.
    pub root: PathBuf,
    pub records: Vec<ManifestRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";

fn manifest_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Manifest(format!("{}: {e}", path.display()))
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::WriterBuilder::new()
            .delimiter(b'\t')
            .from_path(path)
            .map_err(|e| manifest_err(path, e))?;
        for r in &self.records {
            w.serialize(r).map_err(|e| manifest_err(path, e))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a manifest; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .from_path(path)
            .map_err(|e| manifest_err(path, e))?;
        let records: Vec<ManifestRecord> = r
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| manifest_err(path, e))?;
        let mut seen = std::collections::HashSet::new();
        for rec in &records {
            if !seen.insert(rec.id.as_str()) {
                return Err(manifest_err(path, format!("duplicate id {}", rec.id)));
            }
        }
        Ok(Self {
            root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            records,
        })
    }

    /// Read the clean, noise and noisy signals of one record.
    pub fn read_item(&self, rec: &ManifestRecord) -> Result<(TimeSignal, TimeSignal, TimeSignal)> {
        Ok((
            read_wav(self.resolve(&rec.clean))?,
            read_wav(self.resolve(&rec.noise))?,
            read_wav(self.resolve(&rec.noisy))?,
        ))
    }
}

/// Generate every utterance of `spec` and write the corpus to `out_dir`.
/// An existing manifest is only replaced when `force` is set.
pub fn build_corpus(spec: &CorpusSpec, out_dir: impl AsRef<Path>, force: bool) -> Result<Manifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if manifest_path.exists() && !force {
        return Err(Error::ManifestExists(manifest_path));
    }
    for sub in ["clean", "noise", "noisy"] {
        std::fs::create_dir_all(out_dir.join(sub))?;
    }
    let records = (0..spec.n_utterances)
        .into_par_iter()
        .map(|i| {
            let u = gen_utterance(spec, i)?;
            let file = format!("{}.wav", u.id);
            let rel = |sub: &str| Path::new(sub).join(&file);
            write_wav(out_dir.join(rel("clean")), &u.clean, spec.bit_depth)?;
            write_wav(out_dir.join(rel("noise")), &u.noise, spec.bit_depth)?;
            write_wav(out_dir.join(rel("noisy")), &u.noisy, spec.bit_depth)?;
            Ok(ManifestRecord {
                id: u.id,
                clean: rel("clean"),
                noise: rel("noise"),
                noisy: rel("noisy"),
                snr_db: u.snr_db,
                seed: u.seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        records,
    };
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

/// In-memory spectrogram-domain task drawn from a Gaussian prior. The
/// exact posterior-mean denoiser is optimal for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyTask {
    pub prior: GaussianPrior,
    pub frames: usize,
}

/// A clean/noisy spectrogram pair with its identifier and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyItem {
    pub id: String,
    pub clean: ComplexSpectrogram,
    pub noisy: ComplexSpectrogram,
    pub seed: u64,
}

impl ToyTask {
    /// The speech-like prior on `bins` bins with `frames` frames per item.
    pub fn speech_like(bins: usize, frames: usize) -> Result<Self> {
        Ok(Self {
            prior: GaussianPrior::speech_like(bins)?,
            frames,
        })
    }

    pub fn item(&self, seed: u64, index: usize) -> ToyItem {
        let item_seed = derive_seed(seed, index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(item_seed);
        let (x0, n) = self.prior.sample_pair(self.frames, &mut rng);
        let y = &x0 + &n;
        ToyItem {
            id: format!("toy{index:04}"),
            clean: x0,
            noisy: y,
            seed: item_seed,
        }
    }

    pub fn items(&self, count: usize, seed: u64) -> Vec<ToyItem> {
        (0..count).map(|i| self.item(seed, i)).collect()
    }

    pub fn training_pairs(&self, count: usize, seed: u64) -> Vec<TrainingPair> {
        self.items(count, seed)
            .into_iter()
            .map(|it| TrainingPair {
                clean: it.clean,
                noisy: it.noisy,
            })
            .collect()
    }
}
