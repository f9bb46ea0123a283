//! TOML run configuration shared by every command.
//!
//! Unknown keys are rejected. Missing keys take their defaults, and the
//! resolved configuration is written next to every command's outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSpec;
use crate::denoiser::DenoiserConfig;
use crate::error::{Error, Result};
use crate::sampler::{EnhanceRequest, Mode, SamplerConfig, DEFAULT_ALPHA};
use crate::sde::{build_sde, OuveParams, Sde, SdeKind, TimeGuard};
use crate::signal::StftConfig;
use crate::trainer::TrainConfig;

/// Environment variable naming the config file used when none is given.
pub const CONFIG_ENV: &str = "THUNDER_CONFIG";

/// File name of the resolved configuration in output directories.
pub const RESOLVED_FILE: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SdeSection {
    pub kind: SdeKind,
    pub ouve: OuveParams,
    pub guard: TimeGuard,
}

impl SdeSection {
    pub fn build(&self) -> Result<Box<dyn Sde>> {
        build_sde(self.kind, self.ouve, self.guard)
    }
}

/// Sampler settings plus the enhancement mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub mode: Mode,
    /// Mixture weight; ignored by the other modes.
    pub alpha: f64,
    pub n_steps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub corrector: bool,
    pub corrector_steps: usize,
    pub corrector_snr: f64,
    pub seed: u64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerConfig::default();
        Self {
            mode: Mode::Mixture,
            alpha: DEFAULT_ALPHA,
            n_steps: s.n_steps,
            t_start: s.t_start,
            t_end: s.t_end,
            corrector: s.corrector,
            corrector_steps: s.corrector_steps,
            corrector_snr: s.corrector_snr,
            seed: s.seed,
        }
    }
}

impl SamplerSection {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            n_steps: self.n_steps,
            t_start: self.t_start,
            t_end: self.t_end,
            corrector: self.corrector,
            corrector_steps: self.corrector_steps,
            corrector_snr: self.corrector_snr,
            seed: self.seed,
        }
    }

    pub fn to_request(&self) -> EnhanceRequest {
        let mut req = match self.mode {
            Mode::Regression => EnhanceRequest::regression(),
            Mode::Diffusion => EnhanceRequest::diffusion(self.sampler()),
            Mode::Mixture => EnhanceRequest::mixture(self.alpha, self.sampler()),
        };
        req.sampler = self.sampler();
        req
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Report SI-SAR next to SI-SDR.
    pub si_sar: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { si_sar: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub stft: StftConfig,
    pub sde: SdeSection,
    pub denoiser: DenoiserConfig,
    pub train: TrainConfig,
    pub sampler: SamplerSection,
    pub corpus: CorpusSpec,
    pub metrics: MetricsSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// The explicit path if given, else the path in `THUNDER_CONFIG`, else
    /// the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from))
        {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        self.sde.guard.validate()?;
        self.sde.build()?;
        self.denoiser.validate()?;
        self.train.validate()?;
        self.sampler.to_request().validate()?;
        self.corpus.validate()
    }

    /// Write the configuration into `dir` as [`RESOLVED_FILE`].
    pub fn write_resolved(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let path = dir.as_ref().join(RESOLVED_FILE);
        std::fs::write(&path, self.to_toml()?)?;
        Ok(path)
    }
}
