//! Models mapping `(x_t, y, t)` to an estimate of the clean spectrogram.
//!
//! A denoiser produces either a clean estimate directly (x0
//! parameterization) or a score. Whichever it produces, the other quantity
//! is recovered through the process kernel, so the sampler can ask any
//! denoiser for both.

mod checkpoint;
mod mlp;
mod model;
mod oracle;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use mlp::{Gradients, Mlp, Tape};
pub use model::{DenoiserConfig, MlpDenoiser, TimeEmbedding};
pub use oracle::{oracle_predict_x0, GaussianPrior, OracleDenoiser};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sde::Sde;
use crate::spectrogram::ComplexSpectrogram;

/// What the model's raw output means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    /// The output estimates the clean spectrogram.
    #[default]
    X0,
    /// The output estimates the score of the perturbation kernel.
    Score,
}

impl std::fmt::Display for Parameterization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parameterization::X0 => "x0",
            Parameterization::Score => "score",
        })
    }
}

impl std::str::FromStr for Parameterization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "x0" => Ok(Parameterization::X0),
            "score" => Ok(Parameterization::Score),
            other => Err(format!("unknown parameterization {other:?} (expected x0 or score)")),
        }
    }
}

pub trait Denoiser: Send + Sync {
    fn parameterization(&self) -> Parameterization;

    /// The model's own output for one spectrogram.
    fn output(
        &self,
        sde: &dyn Sde,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
    ) -> Result<ComplexSpectrogram>;

    /// Clean estimate `x̃(x_t, y, t)`.
    fn predict_x0(
        &self,
        sde: &dyn Sde,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
    ) -> Result<ComplexSpectrogram> {
        let out = self.output(sde, x_t, y, t)?;
        out.ensure_finite("denoiser output")?;
        match self.parameterization() {
            Parameterization::X0 => Ok(out),
            Parameterization::Score => sde.x0_from_score(x_t, y, t, &out),
        }
    }

    /// Score `s(x_t, y, t)`, converted from the clean estimate when needed.
    fn score(
        &self,
        sde: &dyn Sde,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
    ) -> Result<ComplexSpectrogram> {
        let out = self.output(sde, x_t, y, t)?;
        out.ensure_finite("denoiser output")?;
        match self.parameterization() {
            Parameterization::X0 => sde.score_from_x0(x_t, y, t, &out),
            Parameterization::Score => Ok(out),
        }
    }
}

impl<D: Denoiser + ?Sized> Denoiser for Box<D> {
    fn parameterization(&self) -> Parameterization {
        (**self).parameterization()
    }

    fn output(
        &self,
        sde: &dyn Sde,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
    ) -> Result<ComplexSpectrogram> {
        (**self).output(sde, x_t, y, t)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn parameterization(&self) -> Parameterization {
        (**self).parameterization()
    }

    fn output(
        &self,
        sde: &dyn Sde,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
    ) -> Result<ComplexSpectrogram> {
        (**self).output(sde, x_t, y, t)
    }
}
