//! Speech enhancement with a Brownian-bridge diffusion over complex
//! spectrograms, where one denoiser serves both as a single-pass regression
//! model and as the score for reverse-time sampling.
//!
//! The bridge runs from the clean spectrogram at `t = 0` to the noisy one at
//! `t = 1` with mean `x0(1 - t) + yt` and variance `t(1 - t)`. Because the
//! variance vanishes at both ends, a denoiser that predicts the clean
//! spectrogram is well defined at `t = 1` and can be run once as a regressor.
//! Its output converts exactly into a score for the sampler.
//!
//! Modules, from the bottom up:
//!
//! - [`signal`]: time signals, STFT/ISTFT, WAV I/O and SNR mixing
//! - [`sde`]: the bridge and the OUVE ablation process, kernels and conversions
//! - [`denoiser`]: the MLP denoiser, the exact Gaussian oracle and checkpoints
//! - [`trainer`]: clean-estimate and score-matching losses with Adam
//! - [`sampler`]: predictor-corrector sampling plus regression and mixture modes
//! - [`metrics`]: SI-SDR and SI-SAR
//! - [`corpus`]: synthetic corpora on disk and in-memory Gaussian toy tasks
//! - [`eval`], [`verify`], [`config`] and [`cli`]: sweeps, self-checks and the
//!   `thunder` command line
//!
//! ```
//! use thunder::corpus::ToyTask;
//! use thunder::denoiser::OracleDenoiser;
//! use thunder::sampler::{mixture_enhance, SamplerConfig};
//! use thunder::sde::BrownianBridgeSde;
//!
//! let task = ToyTask::speech_like(16, 8)?;
//! let item = task.item(7, 0);
//! let oracle = OracleDenoiser::new(task.prior.clone());
//! let cfg = SamplerConfig { n_steps: 5, ..Default::default() };
//! let est = mixture_enhance(&item.noisy, &oracle, &BrownianBridgeSde::default(), 0.8, &cfg)?;
//! assert_eq!(est.shape(), item.noisy.shape());
//! # Ok::<(), thunder::Error>(())
//! ```

pub mod cli;
pub mod config;
pub mod corpus;
pub mod denoiser;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod sampler;
pub mod sde;
pub mod signal;
pub mod spectrogram;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
pub use spectrogram::ComplexSpectrogram;
