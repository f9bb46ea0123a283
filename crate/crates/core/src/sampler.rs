//! Reverse-time inference: predictor-corrector sampling, regression mode
//! and the regression/diffusion mixture.
//!
//! At each grid time the sampler first applies the Langevin corrector (if
//! enabled) and then an Euler-Maruyama predictor step towards the next grid
//! time. The last predictor step returns its mean without injecting noise,
//! and the result is projected once more through the denoiser at `t_end`.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::sde::{DiffusionState, Sde};
use crate::spectrogram::ComplexSpectrogram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub n_steps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub corrector: bool,
    pub corrector_steps: usize,
    pub corrector_snr: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_steps: 30,
            t_start: 0.999,
            t_end: 0.03,
            corrector: true,
            corrector_steps: 1,
            corrector_snr: 0.5,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1".into());
        }
        if !(self.t_end > 0.0 && self.t_end < self.t_start && self.t_start < 1.0) {
            return bad(format!(
                "need 0 < t_end < t_start < 1, got t_end={} t_start={}",
                self.t_end, self.t_start
            ));
        }
        if !(self.corrector_snr > 0.0 && self.corrector_snr.is_finite()) {
            return bad(format!("corrector_snr must be positive, got {}", self.corrector_snr));
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        (self.t_start - self.t_end) / self.n_steps as f64
    }

    /// The `n_steps + 1` grid times from `t_start` down to exactly `t_end`.
    pub fn time_grid(&self) -> Vec<f64> {
        let dt = self.step_size();
        let mut grid: Vec<f64> = (0..self.n_steps).map(|i| self.t_start - i as f64 * dt).collect();
        grid.push(self.t_end);
        grid
    }

    /// Denoiser evaluations per trajectory, including the final projection.
    pub fn evaluations(&self) -> usize {
        let corrector = if self.corrector { self.corrector_steps } else { 0 };
        self.n_steps + (self.n_steps - 1) * corrector + 1
    }
}

/// Source of the standard complex normal draws used by the sampler.
pub trait NoiseSource {
    fn draw(&mut self, frames: usize, bins: usize) -> ComplexSpectrogram;
}

/// Seeded Gaussian noise.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: ChaCha8Rng,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl NoiseSource for GaussianNoise {
    fn draw(&mut self, frames: usize, bins: usize) -> ComplexSpectrogram {
        ComplexSpectrogram::standard_normal(frames, bins, &mut self.rng)
    }
}

/// Always zero; turns the sampler into a deterministic flow.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn draw(&mut self, frames: usize, bins: usize) -> ComplexSpectrogram {
        ComplexSpectrogram::zeros(frames, bins)
    }
}

/// `x_t - dt·[f - g²·s]`, the noise-free part of a predictor step.
pub fn predictor_mean(
    state: &DiffusionState<'_>,
    dt: f64,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
) -> Result<ComplexSpectrogram> {
    if !(dt > 0.0 && dt <= state.t) {
        return Err(Error::InvalidConfig(format!(
            "predictor step dt={dt} must lie in (0, t={}]",
            state.t
        )));
    }
    let score = denoiser.score(sde, &state.x_t, state.y, state.t)?;
    let drift = sde.reverse_drift(&state.x_t, state.y, state.t, &score)?;
    Ok(state.x_t.lin_comb(1.0, &drift, -dt))
}

/// One Euler-Maruyama step of the reverse SDE from `t` to `t - dt`.
pub fn predictor_step<'a>(
    state: DiffusionState<'a>,
    dt: f64,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    noise: &mut dyn NoiseSource,
) -> Result<DiffusionState<'a>> {
    let mut x = predictor_mean(&state, dt, denoiser, sde)?;
    let z = noise.draw(x.frames(), x.bins());
    x.axpy(sde.diffusion(state.t) * dt.sqrt(), &z);
    Ok(DiffusionState {
        x_t: x,
        t: state.t - dt,
        y: state.y,
    })
}

/// Langevin step size `2 (r ‖z‖ / ‖s‖)²`.
pub fn langevin_step_size(snr: f64, z_norm: f64, score_norm: f64) -> f64 {
    2.0 * (snr * z_norm / score_norm).powi(2)
}

/// One annealed Langevin step at fixed `t`. A zero score leaves the state
/// untouched and consumes no noise.
pub fn corrector_step<'a>(
    state: DiffusionState<'a>,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    snr: f64,
    noise: &mut dyn NoiseSource,
) -> Result<DiffusionState<'a>> {
    let score = denoiser.score(sde, &state.x_t, state.y, state.t)?;
    let s_norm = score.norm();
    if s_norm == 0.0 {
        log::debug!("corrector skipped at t={}: zero score", state.t);
        return Ok(state);
    }
    let z = noise.draw(state.x_t.frames(), state.x_t.bins());
    let eps = langevin_step_size(snr, z.norm(), s_norm);
    let mut x = state.x_t;
    x.axpy(eps, &score);
    x.axpy((2.0 * eps).sqrt(), &z);
    Ok(DiffusionState { x_t: x, ..state })
}

/// Integrate the reverse process from `x_init` at `t_start` to `t_end` and
/// return the denoiser's clean estimate there.
pub fn run_reverse(
    x_init: &ComplexSpectrogram,
    y: &ComplexSpectrogram,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    cfg: &SamplerConfig,
    noise: &mut dyn NoiseSource,
) -> Result<ComplexSpectrogram> {
    cfg.validate()?;
    let grid = cfg.time_grid();
    let mut state = DiffusionState::new(x_init.clone(), cfg.t_start, y)?;
    for i in 0..cfg.n_steps {
        let (t, t_next) = (grid[i], grid[i + 1]);
        state.t = t;
        let dt = t - t_next;
        let last = i + 1 == cfg.n_steps;
        state = if last {
            let x = predictor_mean(&state, dt, denoiser, sde)?;
            DiffusionState { x_t: x, t: t_next, y }
        } else {
            predictor_step(state, dt, denoiser, sde, noise)?
        };
        state.t = t_next;
        // The state after the noise-free final step is not a draw from the
        // marginal, so the SNR-scaled Langevin step would be ill-posed there.
        if cfg.corrector && !last {
            for _ in 0..cfg.corrector_steps {
                state = corrector_step(state, denoiser, sde, cfg.corrector_snr, noise)?;
            }
        }
        state.x_t.ensure_finite("reverse trajectory")?;
    }
    denoiser.predict_x0(sde, &state.x_t, y, cfg.t_end)
}

/// Diffusion mode: start at `x_1 = y` with Gaussian noise seeded from the
/// config.
pub fn diffusion_enhance(
    y: &ComplexSpectrogram,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    cfg: &SamplerConfig,
) -> Result<ComplexSpectrogram> {
    run_reverse(y, y, denoiser, sde, cfg, &mut GaussianNoise::new(cfg.seed))
}

/// Regression mode: one forward pass `x̃(y, y, 1)`. Uses no randomness.
pub fn regression_enhance(
    y: &ComplexSpectrogram,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
) -> Result<ComplexSpectrogram> {
    denoiser.predict_x0(sde, y, y, 1.0)
}

/// Mixture mode: diffuse from `α·x̂_reg + (1 - α)·y`.
pub fn mixture_enhance(
    y: &ComplexSpectrogram,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    alpha: f64,
    cfg: &SamplerConfig,
) -> Result<ComplexSpectrogram> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let x_init = if alpha == 0.0 {
        y.clone()
    } else {
        let reg = regression_enhance(y, denoiser, sde)?;
        reg.lin_comb(alpha, y, 1.0 - alpha)
    };
    run_reverse(&x_init, y, denoiser, sde, cfg, &mut GaussianNoise::new(cfg.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Regression,
    Diffusion,
    Mixture,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Regression => "regression",
            Mode::Diffusion => "diffusion",
            Mode::Mixture => "mixture",
        })
    }
}

/// Default interpolation weight of mixture mode.
pub const DEFAULT_ALPHA: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceRequest {
    pub mode: Mode,
    /// Regression weight; present exactly when `mode` is mixture.
    pub alpha: Option<f64>,
    pub sampler: SamplerConfig,
}

impl EnhanceRequest {
    pub fn regression() -> Self {
        Self {
            mode: Mode::Regression,
            alpha: None,
            sampler: SamplerConfig::default(),
        }
    }

    pub fn diffusion(sampler: SamplerConfig) -> Self {
        Self {
            mode: Mode::Diffusion,
            alpha: None,
            sampler,
        }
    }

    pub fn mixture(alpha: f64, sampler: SamplerConfig) -> Self {
        Self {
            mode: Mode::Mixture,
            alpha: Some(alpha),
            sampler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.alpha) {
            (Mode::Mixture, Some(a)) if (0.0..=1.0).contains(&a) => {}
            (Mode::Mixture, Some(a)) => return Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {a}"))),
            (Mode::Mixture, None) => return Err(Error::InvalidParams("mixture mode needs alpha".into())),
            (_, Some(_)) => {
                return Err(Error::InvalidParams(format!(
                    "alpha only applies to mixture mode, not {}",
                    self.mode
                )))
            }
            (_, None) => {}
        }
        if self.mode != Mode::Regression {
            self.sampler.validate()?;
        }
        Ok(())
    }

    /// Steps reported alongside results; regression mode has none.
    pub fn reported_steps(&self) -> Option<usize> {
        (self.mode != Mode::Regression).then_some(self.sampler.n_steps)
    }
}

pub fn enhance(
    y: &ComplexSpectrogram,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    req: &EnhanceRequest,
) -> Result<ComplexSpectrogram> {
    req.validate()?;
    match req.mode {
        Mode::Regression => regression_enhance(y, denoiser, sde),
        Mode::Diffusion => diffusion_enhance(y, denoiser, sde, &req.sampler),
        Mode::Mixture => mixture_enhance(y, denoiser, sde, req.alpha.unwrap_or(DEFAULT_ALPHA), &req.sampler),
    }
}

/// [`enhance`] together with its wall-clock duration.
pub fn enhance_timed(
    y: &ComplexSpectrogram,
    denoiser: &dyn Denoiser,
    sde: &dyn Sde,
    req: &EnhanceRequest,
) -> Result<(ComplexSpectrogram, Duration)> {
    let start = Instant::now();
    let out = enhance(y, denoiser, sde, req)?;
    Ok((out, start.elapsed()))
}
