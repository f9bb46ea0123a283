//! Forward diffusion processes over complex spectrograms.
//!
//! Both processes have a Gaussian perturbation kernel of the form
//!
//! ```text
//! x_t = a(t)·x0 + b(t)·y + σ(t)·z,   z ~ N_C(0, I)
//! ```
//!
//! so the score of the kernel and the clean estimate are related by an
//! affine map. [`Sde::score_from_x0`] and [`Sde::x0_from_score`] implement
//! that map for any process; for the Brownian bridge (`a = 1 - t`, `b = t`,
//! `σ² = t(1 - t)`) it becomes
//!
//! ```text
//! s = -(x_t - (x̂0 (1 - t) + y t)) / (t (1 - t))
//! ```
//!
//! Noise is circularly symmetric with unit total variance per entry, and a
//! "score" is the complex quantity `-(x - μ) / σ²`, which is half the
//! gradient of the log density taken over the real and imaginary parts.
//! With that convention the reverse drift is `f - g²·s`.

use std::fmt::Debug;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrogram::ComplexSpectrogram;

/// Time bounds away from the degenerate endpoints of a process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGuard {
    /// Smallest time at which a score may be formed (σ(t) > 0).
    pub t_min: f64,
    /// Distance kept from `t = 1`, where the bridge drift and the
    /// score-to-clean inversion blow up.
    pub t_guard: f64,
}

impl Default for TimeGuard {
    fn default() -> Self {
        Self {
            t_min: 0.03,
            t_guard: 1e-6,
        }
    }
}

impl TimeGuard {
    pub fn t_max(&self) -> f64 {
        1.0 - self.t_guard
    }

    fn check(&self, t: f64, lo: f64, hi: f64) -> Result<()> {
        if t.is_finite() && t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::TimeGuard { t, lo, hi })
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_guard > 0.0 && self.t_min < 1.0 - self.t_guard) {
            return Err(Error::InvalidConfig(format!(
                "time guard needs 0 < t_min < 1 - t_guard, got t_min={} t_guard={}",
                self.t_min, self.t_guard
            )));
        }
        Ok(())
    }
}

/// Coefficients of the perturbation kernel at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    /// Weight of the clean signal in the mean.
    pub x0_coeff: f64,
    /// Weight of the noisy observation in the mean.
    pub y_coeff: f64,
    /// Total (complex) variance, `σ(t)²`.
    pub var: f64,
}

impl Kernel {
    pub fn std(&self) -> f64 {
        self.var.sqrt()
    }

    pub fn mean(&self, x0: &ComplexSpectrogram, y: &ComplexSpectrogram) -> ComplexSpectrogram {
        x0.lin_comb(self.x0_coeff, y, self.y_coeff)
    }
}

/// Mean and standard deviation of `p_t(x_t | x0, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalParams {
    pub mean: ComplexSpectrogram,
    pub std: f64,
}

/// One point on a reverse trajectory. `y` is fixed for the whole trajectory.
#[derive(Debug, Clone)]
pub struct DiffusionState<'a> {
    pub x_t: ComplexSpectrogram,
    pub t: f64,
    pub y: &'a ComplexSpectrogram,
}

impl<'a> DiffusionState<'a> {
    pub fn new(x_t: ComplexSpectrogram, t: f64, y: &'a ComplexSpectrogram) -> Result<Self> {
        x_t.ensure_same_shape(y)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::TimeGuard { t, lo: 0.0, hi: 1.0 });
        }
        Ok(Self { x_t, t, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SdeKind {
    #[default]
    BrownianBridge,
    Ouve,
}

pub trait Sde: Debug + Send + Sync {
    fn kind(&self) -> SdeKind;

    /// Forward drift `f(x_t, y, t)`.
    fn drift(&self, x_t: &ComplexSpectrogram, y: &ComplexSpectrogram, t: f64) -> Result<ComplexSpectrogram>;

    /// Diffusion coefficient `g(t)`.
    fn diffusion(&self, t: f64) -> f64;

    fn kernel(&self, t: f64) -> Result<Kernel>;

    fn guard(&self) -> TimeGuard;

    fn marginal(&self, x0: &ComplexSpectrogram, y: &ComplexSpectrogram, t: f64) -> Result<MarginalParams> {
        x0.ensure_same_shape(y)?;
        let k = self.kernel(t)?;
        Ok(MarginalParams {
            mean: k.mean(x0, y),
            std: k.std(),
        })
    }

    /// Draw `x_t ~ p_t(x_t | x0, y)` by reparameterization. Returns the
    /// state together with the standard complex normal `z` used.
    fn sample_xt(
        &self,
        x0: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
        rng: &mut dyn RngCore,
    ) -> Result<(ComplexSpectrogram, ComplexSpectrogram)> {
        x0.ensure_same_shape(y)?;
        let k = self.kernel(t)?;
        let z = ComplexSpectrogram::standard_normal(x0.frames(), x0.bins(), rng);
        let mut x_t = k.mean(x0, y);
        x_t.axpy(k.std(), &z);
        Ok((x_t, z))
    }

    /// Kernel score implied by a clean estimate:
    /// `-(x_t - (a·x̂0 + b·y)) / σ²`.
    fn score_from_x0(
        &self,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
        x0_hat: &ComplexSpectrogram,
    ) -> Result<ComplexSpectrogram> {
        let g = self.guard();
        g.check(t, g.t_min, g.t_max())?;
        x_t.ensure_same_shape(y)?;
        x_t.ensure_same_shape(x0_hat)?;
        let k = self.kernel(t)?;
        let inv_var = 1.0 / k.var;
        let (a, b) = (k.x0_coeff, k.y_coeff);
        let data = ndarray::Zip::from(x_t.data())
            .and(y.data())
            .and(x0_hat.data())
            .map_collect(|&x, &yy, &x0| -(x - (x0 * a + yy * b)) * inv_var);
        Ok(data.into())
    }

    /// Clean estimate implied by a score; the exact inverse of
    /// [`Sde::score_from_x0`]: `(x_t - b·y + σ²·s) / a`.
    fn x0_from_score(
        &self,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
        score: &ComplexSpectrogram,
    ) -> Result<ComplexSpectrogram> {
        let g = self.guard();
        g.check(t, 0.0, g.t_max())?;
        x_t.ensure_same_shape(y)?;
        x_t.ensure_same_shape(score)?;
        let k = self.kernel(t)?;
        let inv_a = 1.0 / k.x0_coeff;
        let (b, var) = (k.y_coeff, k.var);
        let data = ndarray::Zip::from(x_t.data())
            .and(y.data())
            .and(score.data())
            .map_collect(|&x, &yy, &s| (x - yy * b + s * var) * inv_a);
        Ok(data.into())
    }

    /// Drift of the reverse-time SDE, `f(x_t, y, t) - g(t)²·score`.
    fn reverse_drift(
        &self,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
        score: &ComplexSpectrogram,
    ) -> Result<ComplexSpectrogram> {
        score.ensure_finite("score")?;
        x_t.ensure_same_shape(score)?;
        let f = self.drift(x_t, y, t)?;
        let g = self.diffusion(t);
        Ok(f.lin_comb(1.0, score, -g * g))
    }
}

/// The Brownian bridge from `x0` at `t = 0` to `y` at `t = 1`:
/// `f = (y - x_t) / (1 - t)`, `g = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BrownianBridgeSde {
    pub guard: TimeGuard,
}

impl BrownianBridgeSde {
    pub fn new(guard: TimeGuard) -> Result<Self> {
        guard.validate()?;
        Ok(Self { guard })
    }
}

impl Sde for BrownianBridgeSde {
    fn kind(&self) -> SdeKind {
        SdeKind::BrownianBridge
    }

    fn drift(&self, x_t: &ComplexSpectrogram, y: &ComplexSpectrogram, t: f64) -> Result<ComplexSpectrogram> {
        self.guard.check(t, 0.0, self.guard.t_max())?;
        x_t.ensure_same_shape(y)?;
        let inv = 1.0 / (1.0 - t);
        Ok(y.lin_comb(inv, x_t, -inv))
    }

    fn diffusion(&self, _t: f64) -> f64 {
        1.0
    }

    fn kernel(&self, t: f64) -> Result<Kernel> {
        self.guard.check(t, 0.0, 1.0)?;
        Ok(Kernel {
            x0_coeff: 1.0 - t,
            y_coeff: t,
            var: t * (1.0 - t),
        })
    }

    fn guard(&self) -> TimeGuard {
        self.guard
    }
}

/// Ornstein-Uhlenbeck process with exploding variance:
/// `f = γ(y - x_t)`, `g(t) = σ_min (σ_max/σ_min)^t sqrt(2 ln(σ_max/σ_min))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OuveParams {
    pub gamma: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for OuveParams {
    fn default() -> Self {
        Self {
            gamma: 1.5,
            sigma_min: 0.05,
            sigma_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuveSde {
    params: OuveParams,
    guard: TimeGuard,
}

impl OuveSde {
    pub fn new(params: OuveParams, guard: TimeGuard) -> Result<Self> {
        let OuveParams {
            gamma,
            sigma_min,
            sigma_max,
        } = params;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {gamma}")));
        }
        if !(sigma_min > 0.0 && sigma_min < sigma_max && sigma_max.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}"
            )));
        }
        guard.validate()?;
        Ok(Self { params, guard })
    }

    pub fn params(&self) -> OuveParams {
        self.params
    }

    fn log_ratio(&self) -> f64 {
        (self.params.sigma_max / self.params.sigma_min).ln()
    }
}

impl Sde for OuveSde {
    fn kind(&self) -> SdeKind {
        SdeKind::Ouve
    }

    fn drift(&self, x_t: &ComplexSpectrogram, y: &ComplexSpectrogram, t: f64) -> Result<ComplexSpectrogram> {
        self.guard.check(t, 0.0, 1.0)?;
        x_t.ensure_same_shape(y)?;
        let g = self.params.gamma;
        Ok(y.lin_comb(g, x_t, -g))
    }

    fn diffusion(&self, t: f64) -> f64 {
        let p = &self.params;
        p.sigma_min * (p.sigma_max / p.sigma_min).powf(t) * (2.0 * self.log_ratio()).sqrt()
    }

    fn kernel(&self, t: f64) -> Result<Kernel> {
        self.guard.check(t, 0.0, 1.0)?;
        let p = &self.params;
        let l = self.log_ratio();
        let decay = (-p.gamma * t).exp();
        let var = p.sigma_min.powi(2) * ((p.sigma_max / p.sigma_min).powf(2.0 * t) - (-2.0 * p.gamma * t).exp()) * l
            / (p.gamma + l);
        Ok(Kernel {
            x0_coeff: decay,
            y_coeff: 1.0 - decay,
            var,
        })
    }

    fn guard(&self) -> TimeGuard {
        self.guard
    }
}

/// Build the configured process.
pub fn build_sde(kind: SdeKind, ouve: OuveParams, guard: TimeGuard) -> Result<Box<dyn Sde>> {
    Ok(match kind {
        SdeKind::BrownianBridge => Box::new(BrownianBridgeSde::new(guard)?),
        SdeKind::Ouve => Box::new(OuveSde::new(ouve, guard)?),
    })
}

/// Euler-Maruyama simulation of the forward SDE from `x0` at `t = 0` to
/// `t_end`, with `steps` equal steps.
pub fn simulate_forward(
    sde: &dyn Sde,
    x0: &ComplexSpectrogram,
    y: &ComplexSpectrogram,
    t_end: f64,
    steps: usize,
    rng: &mut dyn RngCore,
) -> Result<ComplexSpectrogram> {
    let dt = t_end / steps as f64;
    let mut x = x0.clone();
    for i in 0..steps {
        let t = i as f64 * dt;
        let f = sde.drift(&x, y, t)?;
        let z = ComplexSpectrogram::standard_normal(x.frames(), x.bins(), rng);
        x.axpy(dt, &f);
        x.axpy(sde.diffusion(t) * dt.sqrt(), &z);
    }
    Ok(x)
}
