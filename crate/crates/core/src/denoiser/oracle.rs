//! Exact posterior-mean denoiser under independent per-bin Gaussian priors.
//!
//! With `x0 ~ N_C(0, var_x)`, `n ~ N_C(0, var_n)`, `y = x0 + n` and the kernel
//! `x_t = a·x0 + b·y + σ·z`, each bin has
//!
//! ```text
//! m = var_x / (var_x + var_n) · y            E[x0 | y]
//! v = var_x · var_n / (var_x + var_n)         Var[x0 | y]
//! E[x0 | x_t, y] = m + a·v / (a²v + σ²) · (x_t - a·m - b·y)
//! ```
//!
//! This is the minimizer of the clean-estimate training loss, so it doubles
//! as the reference every learned model is compared against.

use rand::RngCore;

use super::{Denoiser, Parameterization};
use crate::error::{Error, Result};
use crate::sde::{BrownianBridgeSde, Kernel, Sde};
use crate::spectrogram::{complex_normal, ComplexSpectrogram};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    var_x: Vec<f64>,
    var_n: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(var_x: Vec<f64>, var_n: Vec<f64>) -> Result<Self> {
        if var_x.len() != var_n.len() {
            return Err(Error::shape(var_x.len(), var_n.len()));
        }
        if var_x.is_empty() {
            return Err(Error::InvalidConfig("prior needs at least one bin".into()));
        }
        for (bin, (&vx, &vn)) in var_x.iter().zip(&var_n).enumerate() {
            if !(vx.is_finite() && vn.is_finite() && vx >= 0.0 && vn >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "prior variances must be finite and nonnegative (bin {bin})"
                )));
            }
            if vx + vn <= 0.0 {
                return Err(Error::DegeneratePrior { bin });
            }
        }
        Ok(Self { var_x, var_n })
    }

    /// Same variances in every bin.
    pub fn flat(bins: usize, var_x: f64, var_n: f64) -> Result<Self> {
        Self::new(vec![var_x; bins], vec![var_n; bins])
    }

    /// Clean energy decaying with frequency over flat noise, at the
    /// amplitude scale of normalized speech spectrograms (|X| ~ 0.1).
    pub fn speech_like(bins: usize) -> Result<Self> {
        let decay = 0.09375 * bins as f64;
        let var_x = (0..bins).map(|k| 0.05 * (-(k as f64) / decay).exp() + 1e-4).collect();
        Self::new(var_x, vec![0.01; bins])
    }

    /// Per-bin mean power of paired clean and noise spectrograms.
    pub fn estimate(clean: &[ComplexSpectrogram], noise: &[ComplexSpectrogram]) -> Result<Self> {
        let power = |specs: &[ComplexSpectrogram]| -> Result<Vec<f64>> {
            let first = specs.first().ok_or(Error::EmptySignal)?;
            let bins = first.bins();
            let mut acc = vec![0.0; bins];
            let mut count = 0usize;
            for s in specs {
                if s.bins() != bins {
                    return Err(Error::shape(bins, s.bins()));
                }
                for row in s.data().rows() {
                    for (a, c) in acc.iter_mut().zip(row) {
                        *a += c.norm_sqr();
                    }
                    count += 1;
                }
            }
            Ok(acc.into_iter().map(|a| a / count as f64).collect())
        };
        let mut var_x = power(clean)?;
        let mut var_n = power(noise)?;
        for (vx, vn) in var_x.iter_mut().zip(var_n.iter_mut()) {
            *vx = vx.max(1e-12);
            *vn = vn.max(1e-12);
        }
        Self::new(var_x, var_n)
    }

    pub fn bins(&self) -> usize {
        self.var_x.len()
    }

    pub fn var_x(&self) -> &[f64] {
        &self.var_x
    }

    pub fn var_n(&self) -> &[f64] {
        &self.var_n
    }

    /// `E[x0 | y]` gain and `Var[x0 | y]` for one bin.
    fn wiener(&self, bin: usize) -> (f64, f64) {
        let (vx, vn) = (self.var_x[bin], self.var_n[bin]);
        let s = vx + vn;
        (vx / s, vx * vn / s)
    }

    /// Draw a clean spectrogram of `frames × bins`.
    pub fn sample_clean(&self, frames: usize, rng: &mut dyn RngCore) -> ComplexSpectrogram {
        let bins = self.bins();
        let mut x0 = ComplexSpectrogram::zeros(frames, bins);
        for f in 0..frames {
            for k in 0..bins {
                x0.data_mut()[[f, k]] = complex_normal(rng) * self.var_x[k].sqrt();
            }
        }
        x0
    }

    /// Draw a clean/noise pair of `frames × bins` spectrograms.
    pub fn sample_pair(&self, frames: usize, rng: &mut dyn RngCore) -> (ComplexSpectrogram, ComplexSpectrogram) {
        let bins = self.bins();
        let mut x0 = ComplexSpectrogram::zeros(frames, bins);
        let mut n = ComplexSpectrogram::zeros(frames, bins);
        for f in 0..frames {
            for k in 0..bins {
                x0.data_mut()[[f, k]] = complex_normal(rng) * self.var_x[k].sqrt();
                n.data_mut()[[f, k]] = complex_normal(rng) * self.var_n[k].sqrt();
            }
        }
        (x0, n)
    }

    fn check_bins(&self, s: &ComplexSpectrogram) -> Result<()> {
        if s.bins() == self.bins() {
            Ok(())
        } else {
            Err(Error::shape(
                format!("{} bins", self.bins()),
                format!("{} bins", s.bins()),
            ))
        }
    }

    /// `E[x0 | x_t, y]` under the given kernel.
    pub fn posterior_mean(
        &self,
        kernel: Kernel,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
    ) -> Result<ComplexSpectrogram> {
        self.check_bins(y)?;
        x_t.ensure_same_shape(y)?;
        let Kernel {
            x0_coeff: a,
            y_coeff: b,
            var,
        } = kernel;
        let mut out = ComplexSpectrogram::zeros(y.frames(), y.bins());
        for k in 0..self.bins() {
            let (gain, v) = self.wiener(k);
            let denom = a * a * v + var;
            for f in 0..y.frames() {
                let (xt, yy) = (x_t.data()[[f, k]], y.data()[[f, k]]);
                let m = yy * gain;
                out.data_mut()[[f, k]] = if var == 0.0 {
                    if a == 0.0 {
                        m
                    } else {
                        // Noise-free kernel: x_t pins x0 exactly.
                        (xt - yy * b) / a
                    }
                } else {
                    m + (xt - m * a - yy * b) * (a * v / denom)
                };
            }
        }
        Ok(out)
    }

    /// Score of `p_t(x_t | y)`, i.e. `-(x_t - a·m - b·y) / (a²v + σ²)`.
    pub fn marginal_score(
        &self,
        kernel: Kernel,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
    ) -> Result<ComplexSpectrogram> {
        self.check_bins(y)?;
        x_t.ensure_same_shape(y)?;
        let (a, b, var) = (kernel.x0_coeff, kernel.y_coeff, kernel.var);
        let mut out = ComplexSpectrogram::zeros(y.frames(), y.bins());
        for k in 0..self.bins() {
            let (gain, v) = self.wiener(k);
            let total = a * a * v + var;
            for f in 0..y.frames() {
                let (xt, yy) = (x_t.data()[[f, k]], y.data()[[f, k]]);
                out.data_mut()[[f, k]] = -(xt - yy * (a * gain) - yy * b) / total;
            }
        }
        Ok(out)
    }

    /// Per-bin variance of `p_t(x_t | y)`, `a²v + σ²`.
    pub fn marginal_variance(&self, kernel: Kernel) -> Vec<f64> {
        (0..self.bins())
            .map(|k| kernel.x0_coeff.powi(2) * self.wiener(k).1 + kernel.var)
            .collect()
    }

    /// Per-bin `Var[x0 | x_t, y] = v σ² / (a² v + σ²)`.
    pub fn posterior_variance(&self, kernel: Kernel) -> Vec<f64> {
        (0..self.bins())
            .map(|k| {
                let v = self.wiener(k).1;
                let denom = kernel.x0_coeff.powi(2) * v + kernel.var;
                if denom == 0.0 {
                    0.0
                } else {
                    v * kernel.var / denom
                }
            })
            .collect()
    }

    /// Expected clean-estimate loss of the oracle for one spectrogram of
    /// `frames` frames: the Bayes risk.
    pub fn bayes_risk(&self, kernel: Kernel, frames: usize) -> f64 {
        frames as f64 * self.posterior_variance(kernel).iter().sum::<f64>()
    }
}

/// Posterior mean under the Brownian bridge kernel with default guards.
pub fn oracle_predict_x0(
    x_t: &ComplexSpectrogram,
    y: &ComplexSpectrogram,
    t: f64,
    prior: &GaussianPrior,
) -> Result<ComplexSpectrogram> {
    let kernel = BrownianBridgeSde::default().kernel(t)?;
    prior.posterior_mean(kernel, x_t, y)
}

/// [`GaussianPrior::posterior_mean`] as a [`Denoiser`].
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    prior: GaussianPrior,
}

impl OracleDenoiser {
    pub fn new(prior: GaussianPrior) -> Self {
        Self { prior }
    }

    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }
}

impl Denoiser for OracleDenoiser {
    fn parameterization(&self) -> Parameterization {
        Parameterization::X0
    }

    fn output(
        &self,
        sde: &dyn Sde,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
    ) -> Result<ComplexSpectrogram> {
        self.prior.posterior_mean(sde.kernel(t)?, x_t, y)
    }
}
