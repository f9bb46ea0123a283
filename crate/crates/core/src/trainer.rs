//! Denoising training for the MLP in either parameterization.
//!
//! Two objectives are available. The clean-estimate loss is
//! `mean ‖x̂ − x0‖²`, and the weighted score-matching loss is
//! `mean ‖σ(t)·s + z‖²`. Either objective can train either
//! parameterization, because the clean estimate and the score are affine in
//! each other at fixed `(x_t, y, t)`. This is what lets the gradient-scale
//! ablation compare both objectives on one fixed network.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::denoiser::{Denoiser, GaussianPrior, Gradients, Mlp, MlpDenoiser, Parameterization, Tape};
use crate::error::{Error, Result};
use crate::sde::Sde;
use crate::spectrogram::ComplexSpectrogram;

/// Training hyperparameters. Defaults are sized for toy problems; the
/// full-scale setting is lr 2e-5, batch 8, 100 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Objective: clean-estimate loss or weighted score matching.
    pub loss_mode: Parameterization,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t_min: 0.03,
            t_max: 0.999,
            loss_mode: Parameterization::X0,
            seed: 0,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max <= 1.0) {
            return bad(format!(
                "need 0 < t_min < t_max <= 1, got [{}, {}]",
                self.t_min, self.t_max
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps > 0.0) {
            return bad("need beta1, beta2 in [0, 1) and eps > 0".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// A clean/noisy spectrogram pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub clean: ComplexSpectrogram,
    pub noisy: ComplexSpectrogram,
}

impl TrainingPair {
    pub fn new(clean: ComplexSpectrogram, noisy: ComplexSpectrogram) -> Result<Self> {
        clean.ensure_same_shape(&noisy)?;
        Ok(Self { clean, noisy })
    }

    /// Pairs drawn from a Gaussian prior, `frames` frames each.
    pub fn sample_from_prior(prior: &GaussianPrior, count: usize, frames: usize, rng: &mut dyn RngCore) -> Vec<Self> {
        (0..count)
            .map(|_| {
                let (x0, n) = prior.sample_pair(frames, rng);
                let y = &x0 + &n;
                Self { clean: x0, noisy: y }
            })
            .collect()
    }
}

/// Pairs together with the diffusion time, noise draw and resulting state
/// for each item.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub x0: Vec<ComplexSpectrogram>,
    pub y: Vec<ComplexSpectrogram>,
    pub t: Vec<f64>,
    pub z: Vec<ComplexSpectrogram>,
    pub x_t: Vec<ComplexSpectrogram>,
}

impl TrainBatch {
    /// Assemble a batch from explicit draws; `x_t` follows the kernel.
    pub fn new(
        sde: &dyn Sde,
        x0: Vec<ComplexSpectrogram>,
        y: Vec<ComplexSpectrogram>,
        t: Vec<f64>,
        z: Vec<ComplexSpectrogram>,
    ) -> Result<Self> {
        let n = x0.len();
        if n == 0 {
            return Err(Error::InvalidConfig("batch must not be empty".into()));
        }
        if y.len() != n || t.len() != n || z.len() != n {
            return Err(Error::shape(n, format!("{}/{}/{}", y.len(), t.len(), z.len())));
        }
        let mut x_t = Vec::with_capacity(n);
        for i in 0..n {
            x0[i].ensure_same_shape(&y[i])?;
            x0[i].ensure_same_shape(&z[i])?;
            let k = sde.kernel(t[i])?;
            let mut xt = k.mean(&x0[i], &y[i]);
            xt.axpy(k.std(), &z[i]);
            x_t.push(xt);
        }
        Ok(Self { x0, y, t, z, x_t })
    }

    /// Fresh `t ~ U[t_min, t_max]` and `z` for each of the given pairs.
    pub fn sample(sde: &dyn Sde, pairs: &[&TrainingPair], t_range: (f64, f64), rng: &mut dyn RngCore) -> Result<Self> {
        let mut t = Vec::with_capacity(pairs.len());
        let mut z = Vec::with_capacity(pairs.len());
        for p in pairs {
            t.push(rng.random_range(t_range.0..=t_range.1));
            z.push(ComplexSpectrogram::standard_normal(
                p.clean.frames(),
                p.clean.bins(),
                rng,
            ));
        }
        Self::new(
            sde,
            pairs.iter().map(|p| p.clean.clone()).collect(),
            pairs.iter().map(|p| p.noisy.clone()).collect(),
            t,
            z,
        )
    }

    pub fn len(&self) -> usize {
        self.x0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.is_empty()
    }
}

/// `mean ‖x̂(x_t, y, t) − x0‖²` for any denoiser.
pub fn x0_loss(model: &dyn Denoiser, sde: &dyn Sde, batch: &TrainBatch) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..batch.len() {
        let x_hat = model.predict_x0(sde, &batch.x_t[i], &batch.y[i], batch.t[i])?;
        total += (&x_hat - &batch.x0[i]).norm_sqr();
    }
    Ok(total / batch.len() as f64)
}

/// `mean ‖σ(t)·s(x_t, y, t) + z‖²` for any denoiser.
pub fn score_loss(model: &dyn Denoiser, sde: &dyn Sde, batch: &TrainBatch) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..batch.len() {
        let sigma = sde.kernel(batch.t[i])?.std();
        if sigma <= 0.0 {
            return Err(Error::TimeGuard {
                t: batch.t[i],
                lo: 0.0,
                hi: 1.0,
            });
        }
        let s = model.score(sde, &batch.x_t[i], &batch.y[i], batch.t[i])?;
        total += s.lin_comb(sigma, &batch.z[i], 1.0).norm_sqr();
    }
    Ok(total / batch.len() as f64)
}

pub fn loss(model: &dyn Denoiser, sde: &dyn Sde, batch: &TrainBatch, mode: Parameterization) -> Result<f64> {
    match mode {
        Parameterization::X0 => x0_loss(model, sde, batch),
        Parameterization::Score => score_loss(model, sde, batch),
    }
}

/// Loss and exact parameter gradients of an MLP denoiser under `mode`.
pub fn loss_and_gradients(
    model: &MlpDenoiser,
    sde: &dyn Sde,
    batch: &TrainBatch,
    mode: Parameterization,
) -> Result<(f64, Gradients)> {
    let items: Vec<_> = (0..batch.len())
        .map(|i| (&batch.x_t[i], &batch.y[i], batch.t[i]))
        .collect();
    let feats = model.features(&items)?;
    let mut tape = Tape::new();
    let out = model.mlp().forward_recorded(feats.view(), &mut tape)?;
    let mut d_out = Array2::zeros(out.dim());
    let inv_n = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let mut row = 0;
    for i in 0..batch.len() {
        let k = sde.kernel(batch.t[i])?;
        let (a, b, var, sigma) = (k.x0_coeff, k.y_coeff, k.var, k.std());
        let param = model.parameterization();
        // Each branch maps the raw output r to the residual e whose squared
        // norm is the loss, with de/dr = scale.
        let needs_score = mode == Parameterization::Score || param == Parameterization::Score;
        if needs_score && sigma <= 0.0 {
            return Err(Error::TimeGuard {
                t: batch.t[i],
                lo: 0.0,
                hi: 1.0,
            });
        }
        if mode == Parameterization::X0 && param == Parameterization::Score && a <= 0.0 {
            return Err(Error::TimeGuard {
                t: batch.t[i],
                lo: 0.0,
                hi: 1.0,
            });
        }
        let (x_t, y, x0, z) = (&batch.x_t[i], &batch.y[i], &batch.x0[i], &batch.z[i]);
        for f in 0..x_t.frames() {
            for bin in 0..x_t.bins() {
                let r = num_complex::Complex64::new(out[[row, 0]], out[[row, 1]]);
                let (xv, yv) = (x_t.data()[[f, bin]], y.data()[[f, bin]]);
                let (e, scale) = match (mode, param) {
                    (Parameterization::X0, Parameterization::X0) => (r - x0.data()[[f, bin]], 1.0),
                    (Parameterization::X0, Parameterization::Score) => {
                        let x_hat = (xv - yv * b + r * var) / a;
                        (x_hat - x0.data()[[f, bin]], var / a)
                    }
                    (Parameterization::Score, Parameterization::Score) => (r * sigma + z.data()[[f, bin]], sigma),
                    (Parameterization::Score, Parameterization::X0) => {
                        let s = -(xv - r * a - yv * b) / var;
                        (s * sigma + z.data()[[f, bin]], a / sigma)
                    }
                };
                total += e.norm_sqr();
                d_out[[row, 0]] = 2.0 * e.re * scale * inv_n;
                d_out[[row, 1]] = 2.0 * e.im * scale * inv_n;
                row += 1;
            }
        }
    }
    let grads = model.mlp().backward(&tape, d_out.view())?;
    Ok((total * inv_n, grads))
}

/// Norm of the parameter gradient of one loss; the quantity compared
/// across times in the gradient-scale ablation.
pub fn gradient_norm(model: &MlpDenoiser, sde: &dyn Sde, batch: &TrainBatch, mode: Parameterization) -> Result<f64> {
    Ok(loss_and_gradients(model, sde, batch, mode)?.1.norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        TrainConfig::default().adam()
    }
}

/// First and second moment estimates, one buffer per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(group_sizes: &[usize]) -> Self {
        Self {
            m: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn for_mlp(mlp: &Mlp) -> Self {
        let sizes: Vec<usize> = mlp
            .weights()
            .iter()
            .zip(mlp.biases())
            .flat_map(|(w, b)| [w.len(), b.len()])
            .collect();
        Self::new(&sizes)
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, hp: AdamParams) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(params.len(), format!("{}/{}", grads.len(), state.m.len())));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::shape(p.len(), g.len()));
        }
    }
    state.step += 1;
    let bc1 = 1.0 - hp.beta1.powi(state.step as i32);
    let bc2 = 1.0 - hp.beta2.powi(state.step as i32);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..p.len() {
            m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * g[j];
            v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.eps);
        }
    }
    Ok(())
}

/// [`adam_step`] on every weight and bias of an MLP.
pub fn adam_step_mlp(mlp: &mut Mlp, grads: &Gradients, state: &mut AdamState, hp: AdamParams) -> Result<()> {
    let g = grads.slices();
    let mut p = mlp.params_mut();
    adam_step(&mut p, &g, state, hp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub curve: Vec<EpochLoss>,
    pub train_size: usize,
    pub val_size: usize,
}

impl TrainReport {
    pub fn final_val_loss(&self) -> Option<f64> {
        self.curve.last().map(|e| e.val_loss)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
        for row in &self.curve {
            w.serialize(row).map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Deterministic split of `n` items into (train, validation) indices.
/// A positive fraction always leaves at least one item on each side when
/// `n >= 2`.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(SPLIT_STREAM)));
    let val = if n >= 2 && fraction > 0.0 {
        ((n as f64 * fraction).ceil() as usize).clamp(1, n - 1)
    } else {
        0
    };
    let train = idx.split_off(val);
    (train, idx)
}

const SPLIT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Train `model` on `pairs` with fresh `t` and `z` each epoch.
///
/// The validation batch draws its `t` and `z` once, so validation losses
/// are comparable across epochs. With no validation items, the validation
/// loss is reported as NaN.
pub fn train(model: &mut MlpDenoiser, sde: &dyn Sde, pairs: &[TrainingPair], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    let (mut train_idx, val_idx) = split_indices(pairs.len(), cfg.validation_fraction, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t_range = (cfg.t_min, cfg.t_max);
    let val_batch = if val_idx.is_empty() {
        None
    } else {
        let refs: Vec<&TrainingPair> = val_idx.iter().map(|&i| &pairs[i]).collect();
        Some(TrainBatch::sample(
            sde,
            &refs,
            t_range,
            &mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1)),
        )?)
    };
    let mut adam = AdamState::for_mlp(model.mlp());
    let hp = cfg.adam();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in train_idx.chunks(cfg.batch_size) {
            let refs: Vec<&TrainingPair> = chunk.iter().map(|&i| &pairs[i]).collect();
            let batch = TrainBatch::sample(sde, &refs, t_range, &mut rng)?;
            let (l, grads) = loss_and_gradients(model, sde, &batch, cfg.loss_mode)?;
            if !l.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    detail: format!("batch {batches} produced loss {l}"),
                });
            }
            adam_step_mlp(model.mlp_mut(), &grads, &mut adam, hp)?;
            sum += l;
            batches += 1;
        }
        let train_loss = sum / batches as f64;
        let val_loss = match &val_batch {
            Some(b) => loss(&*model, sde, b, cfg.loss_mode)?,
            None => f64::NAN,
        };
        if val_batch.is_some() && !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("validation loss {val_loss}"),
            });
        }
        log::debug!("epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e}");
        curve.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
    }
    Ok(TrainReport {
        curve,
        train_size: train_idx.len(),
        val_size: val_idx.len(),
    })
}

/// Expected clean-estimate loss of the exact posterior mean for one
/// spectrogram of `frames` frames, averaged over `t ~ U[t_min, t_max]`.
pub fn expected_bayes_risk(prior: &GaussianPrior, sde: &dyn Sde, t_min: f64, t_max: f64, frames: usize) -> Result<f64> {
    // Composite Simpson rule on an even number of intervals.
    let n = 2000;
    let h = (t_max - t_min) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = t_min + h * i as f64;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * prior.bayes_risk(sde.kernel(t)?, frames);
    }
    Ok(acc * h / 3.0 / (t_max - t_min))
}
