//! Per-bin MLP denoiser.
//!
//! Every time-frequency bin is one row of the network input, and all bins
//! share weights. A row holds
//!
//! ```text
//! [Re x_t, Im x_t, Re y, Im y, bin position in [0, 1], t,
//!  sin(2π f_1 t), ..., sin(2π f_K t), cos(2π f_1 t), ..., cos(2π f_K t)]
//! ```
//!
//! with `f_j` spaced geometrically from 1 to `max_frequency`. The two
//! outputs are the real and imaginary parts of the estimate for that bin.

use ndarray::{Array2, ArrayView2};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{Denoiser, Mlp, Parameterization};
use crate::error::{Error, Result};
use crate::sde::Sde;
use crate::spectrogram::ComplexSpectrogram;

use num_complex::Complex64;

/// Number of per-row features that precede the Fourier time features.
const BASE_FEATURES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeEmbedding {
    /// Number of frequencies; each contributes a sine and a cosine.
    pub frequencies: usize,
    pub max_frequency: f64,
}

impl Default for TimeEmbedding {
    fn default() -> Self {
        Self {
            frequencies: 8,
            max_frequency: 128.0,
        }
    }
}

impl TimeEmbedding {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_frequency.is_finite() && self.max_frequency >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "max_frequency must be at least 1, got {}",
                self.max_frequency
            )));
        }
        Ok(())
    }

    pub fn frequency_list(&self) -> Vec<f64> {
        match self.frequencies {
            0 => Vec::new(),
            1 => vec![1.0],
            n => (0..n)
                .map(|j| self.max_frequency.powf(j as f64 / (n - 1) as f64))
                .collect(),
        }
    }

    /// `[t, sin..., cos...]`.
    pub fn features(&self, t: f64) -> Vec<f64> {
        let freqs = self.frequency_list();
        let mut out = Vec::with_capacity(1 + 2 * freqs.len());
        out.push(t);
        let tau = std::f64::consts::TAU;
        out.extend(freqs.iter().map(|f| (tau * f * t).sin()));
        out.extend(freqs.iter().map(|f| (tau * f * t).cos()));
        out
    }

    pub fn width(&self) -> usize {
        1 + 2 * self.frequencies
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiserConfig {
    pub hidden: Vec<usize>,
    pub time_embedding: TimeEmbedding,
    pub parameterization: Parameterization,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            time_embedding: TimeEmbedding::default(),
            parameterization: Parameterization::X0,
        }
    }
}

impl DenoiserConfig {
    pub fn input_dim(&self) -> usize {
        BASE_FEATURES - 1 + self.time_embedding.width()
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(&self.hidden);
        dims.push(2);
        dims
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden layer widths must be positive".into()));
        }
        self.time_embedding.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpDenoiser {
    mlp: Mlp,
    embedding: TimeEmbedding,
    parameterization: Parameterization,
}

impl MlpDenoiser {
    pub fn new(cfg: &DenoiserConfig, rng: &mut dyn RngCore) -> Result<Self> {
        cfg.validate()?;
        Self::from_parts(
            Mlp::new(&cfg.layer_dims(), rng)?,
            cfg.time_embedding,
            cfg.parameterization,
        )
    }

    pub fn from_parts(mlp: Mlp, embedding: TimeEmbedding, parameterization: Parameterization) -> Result<Self> {
        embedding.validate()?;
        let want = BASE_FEATURES - 1 + embedding.width();
        if mlp.input_dim() != want {
            return Err(Error::shape(format!("{want} input features"), mlp.input_dim()));
        }
        if mlp.output_dim() != 2 {
            return Err(Error::shape("2 outputs", mlp.output_dim()));
        }
        Ok(Self {
            mlp,
            embedding,
            parameterization,
        })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    pub fn embedding(&self) -> TimeEmbedding {
        self.embedding
    }

    pub fn config(&self) -> DenoiserConfig {
        let dims = self.mlp.dims();
        DenoiserConfig {
            hidden: dims[1..dims.len() - 1].to_vec(),
            time_embedding: self.embedding,
            parameterization: self.parameterization,
        }
    }

    pub fn param_count(&self) -> usize {
        self.mlp.param_count()
    }

    /// Feature rows for a batch of `(x_t, y, t)` items, item-major then
    /// frame-major then bin-major.
    pub fn features(&self, items: &[(&ComplexSpectrogram, &ComplexSpectrogram, f64)]) -> Result<Array2<f64>> {
        let width = self.mlp.input_dim();
        let rows: usize = items.iter().map(|(x, _, _)| x.len()).sum();
        let mut out = Array2::zeros((rows, width));
        let mut r = 0;
        for &(x_t, y, t) in items {
            x_t.ensure_same_shape(y)?;
            let time = self.embedding.features(t);
            let bins = x_t.bins();
            let denom = bins.saturating_sub(1).max(1) as f64;
            for f in 0..x_t.frames() {
                for k in 0..bins {
                    let (xv, yv) = (x_t.data()[[f, k]], y.data()[[f, k]]);
                    let mut row = out.row_mut(r);
                    row[0] = xv.re;
                    row[1] = xv.im;
                    row[2] = yv.re;
                    row[3] = yv.im;
                    row[4] = k as f64 / denom;
                    for (dst, &v) in row.iter_mut().skip(BASE_FEATURES - 1).zip(&time) {
                        *dst = v;
                    }
                    r += 1;
                }
            }
        }
        Ok(out)
    }

    /// Inverse of the row layout used by [`MlpDenoiser::features`] for one
    /// item starting at row `offset`.
    pub fn unpack(out: ArrayView2<f64>, offset: usize, frames: usize, bins: usize) -> Result<ComplexSpectrogram> {
        if out.ncols() != 2 || out.nrows() < offset + frames * bins {
            return Err(Error::shape(
                format!("at least {} rows of 2", offset + frames * bins),
                format!("{} rows of {}", out.nrows(), out.ncols()),
            ));
        }
        let values = (0..frames * bins)
            .map(|i| Complex64::new(out[[offset + i, 0]], out[[offset + i, 1]]))
            .collect();
        ComplexSpectrogram::from_vec(frames, bins, values)
    }

    /// Raw network output for one spectrogram, independent of any process.
    pub fn forward(&self, x_t: &ComplexSpectrogram, y: &ComplexSpectrogram, t: f64) -> Result<ComplexSpectrogram> {
        let feats = self.features(&[(x_t, y, t)])?;
        let out = self.mlp.forward(feats.view())?;
        Self::unpack(out.view(), 0, x_t.frames(), x_t.bins())
    }
}

impl Denoiser for MlpDenoiser {
    fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    fn output(
        &self,
        _sde: &dyn Sde,
        x_t: &ComplexSpectrogram,
        y: &ComplexSpectrogram,
        t: f64,
    ) -> Result<ComplexSpectrogram> {
        self.forward(x_t, y, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_spec(seed: u64) -> ComplexSpectrogram {
        ComplexSpectrogram::standard_normal(3, 5, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn default_layout() {
        let cfg = DenoiserConfig::default();
        assert_eq!(cfg.input_dim(), 22);
        assert_eq!(cfg.layer_dims(), vec![22, 256, 256, 2]);
        let freqs = cfg.time_embedding.frequency_list();
        assert_eq!(freqs.len(), 8);
        assert!((freqs[0] - 1.0).abs() < 1e-12 && (freqs[7] - 128.0).abs() < 1e-9);
        assert!((freqs[3] - 8.0).abs() < 1e-9);
    }

    #[test]
    fn zero_network_gives_zero_output() {
        let cfg = DenoiserConfig {
            hidden: vec![4],
            ..DenoiserConfig::default()
        };
        let model = MlpDenoiser::from_parts(
            Mlp::zeros(&cfg.layer_dims()).unwrap(),
            cfg.time_embedding,
            Parameterization::X0,
        )
        .unwrap();
        let x = random_spec(1);
        let out = model.forward(&x, &random_spec(2), 0.4).unwrap();
        assert!(out.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn linear_passthrough_returns_state() {
        let emb = TimeEmbedding::default();
        let mut w = Array2::zeros((22, 2));
        w[[0, 0]] = 1.0;
        w[[1, 1]] = 1.0;
        let mlp = Mlp::from_layers(vec![w], vec![ndarray::Array1::zeros(2)]).unwrap();
        let model = MlpDenoiser::from_parts(mlp, emb, Parameterization::X0).unwrap();
        let x = random_spec(3);
        let out = model.forward(&x, &random_spec(4), 0.7).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = DenoiserConfig {
            hidden: vec![16, 16],
            ..DenoiserConfig::default()
        };
        let a = MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = MlpDenoiser::new(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let (x, y) = (random_spec(5), random_spec(6));
        let oa = a.forward(&x, &y, 0.5).unwrap();
        let ob = b.forward(&x, &y, 0.5).unwrap();
        assert_eq!(oa.to_interleaved(), ob.to_interleaved());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let model = MlpDenoiser::new(
            &DenoiserConfig {
                hidden: vec![4],
                ..DenoiserConfig::default()
            },
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let x = random_spec(1);
        let y = ComplexSpectrogram::zeros(3, 4);
        assert!(model.forward(&x, &y, 0.5).is_err());
        let mlp = Mlp::zeros(&[10, 2]).unwrap();
        assert!(MlpDenoiser::from_parts(mlp, TimeEmbedding::default(), Parameterization::X0).is_err());
    }

    #[test]
    fn feature_rows_follow_documented_layout() {
        let model = MlpDenoiser::new(
            &DenoiserConfig {
                hidden: vec![4],
                ..DenoiserConfig::default()
            },
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let (x, y) = (random_spec(7), random_spec(8));
        let feats = model.features(&[(&x, &y, 0.25)]).unwrap();
        assert_eq!(feats.dim(), (15, 22));
        let row = feats.row(5 + 4);
        assert_eq!(row[0], x.data()[[1, 4]].re);
        assert_eq!(row[3], y.data()[[1, 4]].im);
        assert_eq!(row[4], 1.0);
        assert_eq!(row[5], 0.25);
        assert!((row[6] - (std::f64::consts::TAU * 0.25).sin()).abs() < 1e-15);
        assert!((row[14] - (std::f64::consts::TAU * 0.25).cos()).abs() < 1e-15);
    }
}
