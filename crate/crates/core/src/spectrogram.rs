//! Complex spectrogram container: the state space of the diffusion process.
//!
//! A spectrogram is a `frames × bins` grid of complex values. Every diffusion
//! quantity (clean `x0`, noisy `y`, the state `x_t`, scores, noise draws) is
//! stored in this type so that shapes can be checked in one place.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    data: Array2<Complex64>,
}

/// Draw one circularly symmetric complex standard normal: real and imaginary
/// parts are independent with variance 1/2 each, so `E|z|^2 = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

impl ComplexSpectrogram {
    pub fn new(data: Array2<Complex64>) -> Self {
        Self { data }
    }

    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self::new(Array2::zeros((frames, bins)))
    }

    /// A spectrogram with every entry equal to `value`.
    pub fn filled(frames: usize, bins: usize, value: Complex64) -> Self {
        Self::new(Array2::from_elem((frames, bins), value))
    }

    /// Row-major construction from a flat vector.
    pub fn from_vec(frames: usize, bins: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != frames * bins {
            return Err(Error::shape(frames * bins, values.len()));
        }
        let data =
            Array2::from_shape_vec((frames, bins), values).map_err(|e| Error::shape(format!("{frames}x{bins}"), e))?;
        Ok(Self::new(data))
    }

    /// Fresh circularly symmetric complex standard normal noise.
    pub fn standard_normal<R: Rng + ?Sized>(frames: usize, bins: usize, rng: &mut R) -> Self {
        let mut data = Array2::zeros((frames, bins));
        data.iter_mut().for_each(|v| *v = complex_normal(rng));
        Self::new(data)
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.data
    }

    pub fn into_inner(self) -> Array2<Complex64> {
        self.data
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn bins(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames(), self.bins())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::shape(
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ))
        }
    }

    /// Sum of squared magnitudes over every entry.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.data.iter()
    }

    /// `a·self + b·other`, elementwise.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        let data = Zip::from(&self.data)
            .and(&other.data)
            .map_collect(|&x, &y| x * a + y * b);
        Self::new(data)
    }

    /// `self += a·other`, in place.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        Zip::from(&mut self.data).and(&other.data).for_each(|x, &y| *x += y * a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.data.mapv(|c| c * a))
    }

    /// Elementwise combination of two equally shaped spectrograms.
    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        let data = Zip::from(&self.data).and(&other.data).map_collect(|&x, &y| f(x, y));
        Self::new(data)
    }

    /// Largest elementwise magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        Zip::from(&self.data)
            .and(&other.data)
            .fold(0.0_f64, |acc, &a, &b| acc.max((a - b).norm()))
    }

    /// Flattened `[re, im, re, im, ...]` view, convenient for metrics.
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.data.iter().flat_map(|c| [c.re, c.im]).collect()
    }
}

impl From<Array2<Complex64>> for ComplexSpectrogram {
    fn from(data: Array2<Complex64>) -> Self {
        Self::new(data)
    }
}

impl Add for &ComplexSpectrogram {
    type Output = ComplexSpectrogram;

    fn add(self, rhs: Self) -> ComplexSpectrogram {
        ComplexSpectrogram::new(&self.data + &rhs.data)
    }
}

impl Sub for &ComplexSpectrogram {
    type Output = ComplexSpectrogram;

    fn sub(self, rhs: Self) -> ComplexSpectrogram {
        ComplexSpectrogram::new(&self.data - &rhs.data)
    }
}

impl Mul<f64> for &ComplexSpectrogram {
    type Output = ComplexSpectrogram;

    fn mul(self, rhs: f64) -> ComplexSpectrogram {
        self.scaled(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complex_normal_has_unit_total_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let (mut re2, mut im2, mut cross) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = complex_normal(&mut rng);
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            cross += z.re * z.im;
        }
        let n = n as f64;
        assert!((re2 / n - 0.5).abs() < 0.01);
        assert!((im2 / n - 0.5).abs() < 0.01);
        assert!((cross / n).abs() < 0.01);
    }

    #[test]
    fn lin_comb_and_axpy_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ComplexSpectrogram::standard_normal(3, 5, &mut rng);
        let b = ComplexSpectrogram::standard_normal(3, 5, &mut rng);
        let c = a.lin_comb(2.0, &b, -0.5);
        let mut d = a.scaled(2.0);
        d.axpy(-0.5, &b);
        assert!(c.max_abs_diff(&d) < 1e-15);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(ComplexSpectrogram::from_vec(2, 3, vec![Complex64::default(); 5]).is_err());
    }
}
