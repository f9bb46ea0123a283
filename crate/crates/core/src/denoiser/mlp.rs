//! Dense tanh network with hand-written reverse-mode gradients.
//!
//! Rows of the input matrix are independent examples. Hidden layers use
//! `tanh`; the output layer is linear.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::RngCore;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Activations recorded by [`Mlp::forward_recorded`], consumed by
/// [`Mlp::backward`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    activations: Vec<Array2<f64>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.activations.is_empty()
    }

    pub fn clear(&mut self) {
        self.activations.clear();
    }
}

/// Parameter gradients, laid out like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    /// Flat views in the same order as [`Mlp::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|g| g.is_finite()))
    }
}

impl Mlp {
    /// Glorot-uniform weights and zero biases. `dims` lists the width of
    /// every layer, input first.
    pub fn new(dims: &[usize], rng: &mut dyn RngCore) -> Result<Self> {
        Self::check_dims(dims)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| dist.sample(rng)));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self { weights, biases })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::check_dims(dims)?;
        Ok(Self {
            weights: dims.windows(2).map(|p| Array2::zeros((p[0], p[1]))).collect(),
            biases: dims.windows(2).map(|p| Array1::zeros(p[1])).collect(),
        })
    }

    /// Build from explicit layers; weight `i` is `dims[i] × dims[i+1]`.
    pub fn from_layers(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::InvalidConfig(
                "network needs matching nonempty weight and bias lists".into(),
            ));
        }
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != b.len() {
                return Err(Error::shape(format!("layer {i} bias of {}", w.ncols()), b.len()));
            }
            if i > 0 && weights[i - 1].ncols() != w.nrows() {
                return Err(Error::shape(
                    format!("layer {i} input of {}", weights[i - 1].ncols()),
                    w.nrows(),
                ));
            }
        }
        Ok(Self {
            weights: weights
                .into_iter()
                .map(|w| w.as_standard_layout().into_owned())
                .collect(),
            biases,
        })
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "layer widths must be at least two positive values, got {dims:?}"
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.weights[0].nrows()];
        d.extend(self.weights.iter().map(|w| w.ncols()));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().expect("nonempty").ncols()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    /// Mutable flat views: weight 0, bias 0, weight 1, ...
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn check_input(&self, input: &ArrayView2<f64>) -> Result<()> {
        if input.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("{} input features", self.input_dim()),
                input.ncols(),
            ));
        }
        Ok(())
    }

    fn layer(&self, i: usize, input: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights[i]);
        z += &self.biases[i];
        if i + 1 < self.weights.len() {
            z.mapv_inplace(f64::tanh);
        }
        z
    }

    pub fn forward(&self, input: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&input)?;
        let mut h = self.layer(0, &input);
        for i in 1..self.weights.len() {
            h = self.layer(i, &h.view());
        }
        Ok(h)
    }

    /// Forward pass that records what [`Mlp::backward`] needs. Any previous
    /// contents of `tape` are replaced.
    pub fn forward_recorded(&self, input: ArrayView2<f64>, tape: &mut Tape) -> Result<Array2<f64>> {
        self.check_input(&input)?;
        tape.activations.clear();
        tape.activations.push(input.to_owned());
        for i in 0..self.weights.len() {
            let h = self.layer(i, &tape.activations[i].view());
            tape.activations.push(h);
        }
        Ok(tape.activations.pop().expect("output recorded"))
    }

    /// Gradients of `Σ d_out ⊙ output` with respect to every parameter.
    pub fn backward(&self, tape: &Tape, d_out: ArrayView2<f64>) -> Result<Gradients> {
        if tape.is_empty() {
            return Err(Error::NoCachedForward);
        }
        if tape.activations.len() != self.weights.len() {
            return Err(Error::shape(
                format!("tape of {} layers", self.weights.len()),
                tape.activations.len(),
            ));
        }
        let rows = tape.activations[0].nrows();
        if d_out.dim() != (rows, self.output_dim()) {
            return Err(Error::shape(
                format!("{rows}x{}", self.output_dim()),
                format!("{}x{}", d_out.nrows(), d_out.ncols()),
            ));
        }
        let n = self.weights.len();
        let mut d_weights = vec![Array2::zeros((0, 0)); n];
        let mut d_biases = vec![Array1::zeros(0); n];
        let mut delta = d_out.to_owned();
        for i in (0..n).rev() {
            let a = &tape.activations[i];
            d_weights[i] = a.t().dot(&delta);
            d_biases[i] = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.weights[i].t());
                back.zip_mut_with(a, |d, &h| *d *= 1.0 - h * h);
                delta = back;
            }
        }
        Ok(Gradients {
            weights: d_weights,
            biases: d_biases,
        })
    }
}
