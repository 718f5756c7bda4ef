//! Complex-valued gate classifier.
//!
//! A stack of complex dense layers reads the flattened residual table, a
//! bridge concatenates the real and imaginary parts of the last complex
//! activation, and two real dense layers produce a softmax over the gate
//! vocabulary. Every complex parameter is stored (and optimized) as two real
//! arrays.

mod io;
mod train;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::search::GatePolicy;
use crate::state::OperatorTable;

pub use io::{WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use train::{gradients, loss, mean_loss, train, train_step, Adam, Gradients, TrainConfig, TrainLog};

/// Nonlinearity applied after each complex layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// ReLU on the real and imaginary parts independently.
    SplitCRelu,
    /// `z ↦ ReLU(|z| + bias) · z / |z|` with a fixed bias.
    ModRelu { bias: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n_qubits: usize,
    pub vocab_size: usize,
    /// Output width of each complex layer.
    pub complex_widths: Vec<usize>,
    /// Width of the hidden real layer; the output layer has `vocab_size` units.
    pub real_hidden: usize,
    pub activation: Activation,
    pub seed: u64,
}

pub const DEFAULT_COMPLEX_LAYERS: usize = 10;
pub const DEFAULT_COMPLEX_WIDTH: usize = 128;

impl NetworkConfig {
    /// Ten complex layers of [`DEFAULT_COMPLEX_WIDTH`] and a real hidden
    /// layer of twice that width.
    pub fn new(n_qubits: usize, vocab_size: usize) -> Self {
        NetworkConfig {
            n_qubits,
            vocab_size,
            complex_widths: vec![DEFAULT_COMPLEX_WIDTH; DEFAULT_COMPLEX_LAYERS],
            real_hidden: 2 * DEFAULT_COMPLEX_WIDTH,
            activation: Activation::SplitCRelu,
            seed: 0,
        }
    }

    /// Complex entries per input: `4^n`.
    /// Complex entries per input table (4ⁿ); flattened inputs hold twice as many reals.
    pub fn input_dim(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > 8 {
            return Err(Error::QubitCount(self.n_qubits));
        }
        if self.complex_widths.is_empty() {
            return Err(Error::Config("at least one complex layer is required".into()));
        }
        if self.complex_widths.contains(&0) || self.real_hidden == 0 || self.vocab_size == 0 {
            return Err(Error::Config("layer widths must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDense {
    pub w_re: Array2<f64>,
    pub w_im: Array2<f64>,
    pub b_re: Array1<f64>,
    pub b_im: Array1<f64>,
}

impl ComplexDense {
    pub fn zeros(out: usize, inp: usize) -> Self {
        ComplexDense {
            w_re: Array2::zeros((out, inp)),
            w_im: Array2::zeros((out, inp)),
            b_re: Array1::zeros(out),
            b_im: Array1::zeros(out),
        }
    }

    pub fn outputs(&self) -> usize {
        self.w_re.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.w_re.ncols()
    }

    /// `(zr, zi) = W·h + b` over a batch of row vectors.
    fn forward(&self, hr: &Array2<f64>, hi: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let batch = hr.nrows();
        let mut zr = Array2::zeros((batch, self.outputs()));
        let mut zi = Array2::zeros((batch, self.outputs()));
        zr.assign(&self.b_re.broadcast((batch, self.outputs())).unwrap());
        zi.assign(&self.b_im.broadcast((batch, self.outputs())).unwrap());
        general_mat_mul(1.0, hr, &self.w_re.t(), 1.0, &mut zr);
        general_mat_mul(-1.0, hi, &self.w_im.t(), 1.0, &mut zr);
        general_mat_mul(1.0, hr, &self.w_im.t(), 1.0, &mut zi);
        general_mat_mul(1.0, hi, &self.w_re.t(), 1.0, &mut zi);
        (zr, zi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl RealDense {
    pub fn zeros(out: usize, inp: usize) -> Self {
        RealDense {
            w: Array2::zeros((out, inp)),
            b: Array1::zeros(out),
        }
    }

    pub fn outputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.w.ncols()
    }

    fn forward(&self, h: &Array2<f64>) -> Array2<f64> {
        let batch = h.nrows();
        let mut z = self.b.broadcast((batch, self.outputs())).unwrap().to_owned();
        general_mat_mul(1.0, h, &self.w.t(), 1.0, &mut z);
        z
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    n_qubits: usize,
    activation: Activation,
    pub complex: Vec<ComplexDense>,
    /// Hidden layer (ReLU) followed by the softmax output layer.
    pub real: [RealDense; 2],
    pub optimizer: Adam,
}

/// Intermediate values of a batch forward pass, kept for backpropagation.
pub(crate) struct Trace {
    /// Inputs to each complex layer (real, imaginary).
    pub complex_inputs: Vec<(Array2<f64>, Array2<f64>)>,
    /// Pre-activations of each complex layer.
    pub complex_pre: Vec<(Array2<f64>, Array2<f64>)>,
    pub bridge: Array2<f64>,
    pub hidden_pre: Array2<f64>,
    pub hidden: Array2<f64>,
    pub logits: Array2<f64>,
}

impl Network {
    /// Randomly initialized network: weights (real and imaginary parts
    /// independently) drawn from `N(0, 1/fan_in)`, biases zero.
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut fill = |a: &mut Array2<f64>| {
            let normal = Normal::new(0.0, (1.0 / a.ncols() as f64).sqrt()).expect("positive std");
            a.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
        };
        let mut complex = Vec::with_capacity(cfg.complex_widths.len());
        let mut width = cfg.input_dim();
        for &out in &cfg.complex_widths {
            let mut layer = ComplexDense::zeros(out, width);
            fill(&mut layer.w_re);
            fill(&mut layer.w_im);
            complex.push(layer);
            width = out;
        }
        let mut hidden = RealDense::zeros(cfg.real_hidden, 2 * width);
        fill(&mut hidden.w);
        let mut output = RealDense::zeros(cfg.vocab_size, cfg.real_hidden);
        fill(&mut output.w);
        Ok(Network {
            n_qubits: cfg.n_qubits,
            activation: cfg.activation,
            complex,
            real: [hidden, output],
            optimizer: Adam::default(),
        })
    }

    /// Assembles a network from explicit layers, checking that dimensions chain.
    pub fn from_layers(
        n_qubits: usize,
        activation: Activation,
        complex: Vec<ComplexDense>,
        real: [RealDense; 2],
    ) -> Result<Self> {
        let mut width = 1usize << (2 * n_qubits);
        if complex.is_empty() {
            return Err(Error::Config("at least one complex layer is required".into()));
        }
        for layer in &complex {
            check_dims(layer.inputs(), width)?;
            check_dims(layer.b_re.len(), layer.outputs())?;
            check_dims(layer.b_im.len(), layer.outputs())?;
            check_dims(layer.w_im.dim().0, layer.outputs())?;
            check_dims(layer.w_im.dim().1, layer.inputs())?;
            width = layer.outputs();
        }
        check_dims(real[0].inputs(), 2 * width)?;
        check_dims(real[1].inputs(), real[0].outputs())?;
        for r in &real {
            check_dims(r.b.len(), r.outputs())?;
        }
        Ok(Network {
            n_qubits,
            activation,
            complex,
            real,
            optimizer: Adam::default(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn set_activation(&mut self, activation: Activation) {
        self.activation = activation;
    }

    pub fn input_dim(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    pub fn vocab_size(&self) -> usize {
        self.real[1].outputs()
    }

    /// Total number of real parameters.
    pub fn parameter_count(&self) -> usize {
        self.complex
            .iter()
            .map(|l| 2 * (l.w_re.len() + l.b_re.len()))
            .sum::<usize>()
            + self.real.iter().map(|l| l.w.len() + l.b.len()).sum::<usize>()
    }

    /// Parameter arrays in a fixed order: per complex layer `w_re, w_im,
    /// b_re, b_im`, then per real layer `w, b`.
    pub(crate) fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.complex {
            out.push(l.w_re.as_slice_mut().expect("standard layout"));
            out.push(l.w_im.as_slice_mut().expect("standard layout"));
            out.push(l.b_re.as_slice_mut().expect("standard layout"));
            out.push(l.b_im.as_slice_mut().expect("standard layout"));
        }
        for l in &mut self.real {
            out.push(l.w.as_slice_mut().expect("standard layout"));
            out.push(l.b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Splits an interleaved batch (`B × 2·4^n`) into real and imaginary parts.
    fn split_input(&self, inputs: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        if inputs.ncols() != 2 * self.input_dim() {
            return Err(Error::Dimension {
                what: "network input length",
                expected: 2 * self.input_dim(),
                found: inputs.ncols(),
            });
        }
        let re = inputs.slice(s![.., ..;2]).to_owned();
        let im = inputs.slice(s![.., 1..;2]).to_owned();
        Ok((re, im))
    }

    pub(crate) fn forward_trace(&self, inputs: ArrayView2<f64>) -> Result<Trace> {
        let (mut hr, mut hi) = self.split_input(inputs)?;
        let mut complex_inputs = Vec::with_capacity(self.complex.len());
        let mut complex_pre = Vec::with_capacity(self.complex.len());
        for layer in &self.complex {
            let (zr, zi) = layer.forward(&hr, &hi);
            let (ar, ai) = activate(self.activation, &zr, &zi);
            complex_inputs.push((hr, hi));
            complex_pre.push((zr, zi));
            hr = ar;
            hi = ai;
        }
        let bridge = ndarray::concatenate(Axis(1), &[hr.view(), hi.view()]).expect("same rows");
        let hidden_pre = self.real[0].forward(&bridge);
        let hidden = hidden_pre.mapv(|x| x.max(0.0));
        let logits = self.real[1].forward(&hidden);
        Ok(Trace {
            complex_inputs,
            complex_pre,
            bridge,
            hidden_pre,
            hidden,
            logits,
        })
    }

    /// Gate probabilities for a batch of interleaved inputs, one row each.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut logits = self.forward_trace(inputs)?.logits;
        logits.rows_mut().into_iter().for_each(|mut row| {
            let p = softmax(row.as_slice().expect("contiguous row"));
            row.assign(&Array1::from(p));
        });
        Ok(logits)
    }

    /// Gate probabilities for one flattened table (interleaved re/im,
    /// column-major).
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, input.len()), input).expect("single row");
        Ok(self.forward_batch(view)?.row(0).to_vec())
    }

    /// Activations of the last complex layer for one input.
    pub fn complex_features(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        let interleaved: Vec<f64> = input.iter().flat_map(|z| [z.re, z.im]).collect();
        let view = ArrayView2::from_shape((1, interleaved.len()), &interleaved).expect("single row");
        let trace = self.forward_trace(view)?;
        let width = trace.bridge.ncols() / 2;
        Ok((0..width)
            .map(|k| Complex64::new(trace.bridge[[0, k]], trace.bridge[[0, width + k]]))
            .collect())
    }
}

fn check_dims(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::Dimension {
            what: "layer size",
            expected,
            found,
        });
    }
    Ok(())
}

pub(crate) fn activate(act: Activation, zr: &Array2<f64>, zi: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    match act {
        Activation::SplitCRelu => (zr.mapv(|x| x.max(0.0)), zi.mapv(|x| x.max(0.0))),
        Activation::ModRelu { bias } => {
            let mut ar = zr.clone();
            let mut ai = zi.clone();
            ndarray::Zip::from(&mut ar).and(&mut ai).for_each(|x, y| {
                let r = x.hypot(*y);
                let scale = if r + bias > 0.0 && r > 0.0 { 1.0 + bias / r } else { 0.0 };
                *x *= scale;
                *y *= scale;
            });
            (ar, ai)
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl GatePolicy for Network {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn vocab_size(&self) -> usize {
        Network::vocab_size(self)
    }

    fn gate_probabilities(&self, residual: &OperatorTable) -> Result<Vec<f64>> {
        self.forward(&residual.to_interleaved())
    }
}
