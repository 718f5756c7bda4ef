use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Activation, ComplexDense, Network, RealDense};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gates::GateVocabulary;
use crate::relabel::QubitRelabeling;

/// Cross-entropy of `pred` against the multi-hot `target` normalized to a
/// distribution (each hot gate weighted equally).
pub fn loss(pred: &[f64], target: &[u8]) -> f64 {
    let hot = target.iter().filter(|&&t| t != 0).count() as f64;
    pred.iter()
        .zip(target)
        .filter(|(_, &t)| t != 0)
        .map(|(p, _)| -p.ln() / hot)
        .sum()
}

/// Adam with bias correction. Moment buffers are allocated on first use and
/// cover real and imaginary parts as separate parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

impl Adam {
    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        if self.m.len() != params.len() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

/// Loss gradients, shaped like the network's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub complex: Vec<ComplexDense>,
    pub real: [RealDense; 2],
}

impl Gradients {
    /// Same order as the network's parameter list.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.complex {
            out.push(l.w_re.as_slice().expect("standard layout"));
            out.push(l.w_im.as_slice().expect("standard layout"));
            out.push(l.b_re.as_slice().expect("standard layout"));
            out.push(l.b_im.as_slice().expect("standard layout"));
        }
        for l in &self.real {
            out.push(l.w.as_slice().expect("standard layout"));
            out.push(l.b.as_slice().expect("standard layout"));
        }
        out
    }
}

/// `dX += alpha · dYᵀ · H` for weight gradients, `out = dY · W` for inputs.
fn gemm(alpha: f64, a: &ArrayView2<f64>, b: &ArrayView2<f64>, beta: f64, c: &mut Array2<f64>) {
    general_mat_mul(alpha, a, b, beta, c);
}

/// Backpropagates through the complex activation.
fn activation_backward(
    act: Activation,
    zr: &Array2<f64>,
    zi: &Array2<f64>,
    gr: &mut Array2<f64>,
    gi: &mut Array2<f64>,
) {
    match act {
        Activation::SplitCRelu => {
            Zip::from(&mut *gr).and(zr).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
            Zip::from(&mut *gi).and(zi).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
        }
        Activation::ModRelu { bias } => {
            Zip::from(&mut *gr)
                .and(&mut *gi)
                .and(zr)
                .and(zi)
                .for_each(|gr, gi, &x, &y| {
                    let r = x.hypot(y);
                    if r + bias <= 0.0 || r == 0.0 {
                        *gr = 0.0;
                        *gi = 0.0;
                        return;
                    }
                    let s = 1.0 + bias / r;
                    let k = bias / (r * r * r);
                    let (fr, fi) = (*gr, *gi);
                    *gr = fr * (s - k * x * x) - fi * k * x * y;
                    *gi = -fr * k * x * y + fi * (s - k * y * y);
                });
        }
    }
}

/// Mean batch loss and its gradient. `targets` holds one multi-hot row per
/// input row.
pub fn gradients(net: &Network, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<(f64, Gradients)> {
    let batch = inputs.nrows();
    if targets.dim() != (batch, net.vocab_size()) {
        return Err(Error::Dimension {
            what: "target width",
            expected: net.vocab_size(),
            found: targets.ncols(),
        });
    }
    let trace = net.forward_trace(inputs)?;

    let mut d_logits = Array2::zeros(trace.logits.raw_dim());
    let mut total = 0.0;
    for ((logits, target), mut d) in trace
        .logits
        .rows()
        .into_iter()
        .zip(targets.rows())
        .zip(d_logits.rows_mut())
    {
        let hot: f64 = target.sum();
        if hot <= 0.0 {
            return Err(Error::Config("training target has no hot entry".into()));
        }
        let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let log_sum = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        for k in 0..logits.len() {
            let log_p = logits[k] - max - log_sum;
            let q = target[k] / hot;
            total -= q * log_p;
            d[k] = (log_p.exp() - q) / batch as f64;
        }
    }
    let loss = total / batch as f64;

    let [hidden_layer, output_layer] = &net.real;
    let mut out_grad = RealDense::zeros(output_layer.outputs(), output_layer.inputs());
    gemm(1.0, &d_logits.t(), &trace.hidden.view(), 0.0, &mut out_grad.w);
    out_grad.b = d_logits.sum_axis(Axis(0));

    let mut d_hidden = Array2::zeros(trace.hidden.raw_dim());
    gemm(1.0, &d_logits.view(), &output_layer.w.view(), 0.0, &mut d_hidden);
    Zip::from(&mut d_hidden).and(&trace.hidden_pre).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0
        }
    });

    let mut hid_grad = RealDense::zeros(hidden_layer.outputs(), hidden_layer.inputs());
    gemm(1.0, &d_hidden.t(), &trace.bridge.view(), 0.0, &mut hid_grad.w);
    hid_grad.b = d_hidden.sum_axis(Axis(0));

    let mut d_bridge = Array2::zeros(trace.bridge.raw_dim());
    gemm(1.0, &d_hidden.view(), &hidden_layer.w.view(), 0.0, &mut d_bridge);
    let width = d_bridge.ncols() / 2;
    let mut gr = d_bridge.slice(s![.., ..width]).to_owned();
    let mut gi = d_bridge.slice(s![.., width..]).to_owned();

    let mut complex_grads = Vec::with_capacity(net.complex.len());
    for (l, layer) in net.complex.iter().enumerate().rev() {
        let (zr, zi) = &trace.complex_pre[l];
        activation_backward(net.activation, zr, zi, &mut gr, &mut gi);
        let (hr, hi) = &trace.complex_inputs[l];

        let mut g = ComplexDense::zeros(layer.outputs(), layer.inputs());
        gemm(1.0, &gr.t(), &hr.view(), 0.0, &mut g.w_re);
        gemm(1.0, &gi.t(), &hi.view(), 1.0, &mut g.w_re);
        gemm(1.0, &gi.t(), &hr.view(), 0.0, &mut g.w_im);
        gemm(-1.0, &gr.t(), &hi.view(), 1.0, &mut g.w_im);
        g.b_re = gr.sum_axis(Axis(0));
        g.b_im = gi.sum_axis(Axis(0));
        complex_grads.push(g);

        if l > 0 {
            let mut dr = Array2::zeros(hr.raw_dim());
            let mut di = Array2::zeros(hi.raw_dim());
            gemm(1.0, &gr.view(), &layer.w_re.view(), 0.0, &mut dr);
            gemm(1.0, &gi.view(), &layer.w_im.view(), 1.0, &mut dr);
            gemm(1.0, &gi.view(), &layer.w_re.view(), 0.0, &mut di);
            gemm(-1.0, &gr.view(), &layer.w_im.view(), 1.0, &mut di);
            gr = dr;
            gi = di;
        }
    }
    complex_grads.reverse();

    Ok((
        loss,
        Gradients {
            complex: complex_grads,
            real: [hid_grad, out_grad],
        },
    ))
}

/// One optimizer step on a batch; returns the batch loss before the update.
pub fn train_step(net: &mut Network, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
    let (loss, grads) = gradients(net, inputs, targets)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            loss,
            step: net.optimizer.steps() as usize,
        });
    }
    let mut optimizer = std::mem::take(&mut net.optimizer);
    optimizer.update(net.parameters_mut(), grads.slices());
    net.optimizer = optimizer;
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Relabel the qubits of every sample at random each time it is drawn.
    pub relabel_qubits: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 40,
            learning_rate: 1e-3,
            seed: 0,
            relabel_qubits: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    /// Mean loss over the dataset before the first update.
    pub initial_loss: f64,
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean loss over the dataset after the last update.
    pub final_loss: f64,
}

fn batch_arrays(data: &Dataset, indices: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let mut inputs = Array2::zeros((indices.len(), data.input_len()));
    let mut targets = Array2::zeros((indices.len(), data.vocab_size()));
    for (row, &i) in indices.iter().enumerate() {
        inputs.row_mut(row).assign(&ndarray::ArrayView1::from(data.input(i)));
        targets
            .row_mut(row)
            .assign(&Array1::from_iter(data.target(i).iter().map(|&b| b as f64)));
    }
    (inputs, targets)
}

fn relabeled_batch_arrays(
    data: &Dataset,
    indices: &[usize],
    vocab: &GateVocabulary,
    rng: &mut ChaCha8Rng,
) -> (Array2<f64>, Array2<f64>) {
    let mut inputs = Array2::zeros((indices.len(), data.input_len()));
    let mut targets = Array2::zeros((indices.len(), data.vocab_size()));
    let mut hot = vec![0.0; data.vocab_size()];
    for (row, &i) in indices.iter().enumerate() {
        let r = QubitRelabeling::random(vocab, rng);
        r.input_into(data.input(i), inputs.row_mut(row).as_slice_mut().expect("contiguous"));
        hot.iter_mut().zip(data.target(i)).for_each(|(h, &b)| *h = b as f64);
        r.target_into(&hot, targets.row_mut(row).as_slice_mut().expect("contiguous"));
    }
    (inputs, targets)
}

fn check_compatible(net: &Network, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.n_qubits() != net.n_qubits() {
        return Err(Error::Dimension {
            what: "dataset qubit count",
            expected: net.n_qubits(),
            found: data.n_qubits(),
        });
    }
    if data.vocab_size() != net.vocab_size() {
        return Err(Error::Dimension {
            what: "dataset vocabulary size",
            expected: net.vocab_size(),
            found: data.vocab_size(),
        });
    }
    Ok(())
}

/// Mean loss of the network over a dataset.
pub fn mean_loss(net: &Network, data: &Dataset) -> Result<f64> {
    check_compatible(net, data)?;
    let indices: Vec<usize> = (0..data.len()).collect();
    let mut total = 0.0;
    for chunk in indices.chunks(256) {
        let (inputs, targets) = batch_arrays(data, chunk);
        let probs = net.forward_batch(inputs.view())?;
        for (p, i) in probs.rows().into_iter().zip(chunk) {
            total += loss(p.as_slice().expect("contiguous"), data.target(*i));
        }
        drop(targets);
    }
    Ok(total / data.len() as f64)
}

/// Mini-batch training with a per-epoch shuffle. `on_epoch` receives the
/// epoch index and its mean loss.
pub fn train(
    net: &mut Network,
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainLog> {
    check_compatible(net, data)?;
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let initial_loss = mean_loss(net, data)?;
    net.optimizer.learning_rate = cfg.learning_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let vocab = GateVocabulary::new(data.n_qubits(), data.kinds())?;
    if vocab.len() != data.vocab_size() {
        return Err(Error::Dimension {
            what: "dataset vocabulary size",
            expected: vocab.len(),
            found: data.vocab_size(),
        });
    }
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (inputs, targets) = if cfg.relabel_qubits {
                relabeled_batch_arrays(data, chunk, &vocab, &mut rng)
            } else {
                batch_arrays(data, chunk)
            };
            total += train_step(net, inputs.view(), targets.view())? * chunk.len() as f64;
        }
        let mean = total / data.len() as f64;
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    let final_loss = if cfg.epochs == 0 {
        initial_loss
    } else {
        mean_loss(net, data)?
    };
    Ok(TrainLog {
        initial_loss,
        epoch_losses,
        final_loss,
    })
}
