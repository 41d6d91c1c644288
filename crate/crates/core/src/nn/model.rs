use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{flatten_channels, relu_backward, relu_forward, unflatten_channels, Conv1d, Dense};
use super::{Scalar, Tensor};
use crate::rng::{derive_seed, stream};
use crate::{DatasetRecord, Error, Result, SignalWindow};

/// Hyper-parameters of the denoise+regress network.
///
/// Denoiser: `denoise_channels.len()` blocks of (conv, ReLU), flatten, an
/// optional dense (`denoise_hidden`) + ReLU layer, then a linear dense
/// projection back to `input_len` samples (the clean-signal estimate).
/// Regressor: conv (`head_channels`) + ReLU, flatten, dense (`hidden`) +
/// ReLU, dense (1).
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    /// Window length.
    pub input_len: usize,
    /// Convolution kernel width (odd).
    pub kernel: usize,
    /// Output channels of each denoising block.
    pub denoise_channels: Vec<usize>,
    /// Width of the denoiser's hidden dense layer; 0 projects the conv
    /// features straight to the output.
    pub denoise_hidden: usize,
    /// Channels of the regressor convolution.
    pub head_channels: usize,
    /// Width of the regressor hidden layer.
    pub hidden: usize,
    /// Frequency mapped to normalized 0, Hz.
    pub freq_offset_hz: f64,
    /// Frequency span mapped to normalized 1, Hz.
    pub freq_scale_hz: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_len: 50,
            kernel: 5,
            denoise_channels: vec![16, 32, 32],
            denoise_hidden: 256,
            head_channels: 16,
            hidden: 64,
            freq_offset_hz: 100.0,
            freq_scale_hz: 400.0,
        }
    }
}

impl Architecture {
    /// Checks the sizes are usable.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(String::from(msg)));
        if self.input_len == 0 {
            return bad("input_len must be positive");
        }
        if self.kernel % 2 == 0 {
            return bad("kernel width must be odd");
        }
        if self.denoise_channels.is_empty() || self.denoise_channels.contains(&0) {
            return bad("denoiser needs at least one block with non-zero channels");
        }
        if self.head_channels == 0 || self.hidden == 0 {
            return bad("regressor widths must be positive");
        }
        if !(self.freq_scale_hz.is_finite() && self.freq_scale_hz > 0.0 && self.freq_offset_hz.is_finite()) {
            return bad("frequency normalization must be finite with positive scale");
        }
        Ok(())
    }

    fn denoise_convs(&self) -> Vec<Conv1d> {
        let mut in_channels = 1;
        self.denoise_channels
            .iter()
            .map(|&out| {
                let c = Conv1d { in_channels, out_channels: out, kernel: self.kernel };
                in_channels = out;
                c
            })
            .collect()
    }

    fn flat_len(&self) -> usize {
        self.denoise_channels[self.denoise_channels.len() - 1] * self.input_len
    }

    fn denoise_hidden_layer(&self) -> Option<Dense> {
        (self.denoise_hidden > 0).then(|| Dense { inputs: self.flat_len(), outputs: self.denoise_hidden })
    }

    fn denoise_dense(&self) -> Dense {
        let inputs = if self.denoise_hidden > 0 { self.denoise_hidden } else { self.flat_len() };
        Dense { inputs, outputs: self.input_len }
    }

    /// Index of the first regressor tensor (`head.conv.weight`).
    fn head_base(&self) -> usize {
        2 * self.denoise_channels.len() + if self.denoise_hidden > 0 { 4 } else { 2 }
    }

    fn head_conv(&self) -> Conv1d {
        Conv1d { in_channels: 1, out_channels: self.head_channels, kernel: self.kernel }
    }

    fn head_hidden(&self) -> Dense {
        Dense { inputs: self.head_channels * self.input_len, outputs: self.hidden }
    }

    fn head_out(&self) -> Dense {
        Dense { inputs: self.hidden, outputs: 1 }
    }

    /// Names, shapes and fan-in of every parameter tensor, in storage order.
    pub fn parameter_layout(&self) -> Vec<(String, Vec<usize>, usize)> {
        let mut out = Vec::new();
        let conv = |name: &str, c: Conv1d, out: &mut Vec<(String, Vec<usize>, usize)>| {
            let fan_in = c.in_channels * c.kernel;
            out.push((format!("{name}.weight"), vec![c.out_channels, c.in_channels, c.kernel], fan_in));
            out.push((format!("{name}.bias"), vec![c.out_channels], fan_in));
        };
        for (i, c) in self.denoise_convs().into_iter().enumerate() {
            conv(&format!("denoise.conv{i}"), c, &mut out);
        }
        let dense = |name: &str, d: Dense, out: &mut Vec<(String, Vec<usize>, usize)>| {
            out.push((format!("{name}.weight"), vec![d.outputs, d.inputs], d.inputs));
            out.push((format!("{name}.bias"), vec![d.outputs], d.inputs));
        };
        if let Some(d) = self.denoise_hidden_layer() {
            dense("denoise.hidden", d, &mut out);
        }
        dense("denoise.project", self.denoise_dense(), &mut out);
        conv("head.conv", self.head_conv(), &mut out);
        dense("head.hidden", self.head_hidden(), &mut out);
        dense("head.out", self.head_out(), &mut out);
        out
    }

    /// Maps Hz to the network's normalized frequency.
    pub fn normalize_frequency(&self, frequency_hz: f64) -> f64 {
        (frequency_hz - self.freq_offset_hz) / self.freq_scale_hz
    }

    /// Inverse of [`Architecture::normalize_frequency`].
    pub fn denormalize_frequency(&self, normalized: f64) -> f64 {
        self.freq_offset_hz + self.freq_scale_hz * normalized
    }
}

/// Relative weights of the clean-signal and frequency loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Weight of the clean-signal MSE.
    pub w_clean: f64,
    /// Weight of the squared normalized-frequency error.
    pub w_freq: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w_clean: 1.0, w_freq: 1.0 }
    }
}

impl LossWeights {
    /// Both weights non-negative and not both zero.
    pub fn validate(&self) -> Result<()> {
        let ok = self.w_clean >= 0.0 && self.w_freq >= 0.0 && (self.w_clean > 0.0 || self.w_freq > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid loss weights ({}, {})", self.w_clean, self.w_freq)))
        }
    }
}

/// `w_clean * MSE(clean_hat, clean) + w_freq * (freq_hat - freq)²` for one window.
pub fn loss(clean_hat: &[f64], clean: &[f64], freq_hat_norm: f64, freq_norm: f64, weights: LossWeights) -> Result<f64> {
    if clean_hat.len() != clean.len() || clean.is_empty() {
        return Err(Error::Shape { expected: vec![clean.len()], actual: vec![clean_hat.len()] });
    }
    let mse = clean_hat.iter().zip(clean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / clean.len() as f64;
    let df = freq_hat_norm - freq_norm;
    Ok(weights.w_clean * mse + weights.w_freq * df * df)
}

/// Network output for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Estimated clean signal.
    pub clean: SignalWindow,
    /// Normalized frequency estimate.
    pub freq_norm: f64,
    /// Frequency estimate, Hz.
    pub frequency_hz: f64,
}

/// Training mini-batch in network layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    /// Raw noisy windows, `[batch][len]`.
    pub inputs: Vec<T>,
    /// Clean targets, `[batch][len]`.
    pub clean: Vec<T>,
    /// Normalized frequency targets.
    pub freq_norm: Vec<T>,
}

impl<T: Scalar> Batch<T> {
    /// Batch size.
    pub fn len(&self) -> usize {
        self.freq_norm.len()
    }

    /// True for an empty batch.
    pub fn is_empty(&self) -> bool {
        self.freq_norm.is_empty()
    }

    /// Packs `records` for a network with architecture `arch`.
    pub fn from_records<'a, I>(records: I, arch: &Architecture) -> Result<Self>
    where
        I: IntoIterator<Item = &'a DatasetRecord>,
    {
        let mut batch = Batch { inputs: Vec::new(), clean: Vec::new(), freq_norm: Vec::new() };
        for r in records {
            if r.noisy.len() != arch.input_len || r.clean.len() != arch.input_len {
                return Err(Error::Shape { expected: vec![arch.input_len], actual: vec![r.noisy.len()] });
            }
            batch.inputs.extend(r.noisy.samples().iter().map(|&v| T::of(v)));
            batch.clean.extend(r.clean.samples().iter().map(|&v| T::of(v)));
            batch.freq_norm.push(T::of(arch.normalize_frequency(r.frequency_hz)));
        }
        Ok(batch)
    }
}

/// Batch loss split into its two terms (each already weighted).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    /// Weighted clean-signal term.
    pub clean: f64,
    /// Weighted frequency term.
    pub freq: f64,
}

impl LossBreakdown {
    /// Sum of both terms.
    pub fn total(&self) -> f64 {
        self.clean + self.freq
    }
}

/// Intermediate activations of a forward pass, kept for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace<T> {
    batch: usize,
    input: Vec<T>,
    denoise_cols: Vec<Vec<T>>,
    denoise_out: Vec<Vec<T>>,
    denoise_flat: Vec<T>,
    denoise_hidden: Vec<T>,
    /// Clean-signal estimate, `[batch][len]`.
    pub clean: Vec<T>,
    head_cols: Vec<T>,
    head_conv_out: Vec<T>,
    head_flat: Vec<T>,
    hidden: Vec<T>,
    /// Normalized frequency estimates.
    pub freq: Vec<T>,
}

/// Reusable buffers of the backward pass.
#[derive(Debug, Clone, Default)]
pub struct BackwardScratch<T> {
    d_hidden: Vec<T>,
    d_flat: Vec<T>,
    d_clean: Vec<T>,
    d_denoise_hidden: Vec<T>,
    dy: Vec<T>,
    dx: Vec<T>,
    dcols: Vec<T>,
}

/// Buffers for repeated training steps.
#[derive(Debug, Clone, Default)]
pub struct Workspace<T> {
    trace: ForwardTrace<T>,
    scratch: BackwardScratch<T>,
    /// Gradient of the last [`Model::loss_and_gradients_into`] call.
    pub grads: Option<Gradients<T>>,
}

/// Gradients of every parameter tensor, in the model's storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    /// One tensor per parameter.
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Whether every component is finite.
    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

/// The denoise+regress network: an architecture plus named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    arch: Architecture,
    names: Vec<String>,
    params: Vec<Tensor<T>>,
}

impl<T: Scalar> Model<T> {
    /// Fan-in scaled uniform initialization `U(-1/√fan_in, 1/√fan_in)`;
    /// parameter `i` draws from stream `derive_seed(seed, i)`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut names = Vec::new();
        let mut params = Vec::new();
        for (i, (name, shape, fan_in)) in arch.parameter_layout().into_iter().enumerate() {
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            let mut rng = stream(derive_seed(seed, i as u64));
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| T::of(bound * (2.0 * rng.random::<f64>() - 1.0))).collect();
            names.push(name);
            params.push(Tensor::from_vec(&shape, data)?);
        }
        Ok(Self { arch, names, params })
    }

    /// Model with every parameter set to zero.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let (names, params) =
            arch.parameter_layout().into_iter().map(|(name, shape, _)| (name, Tensor::zeros(&shape))).unzip();
        Ok(Self { arch, names, params })
    }

    /// Assembles a model from named tensors, which must match the
    /// architecture's layout exactly (names, order and shapes).
    pub fn from_parts(arch: Architecture, tensors: Vec<(String, Tensor<T>)>) -> Result<Self> {
        arch.validate()?;
        let layout = arch.parameter_layout();
        if layout.len() != tensors.len() {
            return Err(Error::Config(format!("expected {} tensors, got {}", layout.len(), tensors.len())));
        }
        let mut names = Vec::with_capacity(tensors.len());
        let mut params = Vec::with_capacity(tensors.len());
        for ((name, shape, _), (got_name, tensor)) in layout.into_iter().zip(tensors) {
            if name != got_name {
                return Err(Error::Config(format!("expected tensor {name}, found {got_name}")));
            }
            if tensor.shape() != shape.as_slice() {
                return Err(Error::Shape { expected: shape, actual: tensor.shape().to_vec() });
            }
            names.push(name);
            params.push(tensor);
        }
        Ok(Self { arch, names, params })
    }

    /// Architecture.
    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    /// Parameter tensors in storage order.
    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    /// Mutable parameter tensors in storage order.
    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    /// `(name, tensor)` pairs in storage order.
    pub fn named_params(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.params)
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Same model with parameters converted to `U`.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model { arch: self.arch.clone(), names: self.names.clone(), params: self.params.iter().map(Tensor::cast).collect() }
    }

    fn p(&self, i: usize) -> &[T] {
        self.params[i].data()
    }

    /// Per-window mean removal and division by the (population) standard
    /// deviation; constant windows map to zeros.
    fn standardize(&self, inputs: &[T], out: &mut Vec<T>) {
        let len = self.arch.input_len;
        out.clear();
        out.reserve(inputs.len());
        let n = T::of(len as f64);
        for w in inputs.chunks_exact(len) {
            let mean = w.iter().copied().sum::<T>() / n;
            let var = w.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let std = var.sqrt();
            if std > T::of(1e-12) * mean.abs().max(T::one()) {
                out.extend(w.iter().map(|&v| (v - mean) / std));
            } else {
                out.extend(core::iter::repeat(T::zero()).take(len));
            }
        }
    }

    /// Forward pass over `batch` raw windows laid out `[batch][len]`.
    pub fn forward_trace(&self, inputs: &[T], batch: usize) -> Result<ForwardTrace<T>> {
        let mut trace = ForwardTrace::default();
        self.forward_into(inputs, batch, &mut trace)?;
        Ok(trace)
    }

    /// Forward pass reusing the buffers of `trace`.
    pub fn forward_into(&self, inputs: &[T], batch: usize, trace: &mut ForwardTrace<T>) -> Result<()> {
        let len = self.arch.input_len;
        if inputs.len() != batch * len {
            return Err(Error::Shape { expected: vec![batch, len], actual: vec![inputs.len()] });
        }
        let convs = self.arch.denoise_convs();
        trace.batch = batch;
        trace.denoise_cols.resize_with(convs.len(), Vec::new);
        trace.denoise_out.resize_with(convs.len(), Vec::new);
        // [batch][len] with one channel is already [1][batch][len]
        self.standardize(inputs, &mut trace.input);
        for (i, conv) in convs.iter().enumerate() {
            let (done, rest) = trace.denoise_out.split_at_mut(i);
            let x = if i == 0 { &trace.input } else { &done[i - 1] };
            let y = &mut rest[0];
            conv.forward(self.p(2 * i), self.p(2 * i + 1), x, batch, len, &mut trace.denoise_cols[i], y);
            relu_forward(y);
        }
        let mut k = 2 * convs.len();
        let last_channels = convs[convs.len() - 1].out_channels;
        flatten_channels(&trace.denoise_out[convs.len() - 1], last_channels, batch, len, &mut trace.denoise_flat);
        let features = match self.arch.denoise_hidden_layer() {
            Some(d) => {
                d.forward(self.p(k), self.p(k + 1), &trace.denoise_flat, batch, &mut trace.denoise_hidden);
                relu_forward(&mut trace.denoise_hidden);
                k += 2;
                &trace.denoise_hidden
            }
            None => &trace.denoise_flat,
        };
        self.arch.denoise_dense().forward(self.p(k), self.p(k + 1), features, batch, &mut trace.clean);
        let k = self.arch.head_base() - 2;

        let head = self.arch.head_conv();
        head.forward(self.p(k + 2), self.p(k + 3), &trace.clean, batch, len, &mut trace.head_cols, &mut trace.head_conv_out);
        relu_forward(&mut trace.head_conv_out);
        flatten_channels(&trace.head_conv_out, head.out_channels, batch, len, &mut trace.head_flat);
        self.arch.head_hidden().forward(self.p(k + 4), self.p(k + 5), &trace.head_flat, batch, &mut trace.hidden);
        relu_forward(&mut trace.hidden);
        self.arch.head_out().forward(self.p(k + 6), self.p(k + 7), &trace.hidden, batch, &mut trace.freq);
        Ok(())
    }

    /// Backpropagates `d_clean` (`[batch][len]`) and `d_freq` (`[batch]`)
    /// through a recorded forward pass.
    pub fn backward(&self, trace: &ForwardTrace<T>, d_clean: &[T], d_freq: &[T]) -> Result<Gradients<T>> {
        let mut grads = Gradients { tensors: self.params.iter().map(|p| Tensor::zeros(p.shape())).collect() };
        self.backward_into(trace, d_clean, d_freq, &mut BackwardScratch::default(), &mut grads)?;
        Ok(grads)
    }

    /// Backward pass writing into `grads`, which must have the parameter
    /// shapes; every gradient element is overwritten.
    pub fn backward_into(
        &self,
        trace: &ForwardTrace<T>,
        d_clean: &[T],
        d_freq: &[T],
        s: &mut BackwardScratch<T>,
        grads: &mut Gradients<T>,
    ) -> Result<()> {
        let batch = trace.batch;
        let len = self.arch.input_len;
        if d_clean.len() != batch * len || d_freq.len() != batch {
            return Err(Error::Shape { expected: vec![batch * len, batch], actual: vec![d_clean.len(), d_freq.len()] });
        }
        let same_shapes = grads.tensors.len() == self.params.len()
            && grads.tensors.iter().zip(&self.params).all(|(g, p)| g.shape() == p.shape());
        if !same_shapes {
            return Err(Error::Shape { expected: vec![self.params.len()], actual: vec![grads.tensors.len()] });
        }
        let grads = &mut grads.tensors;
        let convs = self.arch.denoise_convs();
        let k = self.arch.head_base() - 2;

        {
            let (gw, gb) = pair_mut(grads, k + 6);
            self.arch.head_out().backward(self.p(k + 6), &trace.hidden, d_freq, batch, gw, gb, Some(&mut s.d_hidden));
        }
        relu_backward(&trace.hidden, &mut s.d_hidden);
        {
            let (gw, gb) = pair_mut(grads, k + 4);
            self.arch.head_hidden().backward(self.p(k + 4), &trace.head_flat, &s.d_hidden, batch, gw, gb, Some(&mut s.d_flat));
        }
        let head = self.arch.head_conv();
        unflatten_channels(&s.d_flat, head.out_channels, batch, len, &mut s.dy);
        relu_backward(&trace.head_conv_out, &mut s.dy);
        {
            let (gw, gb) = pair_mut(grads, k + 2);
            head.backward(self.p(k + 2), &trace.head_cols, &s.dy, batch, len, gw, gb, &mut s.dcols, Some(&mut s.d_clean));
        }
        for (a, &b) in s.d_clean.iter_mut().zip(d_clean) {
            *a = *a + b;
        }
        let (gw, gb) = pair_mut(grads, k);
        match self.arch.denoise_hidden_layer() {
            Some(d) => {
                let dense = self.arch.denoise_dense();
                dense.backward(self.p(k), &trace.denoise_hidden, &s.d_clean, batch, gw, gb, Some(&mut s.d_denoise_hidden));
                relu_backward(&trace.denoise_hidden, &mut s.d_denoise_hidden);
                let (gw, gb) = pair_mut(grads, k - 2);
                d.backward(self.p(k - 2), &trace.denoise_flat, &s.d_denoise_hidden, batch, gw, gb, Some(&mut s.d_flat));
            }
            None => {
                self.arch.denoise_dense().backward(self.p(k), &trace.denoise_flat, &s.d_clean, batch, gw, gb, Some(&mut s.d_flat));
            }
        }
        unflatten_channels(&s.d_flat, convs[convs.len() - 1].out_channels, batch, len, &mut s.dy);
        for (i, conv) in convs.iter().enumerate().rev() {
            relu_backward(&trace.denoise_out[i], &mut s.dy);
            let (gw, gb) = pair_mut(grads, 2 * i);
            let dx = if i > 0 { Some(&mut s.dx) } else { None };
            conv.backward(self.p(2 * i), &trace.denoise_cols[i], &s.dy, batch, len, gw, gb, &mut s.dcols, dx);
            core::mem::swap(&mut s.dy, &mut s.dx);
        }
        Ok(())
    }

    /// Mean batch loss and its gradient.
    pub fn loss_and_gradients(&self, batch: &Batch<T>, weights: LossWeights) -> Result<(LossBreakdown, Gradients<T>)> {
        let mut ws = Workspace::default();
        let loss = self.loss_and_gradients_into(batch, weights, &mut ws)?;
        Ok((loss, ws.grads.take().expect("gradients were computed")))
    }

    /// Mean batch loss; the gradient is left in `ws.grads`. Buffers in `ws`
    /// are reused across calls.
    pub fn loss_and_gradients_into(&self, batch: &Batch<T>, weights: LossWeights, ws: &mut Workspace<T>) -> Result<LossBreakdown> {
        self.forward_into(&batch.inputs, batch.len(), &mut ws.trace)?;
        let (breakdown, d_clean, d_freq) = self.loss_terms(&ws.trace, batch, weights, true)?;
        let grads = ws.grads.get_or_insert_with(|| Gradients {
            tensors: self.params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        });
        self.backward_into(&ws.trace, &d_clean, &d_freq, &mut ws.scratch, grads)?;
        Ok(breakdown)
    }

    /// Mean batch loss without gradients.
    pub fn batch_loss(&self, batch: &Batch<T>, weights: LossWeights) -> Result<LossBreakdown> {
        let trace = self.forward_trace(&batch.inputs, batch.len())?;
        Ok(self.loss_terms(&trace, batch, weights, false)?.0)
    }

    fn loss_terms(
        &self,
        trace: &ForwardTrace<T>,
        batch: &Batch<T>,
        weights: LossWeights,
        want_grad: bool,
    ) -> Result<(LossBreakdown, Vec<T>, Vec<T>)> {
        weights.validate()?;
        let n = batch.len();
        let len = self.arch.input_len;
        if batch.clean.len() != n * len || n == 0 {
            return Err(Error::Shape { expected: vec![n * len], actual: vec![batch.clean.len()] });
        }
        let mut clean_sse = 0.0;
        let mut freq_sse = 0.0;
        let (mut d_clean, mut d_freq) = (Vec::new(), Vec::new());
        let scale_c = 2.0 * weights.w_clean / (n * len) as f64;
        let scale_f = 2.0 * weights.w_freq / n as f64;
        for (a, b) in trace.clean.iter().zip(&batch.clean) {
            let e = (*a - *b).f64();
            clean_sse += e * e;
            if want_grad {
                d_clean.push(T::of(scale_c * e));
            }
        }
        for (a, b) in trace.freq.iter().zip(&batch.freq_norm) {
            let e = (*a - *b).f64();
            freq_sse += e * e;
            if want_grad {
                d_freq.push(T::of(scale_f * e));
            }
        }
        let breakdown = LossBreakdown {
            clean: weights.w_clean * clean_sse / (n * len) as f64,
            freq: weights.w_freq * freq_sse / n as f64,
        };
        Ok((breakdown, d_clean, d_freq))
    }

    /// Clean-signal and normalized-frequency estimates for `batch` raw
    /// windows laid out `[batch][len]`.
    pub fn predict_batch(&self, inputs: &[T], batch: usize) -> Result<(Vec<T>, Vec<T>)> {
        let trace = self.forward_trace(inputs, batch)?;
        Ok((trace.clean, trace.freq))
    }

    /// Runs the network on a single window.
    pub fn forward(&self, noisy: &SignalWindow) -> Result<Prediction> {
        if noisy.len() != self.arch.input_len {
            return Err(Error::Shape { expected: vec![self.arch.input_len], actual: vec![noisy.len()] });
        }
        let inputs: Vec<T> = noisy.samples().iter().map(|&v| T::of(v)).collect();
        let (clean, freq) = self.predict_batch(&inputs, 1)?;
        let freq_norm = freq[0].f64();
        Ok(Prediction {
            clean: SignalWindow::new(clean.iter().map(|v| v.f64()).collect(), noisy.sample_rate_hz())?,
            freq_norm,
            frequency_hz: self.arch.denormalize_frequency(freq_norm),
        })
    }
}

fn pair_mut<T: Scalar>(grads: &mut [Tensor<T>], i: usize) -> (&mut [T], &mut [T]) {
    let (a, b) = grads.split_at_mut(i + 1);
    (a[i].data_mut(), b[0].data_mut())
}
