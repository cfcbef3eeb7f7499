//! Float reference network: forward pass, backpropagation, and plain SGD.
//!
//! This is the network that gets trained; its weights are later mapped onto
//! the spiking engine. The conv/fc accumulation order here (bias first, then
//! taps in channel -> kernel-row -> kernel-column order) is load-bearing: the
//! spiking layers replay the same order so that on 0/1 inputs the two paths
//! produce bit-identical sums.

use ndarray::{Array1, Array3};
use serde::{Deserialize, Serialize};

use crate::complexity::OpTally;
use crate::error::{Error, Result};
use crate::network::{Layer, NetworkSpec, Orientation};
use crate::rng::{self, NormalSampler};
use crate::scalar::Scalar;
use crate::weights::{LayerWeights, WeightContainer};

/// One convolution pass. `weights` is `[c_out, c_in, kernel_h, kernel_w]`
/// row-major, `biases` is `[c_out]`; sliding-window cross-correlation with
/// the same stride along both spatial axes, no padding.
pub fn conv1d_forward<S: Scalar>(
    input: &Array3<S>,
    weights: &[S],
    biases: &[S],
    kernel_h: usize,
    kernel_w: usize,
    stride: usize,
    mut tally: Option<(&mut OpTally, usize)>,
) -> Array3<S> {
    let (c_in, h, w) = input.dim();
    let c_out = biases.len();
    let (oh, ow) = ((h - kernel_h) / stride + 1, (w - kernel_w) / stride + 1);
    let mut out = Array3::zeros((c_out, oh, ow));
    for co in 0..c_out {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = biases[co];
                for ci in 0..c_in {
                    for dh in 0..kernel_h {
                        for dw in 0..kernel_w {
                            let wv = weights[((co * c_in + ci) * kernel_h + dh) * kernel_w + dw];
                            acc += wv * input[[ci, y * stride + dh, x * stride + dw]];
                        }
                    }
                }
                out[[co, y, x]] = acc;
            }
        }
    }
    if let Some((tally, layer)) = tally.take() {
        let slots = (c_out * oh * ow * c_in * kernel_h * kernel_w) as u64;
        tally.mul(layer, slots);
        tally.add(layer, slots);
    }
    out
}

/// Non-overlapping max pooling along one axis; trailing elements that do not
/// fill a window are dropped.
pub fn maxpool1d_forward<S: Scalar>(
    input: &Array3<S>,
    window: usize,
    orientation: Orientation,
    mut tally: Option<(&mut OpTally, usize)>,
) -> Array3<S> {
    let (c, h, w) = input.dim();
    let (oh, ow) = match orientation {
        Orientation::Height => (h / window, w),
        Orientation::Width => (h, w / window),
    };
    let mut out = Array3::zeros((c, oh, ow));
    for ci in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let mut best = pool_source(input, ci, y, x, 0, window, orientation);
                for k in 1..window {
                    let v = pool_source(input, ci, y, x, k, window, orientation);
                    if v > best {
                        best = v;
                    }
                }
                out[[ci, y, x]] = best;
            }
        }
    }
    if let Some((tally, layer)) = tally.take() {
        tally.add(layer, (c * oh * ow * (window - 1)) as u64);
    }
    out
}

fn pool_source<S: Scalar>(
    input: &Array3<S>,
    c: usize,
    y: usize,
    x: usize,
    k: usize,
    window: usize,
    orientation: Orientation,
) -> S {
    match orientation {
        Orientation::Height => input[[c, y * window + k, x]],
        Orientation::Width => input[[c, y, x * window + k]],
    }
}

pub fn relu_forward<S: Scalar>(input: &Array3<S>) -> Array3<S> {
    input.mapv(|v| if v > S::zero() { v } else { S::zero() })
}

/// Dense layer on the row-major flattening of `input`; `weights` is
/// `[out_dim, in_dim]` row-major.
pub fn fc_forward<S: Scalar>(
    input: &Array3<S>,
    weights: &[S],
    biases: &[S],
    mut tally: Option<(&mut OpTally, usize)>,
) -> Array1<S> {
    let flat: Vec<S> = input.iter().copied().collect();
    let out_dim = biases.len();
    let in_dim = flat.len();
    let mut out = Array1::zeros(out_dim);
    for o in 0..out_dim {
        let mut acc = biases[o];
        for (i, &x) in flat.iter().enumerate() {
            acc += weights[o * in_dim + i] * x;
        }
        out[o] = acc;
    }
    if let Some((tally, layer)) = tally.take() {
        let slots = (out_dim * in_dim) as u64;
        tally.mul(layer, slots);
        tally.add(layer, slots);
    }
    out
}

/// Index of the largest logit; the first index wins ties.
pub fn argmax<S: Scalar>(logits: &Array1<S>) -> usize {
    let mut best = 0;
    for i in 1..logits.len() {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax cross-entropy. Returns the loss and the
/// gradient with respect to the logits (`softmax - onehot(label)`).
fn softmax_cross_entropy<S: Scalar>(logits: &Array1<S>, label: usize) -> (f64, Array1<S>) {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v.as_f64()));
    let shifted: Vec<f64> = logits.iter().map(|&v| v.as_f64() - max).collect();
    let exps: Vec<f64> = shifted.iter().map(|&v| crate::detmath::exp(v)).collect();
    let sum: f64 = exps.iter().sum();
    let loss = crate::detmath::ln(sum) - shifted[label];
    let mut grad = Array1::zeros(logits.len());
    for i in 0..logits.len() {
        let p = exps[i] / sum;
        grad[i] = S::of(if i == label { p - 1.0 } else { p });
    }
    (loss, grad)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.05, epochs: 20, batch_size: 16, seed: 42 }
    }
}

/// A topology plus a matching set of weights.
#[derive(Clone, Debug)]
pub struct Cnn<S> {
    pub spec: NetworkSpec,
    pub weights: WeightContainer<S>,
}

/// Intermediate activations from a forward pass, input included, with
/// fully-connected outputs carried as `[n, 1, 1]` tensors.
struct ForwardCache<S> {
    tensors: Vec<Array3<S>>,
}

impl<S: Scalar> Cnn<S> {
    pub fn new(spec: NetworkSpec, weights: WeightContainer<S>) -> Result<Self> {
        weights.check_against(&spec)?;
        Ok(Cnn { spec, weights })
    }

    /// Fresh network with He-initialized weights and zero biases, drawn from
    /// the component stream of `seed`.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut sampler = NormalSampler::new(rng::seeded(seed));
        let mut layers = Vec::new();
        for (index, layer) in spec.layers.iter().enumerate() {
            let (dims, fan_in) = match *layer {
                Layer::Conv1d { kernel_h, kernel_w, c_in, c_out, .. } => {
                    (vec![c_out, c_in, kernel_h, kernel_w], c_in * kernel_h * kernel_w)
                }
                Layer::FullyConnected { in_dim, out_dim } => (vec![out_dim, in_dim], in_dim),
                _ => continue,
            };
            let std = S::of((2.0 / fan_in as f64).sqrt());
            let n: usize = dims.iter().product();
            let weights = (0..n).map(|_| S::of(sampler.next()) * std).collect();
            let biases = vec![S::zero(); dims[0]];
            layers.push(LayerWeights { layer_index: index, dims, weights, biases });
        }
        let weights = WeightContainer { fingerprint: spec.fingerprint(), layers };
        Cnn::new(spec, weights)
    }

    fn layer_weights(&self, index: usize) -> &LayerWeights<S> {
        self.weights
            .layers
            .iter()
            .find(|l| l.layer_index == index)
            .expect("weights were validated against the spec")
    }

    fn check_input(&self, input: &Array3<S>) -> Result<()> {
        let [c, h, w] = self.spec.input_shape;
        if input.dim() != (c, h, w) {
            return Err(Error::shape(format!(
                "input shape {:?} does not match the network input [{c}, {h}, {w}]",
                input.dim()
            )));
        }
        Ok(())
    }

    fn forward_cache(&self, input: &Array3<S>, mut tally: Option<&mut OpTally>) -> ForwardCache<S> {
        let mut tensors = vec![input.clone()];
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let x = tensors.last().unwrap();
            let t = tally.as_deref_mut().map(|t| (t, i));
            let next = match *layer {
                Layer::Conv1d { kernel_h, kernel_w, stride, .. } => {
                    let lw = self.layer_weights(i);
                    conv1d_forward(x, &lw.weights, &lw.biases, kernel_h, kernel_w, stride, t)
                }
                Layer::MaxPool1d { window, orientation } => {
                    maxpool1d_forward(x, window, orientation, t)
                }
                Layer::Relu => relu_forward(x),
                Layer::FullyConnected { out_dim, .. } => {
                    let lw = self.layer_weights(i);
                    let y = fc_forward(x, &lw.weights, &lw.biases, t);
                    Array3::from_shape_vec((out_dim, 1, 1), y.to_vec()).unwrap()
                }
            };
            tensors.push(next);
        }
        ForwardCache { tensors }
    }

    /// Class logits for one input.
    pub fn forward(&self, input: &Array3<S>) -> Result<Array1<S>> {
        self.check_input(input)?;
        let cache = self.forward_cache(input, None);
        Ok(flatten(cache.tensors.last().unwrap()))
    }

    /// Forward pass that also counts datapath operations into `tally`, which
    /// must have one slot per layer of this spec.
    pub fn forward_traced(&self, input: &Array3<S>, tally: &mut OpTally) -> Result<Array1<S>> {
        self.check_input(input)?;
        let cache = self.forward_cache(input, Some(tally));
        Ok(flatten(cache.tensors.last().unwrap()))
    }

    /// Predicted class index (first index wins ties).
    pub fn predict(&self, input: &Array3<S>) -> Result<usize> {
        Ok(argmax(&self.forward(input)?))
    }

    /// Softmax cross-entropy loss and its weight/bias gradients for one
    /// labeled sample. The entries parallel the weight container's layers,
    /// gradient dims matching the weights they belong to.
    pub fn loss_gradients(
        &self,
        input: &Array3<S>,
        label: usize,
    ) -> Result<(f64, Vec<LayerWeights<S>>)> {
        self.check_input(input)?;
        let classes = self.spec.output_shape()?[0];
        if label >= classes {
            return Err(Error::invalid_input(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let cache = self.forward_cache(input, None);
        Ok(self.backward(&cache, label))
    }

    /// Loss and weight gradients for one labeled sample.
    fn backward(&self, cache: &ForwardCache<S>, label: usize) -> (f64, Vec<LayerWeights<S>>) {
        let logits = flatten(cache.tensors.last().unwrap());
        let (loss, dlogits) = softmax_cross_entropy(&logits, label);
        let mut grads: Vec<LayerWeights<S>> = Vec::new();
        // dY for the layer currently being walked, shaped like its output.
        let mut dy = Array3::from_shape_vec(
            cache.tensors.last().unwrap().dim(),
            dlogits.to_vec(),
        )
        .unwrap();

        for (i, layer) in self.spec.layers.iter().enumerate().rev() {
            let x = &cache.tensors[i];
            dy = match *layer {
                Layer::Conv1d { kernel_h, kernel_w, stride, .. } => {
                    let lw = self.layer_weights(i);
                    let (dw, db, dx) =
                        conv_backward(x, &dy, &lw.weights, kernel_h, kernel_w, stride);
                    grads.push(LayerWeights {
                        layer_index: i,
                        dims: lw.dims.clone(),
                        weights: dw,
                        biases: db,
                    });
                    dx
                }
                Layer::MaxPool1d { window, orientation } => {
                    pool_backward(x, &dy, window, orientation)
                }
                Layer::Relu => {
                    let y = &cache.tensors[i + 1];
                    let mut dx = dy;
                    dx.zip_mut_with(y, |g, &v| {
                        if v <= S::zero() {
                            *g = S::zero();
                        }
                    });
                    dx
                }
                Layer::FullyConnected { in_dim, out_dim } => {
                    let lw = self.layer_weights(i);
                    let flat: Vec<S> = x.iter().copied().collect();
                    let dyv: Vec<S> = dy.iter().copied().collect();
                    let mut dw = vec![S::zero(); out_dim * in_dim];
                    let mut dx = vec![S::zero(); in_dim];
                    for o in 0..out_dim {
                        for i2 in 0..in_dim {
                            dw[o * in_dim + i2] = dyv[o] * flat[i2];
                            dx[i2] += lw.weights[o * in_dim + i2] * dyv[o];
                        }
                    }
                    grads.push(LayerWeights {
                        layer_index: i,
                        dims: lw.dims.clone(),
                        weights: dw,
                        biases: dyv,
                    });
                    Array3::from_shape_vec(x.dim(), dx).unwrap()
                }
            };
        }
        grads.reverse();
        (loss, grads)
    }
}

fn flatten<S: Scalar>(t: &Array3<S>) -> Array1<S> {
    Array1::from_iter(t.iter().copied())
}

fn conv_backward<S: Scalar>(
    x: &Array3<S>,
    dy: &Array3<S>,
    weights: &[S],
    kernel_h: usize,
    kernel_w: usize,
    stride: usize,
) -> (Vec<S>, Vec<S>, Array3<S>) {
    let (c_in, _, _) = x.dim();
    let (c_out, oh, ow) = dy.dim();
    let mut dw = vec![S::zero(); c_out * c_in * kernel_h * kernel_w];
    let mut db = vec![S::zero(); c_out];
    let mut dx = Array3::zeros(x.dim());
    for co in 0..c_out {
        for y in 0..oh {
            for xo in 0..ow {
                let g = dy[[co, y, xo]];
                db[co] += g;
                for ci in 0..c_in {
                    for dh in 0..kernel_h {
                        for dwi in 0..kernel_w {
                            let wi = ((co * c_in + ci) * kernel_h + dh) * kernel_w + dwi;
                            dw[wi] += g * x[[ci, y * stride + dh, xo * stride + dwi]];
                            dx[[ci, y * stride + dh, xo * stride + dwi]] += weights[wi] * g;
                        }
                    }
                }
            }
        }
    }
    (dw, db, dx)
}

fn pool_backward<S: Scalar>(
    x: &Array3<S>,
    dy: &Array3<S>,
    window: usize,
    orientation: Orientation,
) -> Array3<S> {
    let mut dx = Array3::zeros(x.dim());
    let (c, oh, ow) = dy.dim();
    for ci in 0..c {
        for y in 0..oh {
            for xo in 0..ow {
                // Recompute the winning input; the first maximum gets the
                // whole subgradient, matching the forward tie rule.
                let mut best_k = 0;
                let mut best = pool_source(x, ci, y, xo, 0, window, orientation);
                for k in 1..window {
                    let v = pool_source(x, ci, y, xo, k, window, orientation);
                    if v > best {
                        best = v;
                        best_k = k;
                    }
                }
                match orientation {
                    Orientation::Height => dx[[ci, y * window + best_k, xo]] += dy[[ci, y, xo]],
                    Orientation::Width => dx[[ci, y, xo * window + best_k]] += dy[[ci, y, xo]],
                }
            }
        }
    }
    dx
}

/// Train a fresh network on `data` with minibatch SGD. Deterministic for a
/// given config: He init draws from the component stream of `seed`, epoch
/// `e` shuffles with step stream `e`. Returns the trained network and the
/// mean loss per epoch; a non-finite loss aborts with
/// [`Error::Divergence`].
pub fn train_sgd<S: Scalar>(
    spec: &NetworkSpec,
    data: &[(Array3<S>, usize)],
    cfg: &TrainConfig,
) -> Result<(Cnn<S>, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::config("batch_size must be >= 1"));
    }
    let classes = spec.output_shape()?[0];
    for (i, (input, label)) in data.iter().enumerate() {
        if *label >= classes {
            return Err(Error::invalid_input(format!(
                "sample {i} has label {label}, but the network has {classes} classes"
            )));
        }
        let [c, h, w] = spec.input_shape;
        if input.dim() != (c, h, w) {
            return Err(Error::shape(format!(
                "sample {i} has shape {:?}, expected [{c}, {h}, {w}]",
                input.dim()
            )));
        }
    }

    let mut net = Cnn::init(spec.clone(), cfg.seed)?;
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = rng::step_rng(cfg.seed, epoch as u32);
        rng::shuffle(&mut order, &mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut batch_grads: Option<Vec<LayerWeights<S>>> = None;
            let mut batch_loss = 0.0;
            for &idx in batch {
                let (input, label) = &data[idx];
                let cache = net.forward_cache(input, None);
                let (loss, grads) = net.backward(&cache, *label);
                batch_loss += loss;
                match batch_grads.as_mut() {
                    None => batch_grads = Some(grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            for (aw, gw) in a.weights.iter_mut().zip(&g.weights) {
                                *aw += *gw;
                            }
                            for (ab, gb) in a.biases.iter_mut().zip(&g.biases) {
                                *ab += *gb;
                            }
                        }
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch, loss: batch_loss });
            }
            let scale = S::of(cfg.learning_rate / batch.len() as f64);
            for (lw, g) in net.weights.layers.iter_mut().zip(batch_grads.as_ref().unwrap()) {
                for (w, gw) in lw.weights.iter_mut().zip(&g.weights) {
                    *w -= scale * *gw;
                }
                for (b, gb) in lw.biases.iter_mut().zip(&g.biases) {
                    *b -= scale * *gb;
                }
            }
            epoch_loss += batch_loss;
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        losses.push(mean);
    }
    Ok((net, losses))
}
