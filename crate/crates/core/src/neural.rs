//! Small dense feed-forward networks with hand-written backprop and plain SGD.
//!
//! Weights are stored row-major as `n_out x n_in`. Initialization draws from
//! `uniform(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`; biases start at 0.

use crate::error::{MibError, Result};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// d(activation)/dz, given pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(
        n_in: usize,
        n_out: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        MibError::check_dim(n_in * n_out, weights.len())?;
        MibError::check_dim(n_out, biases.len())?;
        Ok(Layer {
            n_in,
            n_out,
            weights,
            biases,
            activation,
        })
    }

    fn glorot(n_in: usize, n_out: usize, activation: Activation, stream: &mut Stream) -> Self {
        let a = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_in * n_out).map(|_| stream.uniform_range(-a, a)).collect();
        Layer {
            n_in,
            n_out,
            weights,
            biases: vec![0.0; n_out],
            activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|g| *g *= s);
            l.biases.iter_mut().for_each(|g| *g *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|g| g.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|&g| g == 0.0))
    }

    pub fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|g| *g = 0.0);
            l.biases.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// Per-layer pre-activations and outputs from one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&self.input)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

impl DenseNet {
    /// `widths` has one more entry than `activations`.
    pub fn new(widths: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if widths.len() != activations.len() + 1 || activations.is_empty() {
            return Err(MibError::invalid(
                "network needs widths.len() == activations.len() + 1 >= 2",
            ));
        }
        if widths.contains(&0) {
            return Err(MibError::invalid("layer widths must be positive"));
        }
        let mut stream = Stream::new(derive_seed(seed, &[0x1417]));
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::glorot(w[0], w[1], act, &mut stream))
            .collect();
        Ok(DenseNet { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(MibError::invalid("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            MibError::check_dim(pair[0].n_out, pair[1].n_in)?;
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        MibError::check_dim(self.input_dim(), x.len())?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = affine(layer, &cur)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
        }
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        MibError::check_dim(self.input_dim(), x.len())?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().map(Vec::as_slice).unwrap_or(x);
            let z = affine(layer, input);
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            post.push(a);
        }
        Ok(Trace {
            input: x.to_vec(),
            pre,
            post,
        })
    }

    /// Adds the parameter gradients of `upstream · output` to `grads` and
    /// returns the gradient with respect to the input.
    pub fn accumulate_backward(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        MibError::check_dim(self.output_dim(), upstream.len())?;
        let mut delta: Vec<f64> = upstream.to_vec();
        for (t, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre[t];
            let a = &trace.post[t];
            for k in 0..layer.n_out {
                delta[k] *= layer.activation.derivative(z[k], a[k]);
            }
            let input = if t == 0 { &trace.input } else { &trace.post[t - 1] };
            let g = &mut grads.layers[t];
            for k in 0..layer.n_out {
                let dk = delta[k];
                g.biases[k] += dk;
                if dk != 0.0 {
                    let row = &mut g.weights[k * layer.n_in..(k + 1) * layer.n_in];
                    for (gw, &xi) in row.iter_mut().zip(input) {
                        *gw += dk * xi;
                    }
                }
            }
            let mut next = vec![0.0; layer.n_in];
            for k in 0..layer.n_out {
                let dk = delta[k];
                if dk == 0.0 {
                    continue;
                }
                let row = &layer.weights[k * layer.n_in..(k + 1) * layer.n_in];
                for (ni, &w) in next.iter_mut().zip(row) {
                    *ni += dk * w;
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    /// Gradients of `upstream · forward(x)` with respect to parameters and input.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let trace = self.forward_trace(x)?;
        let mut grads = self.zero_grads();
        let dx = self.accumulate_backward(&trace, upstream, &mut grads)?;
        Ok((grads, dx))
    }

    /// `θ ← θ − lr·g`. Rejects non-finite gradients and non-finite results,
    /// leaving the network untouched in either case.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(MibError::invalid(format!("learning rate {lr} must be >= 0")));
        }
        MibError::check_dim(self.layers.len(), grads.layers.len())?;
        if !grads.is_finite() {
            return Err(MibError::NonFinite("gradient".into()));
        }
        let mut updated = self.layers.clone();
        for (layer, g) in updated.iter_mut().zip(&grads.layers) {
            MibError::check_dim(layer.weights.len(), g.weights.len())?;
            MibError::check_dim(layer.biases.len(), g.biases.len())?;
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= lr * gb;
            }
        }
        if updated
            .iter()
            .any(|l| l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()))
        {
            return Err(MibError::NonFinite("parameters after SGD step".into()));
        }
        self.layers = updated;
        Ok(())
    }
}

fn affine(layer: &Layer, x: &[f64]) -> Vec<f64> {
    (0..layer.n_out)
        .map(|k| {
            let row = &layer.weights[k * layer.n_in..(k + 1) * layer.n_in];
            row.iter().zip(x).fold(layer.biases[k], |acc, (w, v)| acc + w * v)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(MibError::invalid("batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MibError::invalid("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Minibatch SGD over `n_samples` examples. Each epoch visits a fresh seeded
/// shuffle of the sample indices; `sample_grad(net, i, grads)` adds sample
/// `i`'s gradient into `grads` and returns its loss. Gradients are averaged
/// over the minibatch. Returns the mean loss of every epoch, preceded by the
/// mean loss before any update.
pub fn train_minibatch<F>(
    net: &mut DenseNet,
    n_samples: usize,
    cfg: &TrainConfig,
    mut sample_grad: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&DenseNet, usize, &mut Gradients) -> Result<f64>,
{
    cfg.validate()?;
    if n_samples == 0 {
        return Err(MibError::Empty("no training samples".into()));
    }
    let mut stream = Stream::new(derive_seed(cfg.seed, &[0x5eed]));
    let mut grads = net.zero_grads();
    let mut scratch = net.zero_grads();
    let mut history = Vec::with_capacity(cfg.epochs + 1);

    let mut initial = 0.0;
    for i in 0..n_samples {
        initial += sample_grad(net, i, &mut scratch)?;
    }
    history.push(check_loss(initial / n_samples as f64)?);

    let mut order: Vec<usize> = (0..n_samples).collect();
    for _ in 0..cfg.epochs {
        stream.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.reset();
            for &i in batch {
                total += sample_grad(net, i, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            net.sgd_step(&grads, cfg.learning_rate)?;
        }
        history.push(check_loss(total / n_samples as f64)?);
    }
    Ok(history)
}

fn check_loss(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(MibError::NonFinite("training loss".into()))
    }
}
