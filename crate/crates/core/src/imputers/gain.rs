//! Adversarial imputer with a hint mechanism.
//!
//! Generator `G: [x̃ ; m] → g` (widths `2d → d → d → d`, ReLU, ReLU,
//! Identity) sees the row with missing coordinates replaced by
//! `uniform(0, 0.01)` noise, plus the observedness vector `m`. The imputed
//! row is `x̂ = m ⊙ x + (1 − m) ⊙ g`. Discriminator `D: [x̂ ; h] → p`
//! (same widths, Sigmoid head) predicts `m` given the hint
//! `h = b ⊙ m + 0.5 (1 − b)` with `b ~ Bernoulli(hint_rate)`.
//!
//! Each iteration draws one minibatch, then takes one SGD step on
//! `L_D = −mean_j [m_j log p_j + (1 − m_j) log(1 − p_j)]` and one on
//! `L_G = −mean_j (1 − m_j) log p_j + alpha · Σ_j m_j (g_j − x_j)² / Σ_j m_j`.
//! The generator head is Identity rather than Sigmoid because inputs are
//! standardized, not scaled to `[0, 1]`.

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::neural::{Activation, DenseNet, Gradients};
use crate::rng::{derive_seed, Stream};

use super::spec::parse_value;

const NOISE_HIGH: f64 = 0.01;
const PROB_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParams {
    pub hint_rate: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GainParams {
    fn default() -> Self {
        GainParams {
            hint_rate: 0.9,
            alpha: 10.0,
            iterations: 2000,
            batch_size: 64,
            learning_rate: 0.005,
            seed: 0,
        }
    }
}

impl GainParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.hint_rate) {
            return Err(MibError::invalid("gain: hint must be in [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(MibError::invalid("gain: alpha must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(MibError::invalid("gain: batch must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MibError::invalid("gain: lr must be > 0"));
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "hint" => self.hint_rate = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "iters" => self.iterations = parse_value(key, value)?,
            "batch" => self.batch_size = parse_value(key, value)?,
            "lr" => self.learning_rate = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub(crate) fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("hint", self.hint_rate.to_string()),
            ("alpha", self.alpha.to_string()),
            ("iters", self.iterations.to_string()),
            ("batch", self.batch_size.to_string()),
            ("lr", self.learning_rate.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

/// `h = b ⊙ m + 0.5 (1 − b)` with `b_j ~ Bernoulli(hint_rate)`, one draw per
/// coordinate in order.
pub fn hint_vector(observed: &[bool], hint_rate: f64, stream: &mut Stream) -> Vec<f64> {
    observed
        .iter()
        .map(|&o| {
            if stream.bernoulli(hint_rate) {
                if o {
                    1.0
                } else {
                    0.0
                }
            } else {
                0.5
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GainImputer {
    pub generator: DenseNet,
    pub discriminator: DenseNet,
    seed: u64,
    pub d_losses: Vec<f64>,
    pub g_losses: Vec<f64>,
    /// Observed-cell reconstruction MSE of the generator on the training
    /// matrix, before and after training.
    pub initial_mse: f64,
    pub final_mse: f64,
}

fn indicator(observed: &[bool]) -> Vec<f64> {
    observed.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect()
}

/// `[x̃ ; m]` with noise at the missing coordinates.
fn generator_input(values: &[f64], observed: &[bool], stream: &mut Stream) -> Vec<f64> {
    let mut input: Vec<f64> = values
        .iter()
        .zip(observed)
        .map(|(&v, &o)| if o { v } else { stream.uniform_range(0.0, NOISE_HIGH) })
        .collect();
    input.extend(indicator(observed));
    input
}

fn combine(values: &[f64], observed: &[bool], g: &[f64]) -> Vec<f64> {
    values
        .iter()
        .zip(observed)
        .zip(g)
        .map(|((&v, &o), &gv)| if o { v } else { gv })
        .collect()
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

fn reconstruction_mse(g: &DenseNet, m: &DataMatrix, seed: u64) -> Result<f64> {
    let mut stream = Stream::new(seed);
    let (mut sse, mut count) = (0.0, 0usize);
    for i in 0..m.n_rows() {
        let obs = m.row_observed(i);
        let vals = m.row_values(i);
        let out = g.forward(&generator_input(vals, obs, &mut stream))?;
        for j in 0..m.n_cols() {
            if obs[j] {
                sse += (out[j] - vals[j]).powi(2);
                count += 1;
            }
        }
    }
    Ok(if count == 0 { 0.0 } else { sse / count as f64 })
}

pub fn gain_fit(train: &DataMatrix, params: &GainParams) -> Result<GainImputer> {
    params.validate()?;
    let (n, d) = (train.n_rows(), train.n_cols());
    let widths = [2 * d, d, d, d];
    let mut gen = DenseNet::new(
        &widths,
        &[Activation::Relu, Activation::Relu, Activation::Identity],
        derive_seed(params.seed, &[0x6]),
    )?;
    let mut disc = DenseNet::new(
        &widths,
        &[Activation::Relu, Activation::Relu, Activation::Sigmoid],
        derive_seed(params.seed, &[0xd]),
    )?;
    let mse_seed = derive_seed(params.seed, &[0x3e]);
    let initial_mse = reconstruction_mse(&gen, train, mse_seed)?;

    let mut stream = Stream::new(derive_seed(params.seed, &[0x17]));
    let batch = params.batch_size.min(n);
    let mut g_grads = gen.zero_grads();
    let mut d_grads = disc.zero_grads();
    let mut scratch: Gradients = disc.zero_grads();
    let mut d_losses = Vec::with_capacity(params.iterations);
    let mut g_losses = Vec::with_capacity(params.iterations);

    for _ in 0..params.iterations {
        let rows = stream.subset(n, batch);
        let samples: Vec<(Vec<f64>, Vec<f64>)> = rows
            .iter()
            .map(|&i| {
                let obs = train.row_observed(i);
                let g_in = generator_input(train.row_values(i), obs, &mut stream);
                let hint = hint_vector(obs, params.hint_rate, &mut stream);
                (g_in, hint)
            })
            .collect();

        // discriminator step
        d_grads.reset();
        let mut d_loss = 0.0;
        for (&i, (g_in, hint)) in rows.iter().zip(&samples) {
            let obs = train.row_observed(i);
            let m = indicator(obs);
            let g = gen.forward(g_in)?;
            let mut d_in = combine(train.row_values(i), obs, &g);
            d_in.extend_from_slice(hint);
            let trace = disc.forward_trace(&d_in)?;
            let p = trace.output();
            let mut upstream = vec![0.0; d];
            for j in 0..d {
                let pj = clamp_prob(p[j]);
                d_loss -= (m[j] * pj.ln() + (1.0 - m[j]) * (1.0 - pj).ln()) / d as f64;
                upstream[j] = -(m[j] / pj - (1.0 - m[j]) / (1.0 - pj)) / d as f64;
            }
            disc.accumulate_backward(&trace, &upstream, &mut d_grads)?;
        }
        d_grads.scale(1.0 / batch as f64);
        disc.sgd_step(&d_grads, params.learning_rate)?;

        // generator step against the updated discriminator
        g_grads.reset();
        let mut g_loss = 0.0;
        for (&i, (g_in, hint)) in rows.iter().zip(&samples) {
            let obs = train.row_observed(i);
            let vals = train.row_values(i);
            let m = indicator(obs);
            let n_obs = m.iter().sum::<f64>().max(1.0);
            let g_trace = gen.forward_trace(g_in)?;
            let g = g_trace.output().to_vec();
            let mut d_in = combine(vals, obs, &g);
            d_in.extend_from_slice(hint);
            let d_trace = disc.forward_trace(&d_in)?;
            let p = d_trace.output();
            let mut upstream = vec![0.0; d];
            for j in 0..d {
                let pj = clamp_prob(p[j]);
                g_loss -= (1.0 - m[j]) * pj.ln() / d as f64;
                upstream[j] = -(1.0 - m[j]) / (pj * d as f64);
            }
            scratch.reset();
            let d_input_grad = disc.accumulate_backward(&d_trace, &upstream, &mut scratch)?;
            let mut g_upstream = vec![0.0; d];
            for j in 0..d {
                let e = g[j] - vals[j];
                if obs[j] {
                    g_loss += params.alpha * e * e / n_obs;
                    g_upstream[j] = params.alpha * 2.0 * e / n_obs;
                } else {
                    g_upstream[j] = d_input_grad[j];
                }
            }
            gen.accumulate_backward(&g_trace, &g_upstream, &mut g_grads)?;
        }
        g_grads.scale(1.0 / batch as f64);
        gen.sgd_step(&g_grads, params.learning_rate)?;

        let (dl, gl) = (d_loss / batch as f64, g_loss / batch as f64);
        if !(dl.is_finite() && gl.is_finite()) {
            return Err(MibError::NonFinite("gain training loss".into()));
        }
        d_losses.push(dl);
        g_losses.push(gl);
    }

    let final_mse = reconstruction_mse(&gen, train, mse_seed)?;
    Ok(GainImputer {
        generator: gen,
        discriminator: disc,
        seed: params.seed,
        d_losses,
        g_losses,
        initial_mse,
        final_mse,
    })
}

impl GainImputer {
    pub fn transform(&self, m: &DataMatrix) -> Result<DataMatrix> {
        MibError::check_dim(self.generator.output_dim(), m.n_cols())?;
        let mut stream = Stream::new(derive_seed(self.seed, &[0x7a]));
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            let obs = m.row_observed(i);
            if !obs.contains(&false) {
                continue;
            }
            let g = self
                .generator
                .forward(&generator_input(m.row_values(i), obs, &mut stream))?;
            for (j, &v) in g.iter().enumerate() {
                if !obs[j] {
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }
}
