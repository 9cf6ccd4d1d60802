//! Mask-aware autoencoder imputer.
//!
//! A `d → h → d` network (Tanh hidden, Identity output) is trained to
//! reconstruct mean-filled rows. The per-row loss is `Σ (out_j − x_j)²` over
//! the row's observed cells only, so filled-in cells never contribute to the
//! loss or its gradient. Transform is one forward pass on the mean-filled row.

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::neural::{train_minibatch, Activation, DenseNet, TrainConfig};

use super::spec::{parse_auto, parse_value, show_auto};
use super::{column_means, filled_row};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoencoderParams {
    /// `None` picks `max(2, ⌈d/2⌉)`.
    pub hidden: Option<usize>,
    pub train: TrainConfig,
}

impl Default for AutoencoderParams {
    fn default() -> Self {
        AutoencoderParams {
            hidden: None,
            train: TrainConfig {
                epochs: 100,
                batch_size: 32,
                learning_rate: 0.01,
                seed: 0,
            },
        }
    }
}

impl AutoencoderParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.hidden == Some(0) {
            return Err(MibError::invalid("ae: hidden must be >= 1"));
        }
        self.train.validate()
    }

    pub(crate) fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "hidden" => self.hidden = parse_auto(key, value)?,
            _ => return set_train(&mut self.train, key, value),
        }
        Ok(true)
    }

    pub(crate) fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs = vec![("hidden", show_auto(self.hidden))];
        pairs.extend(train_pairs(&self.train));
        pairs
    }

    pub fn resolved_hidden(&self, d: usize) -> usize {
        self.hidden.unwrap_or_else(|| 2.max(d.div_ceil(2)))
    }
}

pub(crate) fn set_train(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "epochs" => cfg.epochs = parse_value(key, value)?,
        "batch" => cfg.batch_size = parse_value(key, value)?,
        "lr" => cfg.learning_rate = parse_value(key, value)?,
        "seed" => cfg.seed = parse_value(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

pub(crate) fn train_pairs(cfg: &TrainConfig) -> Vec<(&'static str, String)> {
    vec![
        ("epochs", cfg.epochs.to_string()),
        ("batch", cfg.batch_size.to_string()),
        ("lr", cfg.learning_rate.to_string()),
        ("seed", cfg.seed.to_string()),
    ]
}

#[derive(Debug, Clone)]
pub struct AutoencoderImputer {
    pub net: DenseNet,
    col_means: Vec<f64>,
    /// Mean per-row loss before training, then after each epoch.
    pub losses: Vec<f64>,
}

/// Masked reconstruction loss of one row and its gradient with respect to
/// the network output.
pub(crate) fn masked_sq_error(out: &[f64], x: &[f64], observed: &[bool]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = out
        .iter()
        .zip(x)
        .zip(observed)
        .map(|((&o, &v), &obs)| {
            if obs {
                let e = o - v;
                loss += e * e;
                2.0 * e
            } else {
                0.0
            }
        })
        .collect();
    (loss, grad)
}

pub fn ae_fit(train: &DataMatrix, params: &AutoencoderParams) -> Result<AutoencoderImputer> {
    params.validate()?;
    let d = train.n_cols();
    let h = params.resolved_hidden(d);
    let mut net = DenseNet::new(
        &[d, h, d],
        &[Activation::Tanh, Activation::Identity],
        params.train.seed,
    )?;
    let col_means = column_means(train);
    let rows: Vec<Vec<f64>> = (0..train.n_rows())
        .map(|i| filled_row(train, i, &col_means))
        .collect();
    let losses = train_minibatch(&mut net, rows.len(), &params.train, |net, i, grads| {
        let trace = net.forward_trace(&rows[i])?;
        let (loss, upstream) = masked_sq_error(trace.output(), &rows[i], train.row_observed(i));
        net.accumulate_backward(&trace, &upstream, grads)?;
        Ok(loss)
    })?;
    Ok(AutoencoderImputer {
        net,
        col_means,
        losses,
    })
}

impl AutoencoderImputer {
    pub fn transform(&self, m: &DataMatrix) -> Result<DataMatrix> {
        MibError::check_dim(self.col_means.len(), m.n_cols())?;
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            if !m.row_observed(i).contains(&false) {
                continue;
            }
            let recon = self.net.forward(&filled_row(m, i, &self.col_means))?;
            for (j, &v) in recon.iter().enumerate() {
                if !m.is_observed(i, j) {
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_width_default() {
        let p = AutoencoderParams::default();
        assert_eq!(p.resolved_hidden(2), 2);
        assert_eq!(p.resolved_hidden(7), 4);
        assert_eq!(p.resolved_hidden(20), 10);
    }

    #[test]
    fn hidden_cells_do_not_enter_the_loss() {
        let (l1, g1) = masked_sq_error(&[1.0, 2.0], &[0.0, 5.0], &[true, false]);
        let (l2, g2) = masked_sq_error(&[1.0, 2.0], &[0.0, -7.0], &[true, false]);
        assert_eq!((l1, &g1), (l2, &g2));
        assert_eq!(l1, 1.0);
        assert_eq!(g1, vec![2.0, 0.0]);
    }

    #[test]
    fn one_missing_cell_is_forward_output() {
        let mut m = DataMatrix::from_dense(6, 3, (0..18).map(|v| (v as f64).sin()).collect()).unwrap();
        m.set_missing(2, 1);
        let f = ae_fit(&m, &AutoencoderParams::default()).unwrap();
        let out = f.transform(&m).unwrap();
        let means = column_means(&m);
        let expect = f.net.forward(&filled_row(&m, 2, &means)).unwrap()[1];
        assert_eq!(out.value(2, 1), expect);
    }
}
