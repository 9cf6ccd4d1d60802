//! Direct (masked-cell) and indirect (downstream prediction) scores.

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::linalg::ridge_fit;
use crate::masking::Mask;
use crate::trees::{boost_fit, forest_fit, BoostParams, ForestParams, Regressor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectScores {
    pub masked_mae: f64,
    pub masked_rmse: f64,
    pub n_cells: usize,
}

/// MAE and RMSE of `imputed` against the truth stored in `mask`.
pub fn direct_scores(imputed: &DataMatrix, mask: &Mask) -> Result<DirectScores> {
    if mask.is_empty() {
        return Err(MibError::Empty("mask has no hidden cells to score".into()));
    }
    if mask.shape() != (imputed.n_rows(), imputed.n_cols()) {
        return Err(MibError::invalid(format!(
            "mask shape {:?} does not match matrix {}x{}",
            mask.shape(),
            imputed.n_rows(),
            imputed.n_cols()
        )));
    }
    let (mut abs, mut sq) = (0.0, 0.0);
    for c in mask.cells() {
        let v = imputed
            .get(c.row, c.col)
            .ok_or_else(|| MibError::invalid(format!("cell ({}, {}) was not imputed", c.row, c.col)))?;
        let e = v - c.truth;
        abs += e.abs();
        sq += e * e;
    }
    let n = mask.len() as f64;
    Ok(DirectScores {
        masked_mae: abs / n,
        masked_rmse: (sq / n).sqrt(),
        n_cells: mask.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndirectScores {
    pub pred_rmse_rf: f64,
    pub pred_rmse_gbt: f64,
    pub pred_rmse_lr: f64,
}

/// Settings of the three downstream models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownstreamParams {
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub lr_epsilon: f64,
    pub seed: u64,
}

impl Default for DownstreamParams {
    fn default() -> Self {
        DownstreamParams {
            forest: ForestParams::default(),
            boost: BoostParams::default(),
            lr_epsilon: 1e-8,
            seed: 0,
        }
    }
}

fn features_and_target(m: &DataMatrix, target_col: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut m = m.clone();
    m.set_target_col(Some(target_col))?;
    m.split_target()
}

fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    (sse / truth.len() as f64).sqrt()
}

/// Fits forest, boosted and linear models on `train` (features = every
/// column but `target_col`) and returns each model's RMSE on `test`.
pub fn indirect_scores(
    train: &DataMatrix,
    test: &DataMatrix,
    target_col: usize,
    params: &DownstreamParams,
) -> Result<IndirectScores> {
    MibError::check_dim(train.n_cols(), test.n_cols())?;
    let (x_train, y_train) = features_and_target(train, target_col)?;
    let (x_test, y_test) = features_and_target(test, target_col)?;
    if x_test.is_empty() {
        return Err(MibError::Empty("no test rows for downstream scoring".into()));
    }

    let forest = forest_fit(&x_train, &y_train, &params.forest, params.seed)?;
    let boost = boost_fit(&x_train, &y_train, &params.boost, params.seed)?;
    let p = x_train[0].len();
    let flat: Vec<f64> = x_train.iter().flatten().copied().collect();
    let linear = ridge_fit(&flat, x_train.len(), p, &y_train, params.lr_epsilon)?;

    let predict_all = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> { x_test.iter().map(|r| f(r)).collect() };
    let scores = IndirectScores {
        pred_rmse_rf: rmse(&predict_all(&|r| forest.predict_row(r)), &y_test),
        pred_rmse_gbt: rmse(&predict_all(&|r| boost.predict_row(r)), &y_test),
        pred_rmse_lr: rmse(&predict_all(&|r| linear.predict(r)), &y_test),
    };
    if [scores.pred_rmse_rf, scores.pred_rmse_gbt, scores.pred_rmse_lr]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(MibError::NonFinite("downstream prediction".into()));
    }
    Ok(scores)
}
