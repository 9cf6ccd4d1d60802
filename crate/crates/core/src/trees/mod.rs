//! Regression trees, random forests and gradient boosting.
//!
//! Used twice: by the boosted-tree base imputer, and as downstream models in
//! the indirect evaluation.

mod boost;
mod cart;
mod forest;

pub use boost::{boost_fit, BoostParams, BoostedModel};
pub use cart::{tree_fit, Node, RegressionTree, TreeParams};
pub use forest::{bootstrap_sample, forest_fit, ForestModel, ForestParams};

use crate::error::{MibError, Result};

pub trait Regressor {
    fn n_features(&self) -> usize;

    /// Prediction for one row; the caller guarantees the width.
    fn predict_row(&self, x: &[f64]) -> f64;
}

/// Predictions for every row, checking feature counts.
pub fn predict<M: Regressor + ?Sized>(model: &M, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    x.iter()
        .map(|row| {
            MibError::check_dim(model.n_features(), row.len())?;
            Ok(model.predict_row(row))
        })
        .collect()
}

/// Validates a row set and returns its feature count.
pub(crate) fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(MibError::Empty("no training rows".into()));
    }
    MibError::check_dim(x.len(), y.len())?;
    let p = x[0].len();
    for row in x {
        MibError::check_dim(p, row.len())?;
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(MibError::NonFinite("tree training data".into()));
    }
    Ok(p)
}
