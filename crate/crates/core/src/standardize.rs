//! Per-column z-scoring fit on observed cells only.

use log::warn;

use crate::data::DataMatrix;
use crate::error::{MibError, Result};

/// Column means and population standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn fit_standardizer(m: &DataMatrix) -> StandardizationParams {
    let d = m.n_cols();
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    for j in 0..d {
        let col = m.observed_column(j);
        if col.is_empty() {
            warn!("column '{}' has no observed cells; mean=0, std=0", m.column_names()[j]);
            continue;
        }
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        means[j] = mean;
        stds[j] = var.sqrt();
    }
    StandardizationParams { means, stds }
}

impl StandardizationParams {
    pub fn n_cols(&self) -> usize {
        self.means.len()
    }

    #[inline]
    pub fn forward(&self, col: usize, v: f64) -> f64 {
        let s = self.stds[col];
        if s > 0.0 {
            (v - self.means[col]) / s
        } else {
            0.0
        }
    }

    /// Maps a standardized value back to original units. A zero-std column
    /// maps everything back to its mean.
    #[inline]
    pub fn inverse(&self, col: usize, z: f64) -> f64 {
        z * self.stds[col] + self.means[col]
    }

    pub fn apply(&self, m: &DataMatrix) -> Result<DataMatrix> {
        MibError::check_dim(self.n_cols(), m.n_cols())?;
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                if let Some(v) = m.get(i, j) {
                    out.set(i, j, self.forward(j, v));
                }
            }
        }
        Ok(out)
    }

    pub fn invert(&self, m: &DataMatrix) -> Result<DataMatrix> {
        MibError::check_dim(self.n_cols(), m.n_cols())?;
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                if let Some(z) = m.get(i, j) {
                    out.set(i, j, self.inverse(j, z));
                }
            }
        }
        Ok(out)
    }
}

pub fn apply_standardizer(m: &DataMatrix, p: &StandardizationParams) -> Result<DataMatrix> {
    p.apply(m)
}
