//! Base imputers behind a common fit/transform interface.
//!
//! Every imputer is fit on a (standardized) matrix with missing cells and can
//! then complete any matrix with the same column count. Transform never alters
//! an observed cell and never emits a non-finite value. A column with no
//! observed cells at fit time is imputed with 0, the standardized mean.

mod autoencoder;
mod gain;
mod gbt;
mod knn;
mod mf;
mod spec;
mod stats;

pub use autoencoder::{ae_fit, AutoencoderImputer, AutoencoderParams};
pub use gain::{gain_fit, hint_vector, GainImputer, GainParams};
pub use gbt::{gbt_impute_fit, GbtImputer, GbtParams};
pub use knn::{knn_impute_cell, KnnImputer, KnnParams};
pub use mf::{mf_fit, MfFactors, MfImputer, MfParams};
pub use spec::{ImputerKind, ImputerSpec};
pub use stats::{column_mean, column_median, column_mode};

use log::warn;

use crate::data::DataMatrix;
use crate::error::{MibError, Result};

#[derive(Debug, Clone)]
enum State {
    Fill(Vec<f64>),
    Knn(KnnImputer),
    Mf(MfImputer),
    Gbt(GbtImputer),
    Autoencoder(AutoencoderImputer),
    Gain(GainImputer),
}

/// A trained imputer; immutable after [`fit`].
#[derive(Debug, Clone)]
pub struct FittedImputer {
    spec: ImputerSpec,
    n_cols: usize,
    /// Columns with no observed cell at fit time; always imputed with 0.
    empty_cols: Vec<bool>,
    state: State,
}

pub fn fit(spec: &ImputerSpec, train: &DataMatrix) -> Result<FittedImputer> {
    spec.validate()?;
    let state = match spec {
        ImputerSpec::Mean => State::Fill(fill_values(train, column_mean)),
        ImputerSpec::Median => State::Fill(fill_values(train, column_median)),
        ImputerSpec::Mode => State::Fill(fill_values(train, column_mode)),
        ImputerSpec::Knn(p) => State::Knn(KnnImputer::fit(p, train)?),
        ImputerSpec::MatrixFactorization(p) => State::Mf(MfImputer::fit(p, train)?),
        ImputerSpec::GradientBoostedTrees(p) => State::Gbt(gbt_impute_fit(train, p)?),
        ImputerSpec::Autoencoder(p) => State::Autoencoder(ae_fit(train, p)?),
        ImputerSpec::Gain(p) => State::Gain(gain_fit(train, p)?),
    };
    let empty_cols = (0..train.n_cols())
        .map(|j| (0..train.n_rows()).all(|i| !train.is_observed(i, j)))
        .collect();
    Ok(FittedImputer {
        spec: spec.clone(),
        n_cols: train.n_cols(),
        empty_cols,
        state,
    })
}

impl FittedImputer {
    pub fn spec(&self) -> &ImputerSpec {
        &self.spec
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Per-column fill value of the statistics imputers.
    pub fn fill_statistics(&self) -> Option<&[f64]> {
        match &self.state {
            State::Fill(v) => Some(v),
            _ => None,
        }
    }

    pub fn transform(&self, m: &DataMatrix) -> Result<DataMatrix> {
        MibError::check_dim(self.n_cols, m.n_cols())?;
        if m.is_complete() {
            return Ok(m.clone());
        }
        let mut out = match &self.state {
            State::Fill(values) => {
                let mut out = m.clone();
                for (i, j) in m.missing_cells() {
                    out.set(i, j, values[j]);
                }
                out
            }
            State::Knn(s) => s.transform(m),
            State::Mf(s) => s.transform(m)?,
            State::Gbt(s) => s.transform(m),
            State::Autoencoder(s) => s.transform(m)?,
            State::Gain(s) => s.transform(m)?,
        };
        for (i, j) in m.missing_cells() {
            if self.empty_cols[j] {
                out.set(i, j, 0.0);
            }
        }
        debug_assert!(out.is_complete());
        if let Some(pos) = out.complete_values()?.iter().position(|v| !v.is_finite()) {
            return Err(MibError::NonFinite(format!(
                "{} produced a non-finite value at row {}, column {}",
                self.spec.name(),
                pos / m.n_cols(),
                pos % m.n_cols()
            )));
        }
        Ok(out)
    }
}

fn fill_values(train: &DataMatrix, stat: fn(&[f64]) -> Option<f64>) -> Vec<f64> {
    (0..train.n_cols())
        .map(|j| {
            stat(&train.observed_column(j)).unwrap_or_else(|| {
                warn!("column '{}' has no observed cells; imputing 0", train.column_names()[j]);
                0.0
            })
        })
        .collect()
}

/// Observed-cell means per column, 0 for columns with nothing observed.
pub(crate) fn column_means(m: &DataMatrix) -> Vec<f64> {
    (0..m.n_cols())
        .map(|j| column_mean(&m.observed_column(j)).unwrap_or(0.0))
        .collect()
}

/// Row `i` with missing cells replaced by `fill`.
pub(crate) fn filled_row(m: &DataMatrix, i: usize, fill: &[f64]) -> Vec<f64> {
    m.row_values(i)
        .iter()
        .zip(m.row_observed(i))
        .zip(fill)
        .map(|((&v, &o), &f)| if o { v } else { f })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_col(cells: &[Option<f64>]) -> DataMatrix {
        let rows: Vec<Vec<Option<f64>>> = cells.iter().map(|&c| vec![c, Some(1.0)]).collect();
        DataMatrix::from_cells(vec!["a".into(), "b".into()], &rows, None).unwrap()
    }

    #[test]
    fn statistics_are_stored() {
        let m = with_col(&[Some(1.0), Some(2.0), None, Some(3.0)]);
        let f = fit(&ImputerSpec::Mean, &m).unwrap();
        assert_eq!(f.fill_statistics().unwrap()[0], 2.0);
        let out = f.transform(&m).unwrap();
        assert_eq!(out.value(2, 0), 2.0);

        let m = with_col(&[Some(1.0), Some(2.0), Some(100.0), None]);
        assert_eq!(fit(&ImputerSpec::Median, &m).unwrap().fill_statistics().unwrap()[0], 2.0);

        let m = with_col(&[Some(1.0), Some(1.0), Some(2.0), Some(2.0), None]);
        assert_eq!(fit(&ImputerSpec::Mode, &m).unwrap().fill_statistics().unwrap()[0], 1.0);
    }

    #[test]
    fn all_missing_column_falls_back_to_zero() {
        let m = with_col(&[None, None, None]);
        for spec in ImputerSpec::all_defaults() {
            let f = fit(&spec, &m).unwrap();
            let out = f.transform(&m).unwrap();
            for i in 0..3 {
                assert_eq!(out.value(i, 0), 0.0, "{}", spec.name());
                assert_eq!(out.value(i, 1), 1.0);
            }
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let f = fit(&ImputerSpec::Mean, &with_col(&[Some(1.0)])).unwrap();
        let wide = DataMatrix::from_dense(1, 3, vec![0.0; 3]).unwrap();
        assert!(matches!(f.transform(&wide), Err(MibError::DimensionMismatch { .. })));
    }
}
