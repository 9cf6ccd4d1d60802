//! Single-pass boosted-tree imputer.
//!
//! For each column `j`, a squared-loss boosted ensemble is fit on the training
//! rows where `j` is observed, predicting `j` from every other column with
//! missing predictors filled by the training column means. Missing cells of
//! `j` are then predicted from the same mean-filled predictors. Columns are
//! fit independently and in parallel; each column's seed is derived from the
//! spec seed and the column index.

use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::rng::derive_seed;
use crate::trees::{boost_fit, BoostParams, BoostedModel, Regressor};

use super::spec::parse_value;
use super::{column_means, filled_row};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.3,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 {
            return Err(MibError::invalid("gbt: trees and depth must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MibError::invalid("gbt: lr must be > 0"));
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "trees" => self.n_trees = parse_value(key, value)?,
            "depth" => self.max_depth = parse_value(key, value)?,
            "lr" => self.learning_rate = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub(crate) fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("trees", self.n_trees.to_string()),
            ("depth", self.max_depth.to_string()),
            ("lr", self.learning_rate.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct GbtImputer {
    col_means: Vec<f64>,
    /// `None` for columns with no observed training cell.
    models: Vec<Option<BoostedModel>>,
}

/// Predictor vector for column `col`: the row without that column.
fn predictors(full: &[f64], col: usize) -> Vec<f64> {
    full.iter()
        .enumerate()
        .filter(|&(j, _)| j != col)
        .map(|(_, &v)| v)
        .collect()
}

pub fn gbt_impute_fit(train: &DataMatrix, params: &GbtParams) -> Result<GbtImputer> {
    params.validate()?;
    let col_means = column_means(train);
    let filled: Vec<Vec<f64>> = (0..train.n_rows())
        .map(|i| filled_row(train, i, &col_means))
        .collect();
    let boost = BoostParams {
        n_trees: params.n_trees,
        max_depth: params.max_depth,
        learning_rate: params.learning_rate,
    };
    let models = (0..train.n_cols())
        .into_par_iter()
        .map(|j| {
            let rows: Vec<usize> = (0..train.n_rows()).filter(|&i| train.is_observed(i, j)).collect();
            if rows.is_empty() {
                return Ok(None);
            }
            let x: Vec<Vec<f64>> = rows.iter().map(|&i| predictors(&filled[i], j)).collect();
            let y: Vec<f64> = rows.iter().map(|&i| train.value(i, j)).collect();
            boost_fit(&x, &y, &boost, derive_seed(params.seed, &[j as u64])).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GbtImputer { col_means, models })
}

impl GbtImputer {
    pub fn models(&self) -> &[Option<BoostedModel>] {
        &self.models
    }

    pub fn transform(&self, m: &DataMatrix) -> DataMatrix {
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            if !m.row_observed(i).contains(&false) {
                continue;
            }
            let full = filled_row(m, i, &self.col_means);
            for j in 0..m.n_cols() {
                if m.is_observed(i, j) {
                    continue;
                }
                let v = match &self.models[j] {
                    Some(model) => model.predict_row(&predictors(&full, j)),
                    None => 0.0,
                };
                out.set(i, j, v);
            }
        }
        out
    }
}
