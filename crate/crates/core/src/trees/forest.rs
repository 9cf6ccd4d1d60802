use rayon::prelude::*;

use crate::error::{MibError, Result};
use crate::rng::{derive_seed, Stream};

use super::cart::{fit_rows, RegressionTree, TreeParams};
use super::{check_xy, Regressor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` means `ceil(p / 3)` features per split.
    pub feature_subsample: Option<f64>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 8,
            min_samples_leaf: 1,
            feature_subsample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    /// Seed of each tree's bootstrap draw and feature subsampling.
    pub tree_seeds: Vec<u64>,
    pub feature_subsample: f64,
}

/// `n` row indices drawn with replacement.
pub fn bootstrap_sample(n: usize, seed: u64) -> Vec<usize> {
    let mut s = Stream::new(seed);
    (0..n).map(|_| s.below(n)).collect()
}

pub fn forest_fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    let p = check_xy(x, y)?;
    if params.n_trees == 0 {
        return Err(MibError::invalid("forest needs at least one tree"));
    }
    let feature_subsample = params.feature_subsample.unwrap_or((p as f64 / 3.0).ceil() / p as f64);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        feature_subsample,
    };
    let tree_seeds: Vec<u64> = (0..params.n_trees as u64).map(|t| derive_seed(seed, &[t])).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let rows = bootstrap_sample(x.len(), s);
            fit_rows(x, y, &rows, p, &tree_params, derive_seed(s, &[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        tree_seeds,
        feature_subsample,
    })
}

impl Regressor for ForestModel {
    fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}
