use crate::error::{MibError, Result};
use crate::rng::derive_seed;

use super::cart::{fit_rows, RegressionTree, TreeParams};
use super::{check_xy, Regressor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.3,
        }
    }
}

/// Squared-loss gradient boosting: `base_score + lr * Σ tree(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub base_score: f64,
    n_features: usize,
    /// Training SSE before the first round and after each round.
    pub training_sse: Vec<f64>,
}

impl BoostedModel {
    pub fn from_parts(
        base_score: f64,
        learning_rate: f64,
        trees: Vec<RegressionTree>,
        n_features: usize,
    ) -> Self {
        BoostedModel {
            trees,
            learning_rate,
            base_score,
            n_features,
            training_sse: Vec::new(),
        }
    }
}

pub fn boost_fit(x: &[Vec<f64>], y: &[f64], params: &BoostParams, seed: u64) -> Result<BoostedModel> {
    let p = check_xy(x, y)?;
    if params.n_trees == 0 {
        return Err(MibError::invalid("boosting needs at least one round"));
    }
    if !(params.learning_rate >= 0.0 && params.learning_rate.is_finite()) {
        return Err(MibError::invalid("boosting learning rate must be >= 0"));
    }
    let n = x.len();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: 1,
        feature_subsample: 1.0,
    };
    let rows: Vec<usize> = (0..n).collect();
    let mut pred = vec![base_score; n];
    let mut residual = vec![0.0; n];
    let sse = |pred: &[f64]| pred.iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum::<f64>();
    let mut training_sse = vec![sse(&pred)];
    let mut trees = Vec::with_capacity(params.n_trees);
    for round in 0..params.n_trees {
        for i in 0..n {
            residual[i] = y[i] - pred[i];
        }
        let tree = fit_rows(x, &residual, &rows, p, &tree_params, derive_seed(seed, &[round as u64]))?;
        for i in 0..n {
            pred[i] += params.learning_rate * tree.predict_row(&x[i]);
        }
        training_sse.push(sse(&pred));
        trees.push(tree);
    }
    Ok(BoostedModel {
        trees,
        learning_rate: params.learning_rate,
        base_score,
        n_features: p,
        training_sse,
    })
}

impl Regressor for BoostedModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + self.learning_rate * t.predict_row(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use crate::trees::predict;

    #[test]
    fn one_round_exact_fit() {
        let x = vec![vec![0.0], vec![1.0]];
        let params = BoostParams {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
        };
        let m = boost_fit(&x, &[0.0, 1.0], &params, 0).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), vec![0.0, 1.0]);
        assert_eq!(*m.training_sse.last().unwrap(), 0.0);
    }

    #[test]
    fn zero_learning_rate_predicts_base_score() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let params = BoostParams {
            n_trees: 5,
            max_depth: 2,
            learning_rate: 0.0,
        };
        let m = boost_fit(&x, &[1.0, 2.0, 6.0], &params, 0).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), vec![3.0; 3]);
    }

    #[test]
    fn base_plus_scaled_tree() {
        let m = BoostedModel::from_parts(1.0, 0.5, vec![RegressionTree::leaf(2.0, 1)], 1);
        assert_eq!(predict(&m, &[vec![7.0]]).unwrap(), vec![2.0]);
    }

    #[test]
    fn training_sse_never_increases() {
        let mut s = Stream::new(8);
        let x: Vec<Vec<f64>> = (0..80).map(|_| vec![s.normal(), s.normal(), s.normal()]).collect();
        let y: Vec<f64> = (0..80).map(|_| s.normal()).collect();
        let params = BoostParams {
            n_trees: 50,
            max_depth: 3,
            learning_rate: 0.3,
        };
        let m = boost_fit(&x, &y, &params, 1).unwrap();
        assert_eq!(m.training_sse.len(), 51);
        for w in m.training_sse.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0], "{} -> {}", w[0], w[1]);
        }
    }
}
