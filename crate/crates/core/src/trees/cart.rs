//! Greedy variance-reduction regression trees.
//!
//! At each node every candidate feature is scanned in ascending index order;
//! candidate thresholds are midpoints between consecutive distinct sorted
//! values, also ascending. A split replaces the incumbent only when its gain
//! beats it by more than a relative tolerance, so exact and near-exact ties
//! resolve to the lower feature index, then the lower threshold. Samples with
//! `x <= threshold` go left.

use crate::error::{MibError, Result};
use crate::rng::Stream;

use super::{check_xy, Regressor};

/// Gains within this fraction of the node SSE count as ties.
pub(crate) const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features examined per split, in `(0, 1]`; `ceil(frac * p)` features are drawn.
    pub feature_subsample: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_samples_leaf: 1,
            feature_subsample: 1.0,
        }
    }
}

impl TreeParams {
    fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(MibError::invalid("min_samples_leaf must be >= 1"));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(MibError::invalid("feature_subsample must be in (0, 1]"));
        }
        Ok(())
    }

    fn features_per_split(&self, p: usize) -> usize {
        ((self.feature_subsample * p as f64).ceil() as usize).clamp(1, p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl RegressionTree {
    /// Node 0 is the root.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf(value: f64, n_features: usize) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
            n_features,
            max_depth: 0,
            min_samples_leaf: 1,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Regressor for RegressionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

pub fn tree_fit(x: &[Vec<f64>], y: &[f64], params: &TreeParams, seed: u64) -> Result<RegressionTree> {
    let p = check_xy(x, y)?;
    let rows: Vec<usize> = (0..x.len()).collect();
    fit_rows(x, y, &rows, p, params, seed)
}

/// Fits on the (possibly repeated) row indices in `rows`.
pub(crate) fn fit_rows(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    p: usize,
    params: &TreeParams,
    seed: u64,
) -> Result<RegressionTree> {
    params.validate()?;
    if rows.is_empty() {
        return Err(MibError::Empty("tree needs at least one sample".into()));
    }
    let mut grower = Grower {
        x,
        y,
        p,
        params,
        k_features: params.features_per_split(p),
        stream: Stream::new(seed),
        nodes: Vec::new(),
    };
    grower.grow(rows.to_vec(), 0);
    Ok(RegressionTree {
        nodes: grower.nodes,
        n_features: p,
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    })
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    p: usize,
    params: &'a TreeParams,
    k_features: usize,
    stream: Stream,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Mean with the values summed in sorted order, so the result does not
/// depend on the order samples arrive in.
pub(crate) fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut ys: Vec<f64> = rows.iter().map(|&r| self.y[r]).collect();
        let mean = order_free_mean(&mut ys);
        let sse: f64 = ys.iter().map(|v| (v - mean) * (v - mean)).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean });

        let min_leaf = self.params.min_samples_leaf;
        if depth >= self.params.max_depth || rows.len() < 2 * min_leaf || sse <= 0.0 {
            return id;
        }
        let Some(best) = self.best_split(&rows, sse) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[r][best.feature] <= best.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], sse: f64) -> Option<Candidate> {
        let features: Vec<usize> = if self.k_features < self.p {
            self.stream.subset(self.p, self.k_features)
        } else {
            (0..self.p).collect()
        };
        let m = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        let tol = TIE_TOLERANCE * sse;
        let mut best: Option<Candidate> = None;
        let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(m);
        for &f in &features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let total: f64 = sorted.iter().map(|s| s.1).sum();
            let mut left_sum = 0.0;
            for i in 1..m {
                left_sum += sorted[i - 1].1;
                if i < min_leaf || m - i < min_leaf {
                    continue;
                }
                let (lo, hi) = (sorted[i - 1].0, sorted[i].0);
                if lo >= hi {
                    continue;
                }
                let nl = i as f64;
                let nr = (m - i) as f64;
                let diff = left_sum / nl - (total - left_sum) / nr;
                let gain = nl * nr / m as f64 * diff * diff;
                let better = match &best {
                    None => gain > tol,
                    Some(b) => gain > b.gain + tol,
                };
                if better {
                    best = Some(Candidate {
                        feature: f,
                        threshold: midpoint(lo, hi),
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Midpoint of `lo < hi` that still separates them.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::predict;

    #[test]
    fn constant_target_is_single_leaf() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let t = tree_fit(&x, &[4.0; 3], &TreeParams::default(), 0).unwrap();
        assert_eq!(t.nodes(), &[Node::Leaf { value: 4.0 }]);
    }

    #[test]
    fn forced_split_at_midpoint() {
        let x = vec![vec![0.0], vec![1.0]];
        let params = TreeParams {
            max_depth: 1,
            ..TreeParams::default()
        };
        let t = tree_fit(&x, &[0.0, 1.0], &params, 0).unwrap();
        assert_eq!(
            t.nodes()[0],
            Node::Split {
                feature: 0,
                threshold: 0.5,
                left: 1,
                right: 2
            }
        );
        assert_eq!(predict(&t, &x).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn depth_zero_is_mean_leaf() {
        let x = vec![vec![0.0], vec![1.0], vec![5.0]];
        let params = TreeParams {
            max_depth: 0,
            ..TreeParams::default()
        };
        let t = tree_fit(&x, &[1.0, 2.0, 6.0], &params, 0).unwrap();
        assert_eq!(t.nodes(), &[Node::Leaf { value: 3.0 }]);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y = [0.0, 0.0, 0.0, 0.0, 0.0, 10.0];
        let params = TreeParams {
            max_depth: 3,
            min_samples_leaf: 2,
            feature_subsample: 1.0,
        };
        let t = tree_fit(&x, &y, &params, 0).unwrap();
        match t.nodes()[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 3.5),
            ref other => panic!("expected split, got {other:?}"),
        }
        assert!(t.depth() <= 3);
    }

    #[test]
    fn tie_prefers_lower_feature() {
        // both features separate the same rows
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let t = tree_fit(&x, &[0.0, 1.0], &TreeParams::default(), 0).unwrap();
        assert!(matches!(t.nodes()[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn adjacent_floats_keep_partition() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = vec![vec![a], vec![b]];
        let t = tree_fit(&x, &[0.0, 1.0], &TreeParams::default(), 0).unwrap();
        assert_eq!(predict(&t, &x).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn empty_and_ragged_inputs() {
        assert!(tree_fit(&[], &[], &TreeParams::default(), 0).is_err());
        assert!(tree_fit(&[vec![1.0], vec![]], &[1.0, 2.0], &TreeParams::default(), 0).is_err());
        let t = RegressionTree::leaf(3.5, 2);
        assert_eq!(predict(&t, &[vec![0.0, 1.0], vec![9.0, 9.0]]).unwrap(), vec![3.5, 3.5]);
        assert!(predict(&t, &[vec![0.0]]).is_err());
    }
}
