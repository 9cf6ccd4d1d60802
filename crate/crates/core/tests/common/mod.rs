//! Synthetic data and brute-force oracles shared by the integration tests.
//!
//! The oracles are written from the definitions, not from the library code:
//! exhaustive neighbour-set search for KNN, exhaustive split search for
//! trees, plain gradient descent for ridge, and central differences for
//! network gradients.

#![allow(dead_code)]

use mib_core::data::DataMatrix;
use mib_core::neural::{DenseNet, Layer};
use mib_core::rng::Stream;
use mib_core::trees::{Node, RegressionTree};

/// `n x d` matrix of rank-`r` structure plus Gaussian noise; the last column is the target.
pub fn low_rank(n: usize, d: usize, r: usize, noise: f64, seed: u64) -> DataMatrix {
    let mut s = Stream::new(seed);
    let w: Vec<f64> = (0..r * d).map(|_| s.normal()).collect();
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<f64> = (0..r).map(|_| s.normal()).collect();
        for j in 0..d {
            let v: f64 = (0..r).map(|k| z[k] * w[k * d + j]).sum();
            values.push(v + noise * s.normal());
        }
    }
    let mut m = DataMatrix::from_dense(n, d, values).unwrap();
    m.set_target_col(Some(d - 1)).unwrap();
    m
}

/// Rank-1 matrix `a_i * b_j`, standardized column-wise so every column has mean 0, std 1.
pub fn rank_one_standardized(n: usize, d: usize, seed: u64) -> DataMatrix {
    let mut s = Stream::new(seed);
    let a: Vec<f64> = (0..n).map(|_| s.normal()).collect();
    let b: Vec<f64> = (0..d).map(|_| 0.5 + s.uniform()).collect();
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let sd_a = (a.iter().map(|v| (v - mean_a).powi(2)).sum::<f64>() / n as f64).sqrt();
    let values = (0..n * d).map(|k| (a[k / d] - mean_a) / sd_a * b[k % d].signum()).collect();
    DataMatrix::from_dense(n, d, values).unwrap()
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

// ---------------------------------------------------------------- KNN oracle

fn partial_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let d = a.len();
    let mut shared = 0;
    let mut acc = 0.0;
    for j in 0..d {
        if let (Some(x), Some(y)) = (a[j], b[j]) {
            acc += (x - y) * (x - y);
            shared += 1;
        }
    }
    (shared > 0).then(|| (d as f64 / shared as f64 * acc).sqrt())
}

fn row_cells(m: &DataMatrix, i: usize) -> Vec<Option<f64>> {
    (0..m.n_cols()).map(|j| m.get(i, j)).collect()
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (pos, &first) in items.iter().enumerate() {
        for mut rest in subsets(&items[pos + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Enumerates every candidate neighbour set of size `min(k, eligible)` and
/// keeps the one in which each chosen row beats each unchosen row on
/// (distance, row index).
pub fn knn_oracle(train: &DataMatrix, query: &DataMatrix, row: usize, col: usize, k: usize) -> f64 {
    let q = row_cells(query, row);
    let eligible: Vec<(usize, f64)> = (0..train.n_rows())
        .filter(|&t| train.is_observed(t, col))
        .filter_map(|t| partial_distance(&q, &row_cells(train, t)).map(|dist| (t, dist)))
        .collect();
    if eligible.is_empty() {
        let col_vals = train.observed_column(col);
        return col_vals.iter().sum::<f64>() / col_vals.len() as f64;
    }
    let idx: Vec<usize> = (0..eligible.len()).collect();
    let size = k.min(eligible.len());
    let key = |e: usize| (eligible[e].1, eligible[e].0);
    let chosen = subsets(&idx, size)
        .into_iter()
        .find(|set| {
            idx.iter().filter(|e| !set.contains(e)).all(|&u| {
                set.iter().all(|&c| {
                    let (kc, ku) = (key(c), key(u));
                    kc.0 < ku.0 || (kc.0 == ku.0 && kc.1 < ku.1)
                })
            })
        })
        .expect("a nearest set exists");
    let mut rows: Vec<usize> = chosen.iter().map(|&e| eligible[e].0).collect();
    rows.sort_unstable();
    rows.iter().map(|&t| train.value(t, col)).sum::<f64>() / size as f64
}

// --------------------------------------------------------------- tree oracle

fn sse(ys: &[f64]) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    ys.iter().map(|y| (y - mean).powi(2)).sum()
}

/// Best split by exhaustive search: every feature, every cut between
/// consecutive distinct values, gain = parent SSE − left SSE − right SSE.
/// Gains within `tol_frac * parent SSE` of the best are ties, resolved to the
/// lowest feature, then the lowest cut. Returns (feature, left upper value,
/// right lower value).
pub fn oracle_split(x: &[Vec<f64>], y: &[f64], rows: &[usize], tol_frac: f64) -> Option<(usize, f64, f64)> {
    let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let parent = sse(&ys);
    if parent <= 0.0 || rows.len() < 2 {
        return None;
    }
    let p = x[0].len();
    let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
    for f in 0..p {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let left: Vec<f64> = rows.iter().filter(|&&r| x[r][f] <= lo).map(|&r| y[r]).collect();
            let right: Vec<f64> = rows.iter().filter(|&&r| x[r][f] >= hi).map(|&r| y[r]).collect();
            cands.push((f, lo, hi, parent - sse(&left) - sse(&right)));
        }
    }
    let best = cands.iter().map(|c| c.3).fold(f64::NEG_INFINITY, f64::max);
    let tol = tol_frac * parent;
    if !(best > tol) {
        return None;
    }
    cands
        .into_iter()
        .filter(|c| c.3 >= best - tol)
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .map(|c| (c.0, c.1, c.2))
}

/// Checks `tree` node by node against the exhaustive oracle (min leaf 1).
pub fn tree_matches_oracle(tree: &RegressionTree, x: &[Vec<f64>], y: &[f64], max_depth: usize) -> Result<(), String> {
    fn walk(
        nodes: &[Node],
        id: usize,
        x: &[Vec<f64>],
        y: &[f64],
        rows: Vec<usize>,
        depth: usize,
        max_depth: usize,
    ) -> Result<(), String> {
        let expected = if depth >= max_depth { None } else { oracle_split(x, y, &rows, 1e-9) };
        match (&nodes[id], expected) {
            (Node::Leaf { value }, None) => {
                let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
                if (value - mean).abs() > 1e-12 * (1.0 + mean.abs()) {
                    return Err(format!("leaf {id}: value {value} vs mean {mean}"));
                }
                Ok(())
            }
            (
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                },
                Some((f, lo, hi)),
            ) => {
                if *feature != f || !(lo <= *threshold && *threshold < hi) {
                    return Err(format!(
                        "node {id}: split ({feature}, {threshold}) vs oracle ({f}, between {lo} and {hi})"
                    ));
                }
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= lo);
                walk(nodes, *left, x, y, l, depth + 1, max_depth)?;
                walk(nodes, *right, x, y, r, depth + 1, max_depth)
            }
            (node, exp) => Err(format!("node {id}: {node:?} vs oracle {exp:?}")),
        }
    }
    walk(tree.nodes(), 0, x, y, (0..x.len()).collect(), 0, max_depth)
}

// ------------------------------------------------------------- ridge oracle

/// Gradient descent on `‖Aw − y‖² + ε‖w‖²` with `A = [X | 1]` (intercept last),
/// step `1 / L` where `L` bounds the Hessian's largest eigenvalue.
pub fn ridge_gd(x: &[f64], n: usize, p: usize, y: &[f64], eps: f64, steps: usize) -> Vec<f64> {
    let q = p + 1;
    let a = |i: usize, j: usize| if j < p { x[i * p + j] } else { 1.0 };
    // power iteration for the top eigenvalue of AᵀA
    let mut v = vec![1.0; q];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let av: Vec<f64> = (0..n).map(|i| (0..q).map(|j| a(i, j) * v[j]).sum()).collect();
        let atav: Vec<f64> = (0..q).map(|j| (0..n).map(|i| a(i, j) * av[i]).sum()).collect();
        lambda = atav.iter().map(|t| t * t).sum::<f64>().sqrt();
        v = atav.iter().map(|t| t / lambda).collect();
    }
    let step = 1.0 / (2.0 * (lambda * 1.01 + eps));
    let mut w = vec![0.0; q];
    for _ in 0..steps {
        let r: Vec<f64> = (0..n).map(|i| (0..q).map(|j| a(i, j) * w[j]).sum::<f64>() - y[i]).collect();
        for j in 0..q {
            let g = 2.0 * (0..n).map(|i| a(i, j) * r[i]).sum::<f64>() + 2.0 * eps * w[j];
            w[j] -= step * g;
        }
    }
    w
}

// --------------------------------------------------- finite-difference oracle

/// Central-difference gradient of `upstream · net(x)` with respect to every
/// weight then bias, layer by layer, in storage order.
pub fn numeric_param_grad(net: &DenseNet, x: &[f64], upstream: &[f64], h: f64) -> Vec<f64> {
    let value = |layers: Vec<Layer>| -> f64 {
        let net = DenseNet::from_layers(layers).unwrap();
        net.forward(x).unwrap().iter().zip(upstream).map(|(o, u)| o * u).sum()
    };
    let mut out = Vec::new();
    for t in 0..net.layers().len() {
        for which in 0..2 {
            let len = if which == 0 {
                net.layers()[t].weights.len()
            } else {
                net.layers()[t].biases.len()
            };
            for k in 0..len {
                let mut plus = net.layers().to_vec();
                let mut minus = net.layers().to_vec();
                if which == 0 {
                    plus[t].weights[k] += h;
                    minus[t].weights[k] -= h;
                } else {
                    plus[t].biases[k] += h;
                    minus[t].biases[k] -= h;
                }
                out.push((value(plus) - value(minus)) / (2.0 * h));
            }
        }
    }
    out
}

/// Central-difference gradient with respect to the input.
pub fn numeric_input_grad(net: &DenseNet, x: &[f64], upstream: &[f64], h: f64) -> Vec<f64> {
    let value = |x: &[f64]| -> f64 { net.forward(x).unwrap().iter().zip(upstream).map(|(o, u)| o * u).sum() };
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (value(&p) - value(&m)) / (2.0 * h)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|)`, with both tiny counting as agreement.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Smallest |pre-activation| over every ReLU unit for input `x`.
pub fn min_relu_margin(net: &DenseNet, x: &[f64]) -> f64 {
    use mib_core::neural::Activation;
    let mut cur = x.to_vec();
    let mut margin = f64::INFINITY;
    for l in net.layers() {
        let z: Vec<f64> = (0..l.n_out)
            .map(|k| l.biases[k] + (0..l.n_in).map(|i| l.weights[k * l.n_in + i] * cur[i]).sum::<f64>())
            .collect();
        if l.activation == Activation::Relu {
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
        }
        cur = z.iter().map(|&v| l.activation.apply(v)).collect();
    }
    margin
}

/// Random net with 1 to 3 layers of width 1 to 8, random activations and
/// random (nonzero) biases.
pub fn random_net(seed: u64) -> DenseNet {
    use mib_core::neural::Activation;
    let mut s = Stream::new(seed);
    let depth = 1 + s.below(3);
    let widths: Vec<usize> = (0..=depth).map(|_| 1 + s.below(8)).collect();
    let acts = [Activation::Relu, Activation::Sigmoid, Activation::Identity, Activation::Tanh];
    let layers = (0..depth)
        .map(|t| {
            let (n_in, n_out) = (widths[t], widths[t + 1]);
            Layer::new(
                n_in,
                n_out,
                (0..n_in * n_out).map(|_| s.uniform_range(-1.0, 1.0)).collect(),
                (0..n_out).map(|_| s.uniform_range(-0.5, 0.5)).collect(),
                acts[s.below(4)],
            )
            .unwrap()
        })
        .collect();
    DenseNet::from_layers(layers).unwrap()
}

/// Flattens gradients in the same order as [`numeric_param_grad`].
pub fn flat_grads(g: &mib_core::neural::Gradients) -> Vec<f64> {
    g.layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

/// Max relative error between analytic and central-difference gradients
/// (parameters and input) for one random net and input.
pub fn gradient_check(seed: u64) -> f64 {
    let net = random_net(seed);
    let mut s = Stream::new(seed ^ 0xabc);
    let mut x: Vec<f64>;
    loop {
        x = (0..net.input_dim()).map(|_| s.uniform_range(-1.5, 1.5)).collect();
        if min_relu_margin(&net, &x) > 1e-3 {
            break;
        }
    }
    let upstream: Vec<f64> = (0..net.output_dim()).map(|_| s.uniform_range(-1.0, 1.0)).collect();
    let (grads, dx) = net.backward(&x, &upstream).unwrap();
    let analytic = flat_grads(&grads);
    let numeric = numeric_param_grad(&net, &x, &upstream, 1e-5);
    let numeric_dx = numeric_input_grad(&net, &x, &upstream, 1e-5);
    analytic
        .iter()
        .zip(&numeric)
        .chain(dx.iter().zip(&numeric_dx))
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

// ------------------------------------------------------ random small instances

/// Tree instance with values on a coarse grid, so equal values and tied
/// gains are common: `(x, y, max_depth)` with `n <= 8`.
pub fn tree_instance(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, usize) {
    let mut s = Stream::new(seed);
    let n = 1 + s.below(8);
    let p = 1 + s.below(3);
    let x = (0..n)
        .map(|_| (0..p).map(|_| s.below(5) as f64 * 0.5).collect())
        .collect();
    let y = (0..n).map(|_| s.below(7) as f64 - 3.0).collect();
    (x, y, s.below(3))
}

/// Matrix with `n <= 8` rows, grid values and about a quarter of cells missing, plus `k`.
pub fn knn_instance(seed: u64) -> (DataMatrix, usize) {
    let mut s = Stream::new(seed);
    let n = 1 + s.below(8);
    let d = 2 + s.below(3);
    let rows: Vec<Vec<Option<f64>>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| (s.uniform() > 0.25).then(|| s.below(4) as f64))
                .collect()
        })
        .collect();
    let names = (0..d).map(|j| format!("c{j}")).collect();
    (DataMatrix::from_cells(names, &rows, None).unwrap(), 1 + s.below(4))
}

/// Short column on a coarse grid, so the mode has real ties.
pub fn grid_column(s: &mut Stream) -> Vec<f64> {
    let len = 1 + s.below(12);
    (0..len).map(|_| (s.below(6) as f64 - 2.0) * 0.25).collect()
}

/// Mean, lower median and smallest most-frequent value, by brute force.
pub fn column_stats_oracle(col: &[f64]) -> (f64, f64, f64) {
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    let mut sorted = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[(col.len() - 1) / 2];
    let mut mode = sorted[0];
    let mut best = 0;
    for &v in &sorted {
        let c = col.iter().filter(|&&u| u == v).count();
        if c > best {
            best = c;
            mode = v;
        }
    }
    (mean, median, mode)
}
