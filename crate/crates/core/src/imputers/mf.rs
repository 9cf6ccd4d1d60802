//! Low-rank matrix factorization fit by SGD over observed cells.
//!
//! Minimizes `Σ_obs (D_ij − U_i·V_j)² + reg (‖U‖² + ‖V‖²)`. Factors start at
//! `uniform(−0.01, 0.01)`. Each epoch visits the observed cells in a fresh
//! seeded order and applies
//! `U_i += lr (e V_j − reg U_i)`, `V_j += lr (e U_i − reg V_j)` with
//! `e = D_ij − U_i·V_j`.
//!
//! Completing a matrix keeps the learned column factors `V` and refits each
//! row's factor by ridge regression on that row's observed cells
//! (`(V_Sᵀ V_S + reg I) u = V_Sᵀ x_S`), so the training matrix and unseen
//! rows are completed the same way.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::rng::{derive_seed, Stream};

use super::spec::{parse_auto, parse_value, show_auto};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfParams {
    /// `None` picks `min(8, d − 1)`, clamped to `[1, min(n, d)]`.
    pub rank: Option<usize>,
    pub reg: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MfParams {
    fn default() -> Self {
        MfParams {
            rank: None,
            reg: 0.1,
            learning_rate: 0.01,
            epochs: 200,
            seed: 0,
        }
    }
}

impl MfParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.rank == Some(0) {
            return Err(MibError::invalid("mf: rank must be >= 1"));
        }
        if !(self.reg > 0.0 && self.reg.is_finite()) {
            return Err(MibError::invalid("mf: reg must be > 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MibError::invalid("mf: lr must be > 0"));
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "rank" => self.rank = parse_auto(key, value)?,
            "reg" => self.reg = parse_value(key, value)?,
            "lr" => self.learning_rate = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub(crate) fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("rank", show_auto(self.rank)),
            ("reg", self.reg.to_string()),
            ("lr", self.learning_rate.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    pub fn resolved_rank(&self, n: usize, d: usize) -> usize {
        self.rank
            .unwrap_or_else(|| 8.min(d.saturating_sub(1)))
            .clamp(1, n.min(d).max(1))
    }
}

/// Row factors `u` (`n x rank`) and column factors `v` (`d x rank`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MfFactors {
    pub rank: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Objective at initialization, then after each epoch.
    pub losses: Vec<f64>,
}

impl MfFactors {
    pub fn predict(&self, row: usize, col: usize) -> f64 {
        let r = self.rank;
        dot(&self.u[row * r..(row + 1) * r], &self.v[col * r..(col + 1) * r])
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mf_fit(
    train: &DataMatrix,
    rank: usize,
    reg: f64,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<MfFactors> {
    let (n, d) = (train.n_rows(), train.n_cols());
    if rank == 0 || rank > n.min(d) {
        return Err(MibError::invalid(format!(
            "mf: rank {rank} must be in [1, min(n, d) = {}]",
            n.min(d)
        )));
    }
    MfParams {
        rank: Some(rank),
        reg,
        learning_rate: lr,
        epochs,
        seed,
    }
    .validate()?;

    let mut init = Stream::new(derive_seed(seed, &[0x1]));
    let mut u: Vec<f64> = (0..n * rank).map(|_| init.uniform_range(-0.01, 0.01)).collect();
    let mut v: Vec<f64> = (0..d * rank).map(|_| init.uniform_range(-0.01, 0.01)).collect();
    let cells: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..d).filter_map(move |j| train.get(i, j).map(|x| (i, j, x))))
        .collect();

    let objective = |u: &[f64], v: &[f64]| -> f64 {
        let fit: f64 = cells
            .iter()
            .map(|&(i, j, x)| {
                let e = x - dot(&u[i * rank..(i + 1) * rank], &v[j * rank..(j + 1) * rank]);
                e * e
            })
            .sum();
        fit + reg * (u.iter().map(|a| a * a).sum::<f64>() + v.iter().map(|a| a * a).sum::<f64>())
    };
    let mut losses = vec![objective(&u, &v)];

    let mut stream = Stream::new(derive_seed(seed, &[0x2]));
    let mut order: Vec<usize> = (0..cells.len()).collect();
    let mut ui_old = vec![0.0; rank];
    for _ in 0..epochs {
        stream.shuffle(&mut order);
        for &c in &order {
            let (i, j, x) = cells[c];
            let ui = i * rank..(i + 1) * rank;
            let vj = j * rank..(j + 1) * rank;
            let e = x - dot(&u[ui.clone()], &v[vj.clone()]);
            ui_old.copy_from_slice(&u[ui.clone()]);
            for (a, b) in u[ui].iter_mut().zip(&v[vj.clone()]) {
                *a += lr * (e * b - reg * *a);
            }
            for (b, a) in v[vj].iter_mut().zip(&ui_old) {
                *b += lr * (e * a - reg * *b);
            }
        }
        let loss = objective(&u, &v);
        if !loss.is_finite() {
            return Err(MibError::NonFinite("mf training loss".into()));
        }
        losses.push(loss);
    }
    Ok(MfFactors { rank, u, v, losses })
}

#[derive(Debug, Clone)]
pub struct MfImputer {
    rank: usize,
    reg: f64,
    v: Vec<f64>,
    pub factors: MfFactors,
}

impl MfImputer {
    pub fn fit(params: &MfParams, train: &DataMatrix) -> Result<Self> {
        params.validate()?;
        let rank = params.resolved_rank(train.n_rows(), train.n_cols());
        let factors = mf_fit(
            train,
            rank,
            params.reg,
            params.epochs,
            params.learning_rate,
            params.seed,
        )?;
        Ok(MfImputer {
            rank,
            reg: params.reg,
            v: factors.v.clone(),
            factors,
        })
    }

    /// Ridge fit of one row's factor against the column factors it observes.
    fn fold_in(&self, m: &DataMatrix, i: usize) -> Vec<f64> {
        let r = self.rank;
        let obs: Vec<usize> = (0..m.n_cols()).filter(|&j| m.is_observed(i, j)).collect();
        if obs.is_empty() {
            return vec![0.0; r];
        }
        let vs = DMatrix::from_fn(obs.len(), r, |a, b| self.v[obs[a] * r + b]);
        let xs = DVector::from_iterator(obs.len(), obs.iter().map(|&j| m.value(i, j)));
        let mut gram = vs.tr_mul(&vs);
        for k in 0..r {
            gram[(k, k)] += self.reg;
        }
        let rhs = vs.tr_mul(&xs);
        match gram.cholesky() {
            Some(ch) => ch.solve(&rhs).iter().copied().collect(),
            None => vec![0.0; r],
        }
    }

    pub fn transform(&self, m: &DataMatrix) -> Result<DataMatrix> {
        let r = self.rank;
        let rows: Vec<usize> = (0..m.n_rows()).filter(|&i| m.row_observed(i).contains(&false)).collect();
        let fills: Vec<Vec<(usize, f64)>> = rows
            .par_iter()
            .map(|&i| {
                let u = self.fold_in(m, i);
                (0..m.n_cols())
                    .filter(|&j| !m.is_observed(i, j))
                    .map(|j| (j, dot(&u, &self.v[j * r..(j + 1) * r])))
                    .collect()
            })
            .collect();
        let mut out = m.clone();
        for (&i, row) in rows.iter().zip(fills) {
            for (j, v) in row {
                out.set(i, j, v);
            }
        }
        Ok(out)
    }
}
