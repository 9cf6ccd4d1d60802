//! The stacked meta-imputer.
//!
//! Every artificially hidden cell `(i, j)` becomes one supervised example:
//! the design row is `[D̂_ij^(1), …, D̂_ij^(K), f_j]` where `D̂^(k)` is the
//! completion from base imputer `k` and `f_j` encodes the column (a one-hot
//! indicator of length `d`, optionally followed by the column's mean and
//! standard deviation). The target is the hidden true value. A single ridge
//! regression over all columns maps design rows to imputations.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::imputers::{self, column_mean, FittedImputer, ImputerSpec};
use crate::linalg::ridge_fit;
use crate::masking::Mask;

pub const DEFAULT_RIDGE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FjMode {
    #[default]
    OneHot,
    OneHotStats,
}

impl fmt::Display for FjMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FjMode::OneHot => "one-hot",
            FjMode::OneHotStats => "one-hot+stats",
        })
    }
}

impl FromStr for FjMode {
    type Err = MibError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "one-hot" | "onehot" => Ok(FjMode::OneHot),
            "one-hot+stats" | "onehot+stats" => Ok(FjMode::OneHotStats),
            other => Err(MibError::invalid(format!(
                "unknown fj mode '{other}'; expected one-hot or one-hot+stats"
            ))),
        }
    }
}

/// The column block `f_j` of the design row.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnFeatures {
    OneHot,
    /// Per-column `(mean, std)` appended after the one-hot indicator.
    OneHotStats(Vec<(f64, f64)>),
}

impl ColumnFeatures {
    /// Features for `mode`, with statistics taken from the observed cells of `m`.
    pub fn for_mode(mode: FjMode, m: &DataMatrix) -> Self {
        match mode {
            FjMode::OneHot => ColumnFeatures::OneHot,
            FjMode::OneHotStats => ColumnFeatures::OneHotStats(
                (0..m.n_cols())
                    .map(|j| {
                        let col = m.observed_column(j);
                        let mean = column_mean(&col).unwrap_or(0.0);
                        let var = if col.is_empty() {
                            0.0
                        } else {
                            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64
                        };
                        (mean, var.sqrt())
                    })
                    .collect(),
            ),
        }
    }

    pub fn mode(&self) -> FjMode {
        match self {
            ColumnFeatures::OneHot => FjMode::OneHot,
            ColumnFeatures::OneHotStats(_) => FjMode::OneHotStats,
        }
    }

    pub fn width(&self, d: usize) -> usize {
        match self {
            ColumnFeatures::OneHot => d,
            ColumnFeatures::OneHotStats(_) => d + 2,
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        match self {
            ColumnFeatures::OneHot => Ok(()),
            ColumnFeatures::OneHotStats(s) => MibError::check_dim(d, s.len()),
        }
    }

    fn push(&self, j: usize, d: usize, row: &mut Vec<f64>) {
        row.extend((0..d).map(|c| if c == j { 1.0 } else { 0.0 }));
        if let ColumnFeatures::OneHotStats(stats) = self {
            row.push(stats[j].0);
            row.push(stats[j].1);
        }
    }
}

/// Design matrix `x` (row-major, `len() x width`) with targets and the cell
/// each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaTrainingSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub positions: Vec<(usize, usize)>,
    pub k: usize,
    pub d: usize,
    pub features: ColumnFeatures,
}

impl MetaTrainingSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn width(&self) -> usize {
        self.k + self.features.width(self.d)
    }

    pub fn row(&self, z: usize) -> &[f64] {
        let w = self.width();
        &self.x[z * w..(z + 1) * w]
    }
}

fn check_completions(completions: &[DataMatrix], d: usize) -> Result<(usize, usize)> {
    let first = completions
        .first()
        .ok_or_else(|| MibError::invalid("meta-imputer needs at least one base completion"))?;
    let n = first.n_rows();
    for c in completions {
        MibError::check_dim(d, c.n_cols())?;
        MibError::check_dim(n, c.n_rows())?;
        if !c.is_complete() {
            return Err(MibError::invalid("base completions must be fully observed"));
        }
    }
    Ok((n, d))
}

/// Design rows for the given cells, concatenated row-major.
fn design_rows(
    completions: &[DataMatrix],
    cells: &[(usize, usize)],
    d: usize,
    features: &ColumnFeatures,
) -> Result<Vec<f64>> {
    let (n, d) = check_completions(completions, d)?;
    features.check(d)?;
    let width = completions.len() + features.width(d);
    let mut x = Vec::with_capacity(cells.len() * width);
    for &(i, j) in cells {
        if i >= n || j >= d {
            return Err(MibError::invalid(format!("cell ({i}, {j}) outside {n}x{d}")));
        }
        x.extend(completions.iter().map(|c| c.value(i, j)));
        features.push(j, d, &mut x);
    }
    Ok(x)
}

/// One-hot training set, rows in mask order.
pub fn assemble_training_set(completions: &[DataMatrix], mask: &Mask, d: usize) -> Result<MetaTrainingSet> {
    assemble_with_features(completions, mask, d, ColumnFeatures::OneHot)
}

pub fn assemble_with_features(
    completions: &[DataMatrix],
    mask: &Mask,
    d: usize,
    features: ColumnFeatures,
) -> Result<MetaTrainingSet> {
    let (n, _) = check_completions(completions, d)?;
    if mask.shape() != (n, d) {
        return Err(MibError::invalid(format!(
            "mask shape {:?} does not match completions {n}x{d}",
            mask.shape()
        )));
    }
    let positions: Vec<(usize, usize)> = mask.cells().iter().map(|c| (c.row, c.col)).collect();
    let x = design_rows(completions, &positions, d, &features)?;
    Ok(MetaTrainingSet {
        x,
        y: mask.cells().iter().map(|c| c.truth).collect(),
        positions,
        k: completions.len(),
        d,
        features,
    })
}

/// Fitted linear meta-model.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaModel {
    /// `K` imputer weights followed by the column-feature weights.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub ridge_epsilon: f64,
    /// Specs of the base imputers in design-row order; empty when the model
    /// was fit from bare completions.
    pub roster: Vec<ImputerSpec>,
    pub k: usize,
    pub d: usize,
    pub features: ColumnFeatures,
    /// Relative residual of the normal equations at fit time.
    pub normal_residual: f64,
}

pub fn fit_meta(ts: &MetaTrainingSet, ridge_epsilon: f64) -> Result<MetaModel> {
    if ts.is_empty() {
        return Err(MibError::Empty("meta training set has no rows".into()));
    }
    if !(ridge_epsilon >= 0.0 && ridge_epsilon.is_finite()) {
        return Err(MibError::invalid("ridge epsilon must be >= 0"));
    }
    if ts.x.iter().chain(&ts.y).any(|v| !v.is_finite()) {
        return Err(MibError::NonFinite("meta training set".into()));
    }
    let fit = ridge_fit(&ts.x, ts.len(), ts.width(), &ts.y, ridge_epsilon)?;
    Ok(MetaModel {
        weights: fit.weights,
        intercept: fit.intercept,
        ridge_epsilon,
        roster: Vec::new(),
        k: ts.k,
        d: ts.d,
        features: ts.features.clone(),
        normal_residual: fit.normal_residual,
    })
}

impl MetaModel {
    pub fn with_roster(mut self, roster: Vec<ImputerSpec>) -> Result<Self> {
        MibError::check_dim(self.k, roster.len())?;
        self.roster = roster;
        Ok(self)
    }

    /// `wᵀx + intercept` for one design row.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .fold(self.intercept, |acc, (w, v)| acc + w * v)
    }

    pub fn fitted_values(&self, ts: &MetaTrainingSet) -> Vec<f64> {
        (0..ts.len()).map(|z| self.predict_row(ts.row(z))).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("mib-meta-model 1\n");
        let _ = writeln!(s, "epsilon {}", self.ridge_epsilon);
        let _ = writeln!(s, "fj_mode {}", self.features.mode());
        let _ = writeln!(s, "d {}", self.d);
        let _ = writeln!(s, "k {}", self.k);
        for spec in &self.roster {
            let _ = writeln!(s, "imputer {spec}");
        }
        if let ColumnFeatures::OneHotStats(stats) = &self.features {
            for (m, sd) in stats {
                let _ = writeln!(s, "stat {m} {sd}");
            }
        }
        let _ = writeln!(s, "intercept {}", self.intercept);
        for w in &self.weights {
            let _ = writeln!(s, "weight {w}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| MibError::Format(format!("meta model: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("mib-meta-model 1") {
            return Err(bad("missing header".into()));
        }
        let num = |v: &str| -> Result<f64> { v.trim().parse().map_err(|_| bad(format!("bad number '{v}'"))) };
        let (mut eps, mut mode, mut d, mut k, mut intercept) = (None, None, None, None, None);
        let (mut roster, mut stats, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for line in lines {
            let (key, value) = line.split_once(' ').ok_or_else(|| bad(format!("bad line '{line}'")))?;
            match key {
                "epsilon" => eps = Some(num(value)?),
                "fj_mode" => mode = Some(value.parse::<FjMode>()?),
                "d" => d = Some(value.trim().parse::<usize>().map_err(|_| bad("bad d".into()))?),
                "k" => k = Some(value.trim().parse::<usize>().map_err(|_| bad("bad k".into()))?),
                "imputer" => roster.push(value.parse::<ImputerSpec>()?),
                "stat" => {
                    let (m, sd) = value.split_once(' ').ok_or_else(|| bad("bad stat".into()))?;
                    stats.push((num(m)?, num(sd)?));
                }
                "intercept" => intercept = Some(num(value)?),
                "weight" => weights.push(num(value)?),
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        let missing = |what: &str| bad(format!("missing {what}"));
        let (d, k) = (d.ok_or_else(|| missing("d"))?, k.ok_or_else(|| missing("k"))?);
        let features = match mode.ok_or_else(|| missing("fj_mode"))? {
            FjMode::OneHot => ColumnFeatures::OneHot,
            FjMode::OneHotStats => {
                MibError::check_dim(d, stats.len())?;
                ColumnFeatures::OneHotStats(stats)
            }
        };
        MibError::check_dim(k + features.width(d), weights.len())?;
        if !roster.is_empty() {
            MibError::check_dim(k, roster.len())?;
        }
        Ok(MetaModel {
            weights,
            intercept: intercept.ok_or_else(|| missing("intercept"))?,
            ridge_epsilon: eps.ok_or_else(|| missing("epsilon"))?,
            roster,
            k,
            d,
            features,
            normal_residual: f64::NAN,
        })
    }
}

/// Meta-model predictions at `cells`, given the `K` completions in roster order.
pub fn predict_meta(
    model: &MetaModel,
    completions: &[DataMatrix],
    cells: &[(usize, usize)],
    d: usize,
) -> Result<Vec<f64>> {
    MibError::check_dim(model.k, completions.len())?;
    MibError::check_dim(model.d, d)?;
    let x = design_rows(completions, cells, d, &model.features)?;
    let width = model.weights.len();
    Ok(x.chunks(width).map(|row| model.predict_row(row)).collect())
}

/// Completes `m` with the base imputers and the meta-model.
pub fn mib_complete(model: &MetaModel, base: &[FittedImputer], m: &DataMatrix) -> Result<DataMatrix> {
    if !model.roster.is_empty() {
        let specs: Vec<&ImputerSpec> = base.iter().map(|f| f.spec()).collect();
        if model.roster.iter().collect::<Vec<_>>() != specs {
            return Err(MibError::invalid("base imputers do not match the meta-model roster"));
        }
    }
    MibError::check_dim(model.k, base.len())?;
    if m.is_complete() {
        return Ok(m.clone());
    }
    let completions = base
        .par_iter()
        .map(|f| f.transform(m))
        .collect::<Result<Vec<_>>>()?;
    let cells = m.missing_cells();
    let values = predict_meta(model, &completions, &cells, m.n_cols())?;
    let mut out = m.clone();
    for (&(i, j), v) in cells.iter().zip(values) {
        if !v.is_finite() {
            return Err(MibError::NonFinite(format!("meta prediction at row {i}, column {j}")));
        }
        out.set(i, j, v);
    }
    Ok(out)
}

/// Base imputers together with the meta-model stacked on them.
#[derive(Debug, Clone)]
pub struct MibImputer {
    pub base: Vec<FittedImputer>,
    pub model: MetaModel,
    pub training_set: MetaTrainingSet,
}

impl MibImputer {
    /// Fits every roster imputer on `masked` (in parallel) and stacks them on
    /// the cells of `mask`.
    pub fn fit(
        masked: &DataMatrix,
        mask: &Mask,
        roster: &[ImputerSpec],
        ridge_epsilon: f64,
        fj_mode: FjMode,
    ) -> Result<Self> {
        let base = roster
            .par_iter()
            .map(|spec| imputers::fit(spec, masked))
            .collect::<Result<Vec<_>>>()?;
        Self::from_fitted(base, masked, mask, ridge_epsilon, fj_mode)
    }

    /// Stacks already fitted imputers; `masked` must be the matrix they were fit on.
    pub fn from_fitted(
        base: Vec<FittedImputer>,
        masked: &DataMatrix,
        mask: &Mask,
        ridge_epsilon: f64,
        fj_mode: FjMode,
    ) -> Result<Self> {
        let completions = base
            .par_iter()
            .map(|f| f.transform(masked))
            .collect::<Result<Vec<_>>>()?;
        let features = ColumnFeatures::for_mode(fj_mode, masked);
        let training_set = assemble_with_features(&completions, mask, masked.n_cols(), features)?;
        let model = fit_meta(&training_set, ridge_epsilon)?
            .with_roster(base.iter().map(|f| f.spec().clone()).collect())?;
        Ok(MibImputer {
            base,
            model,
            training_set,
        })
    }

    pub fn transform(&self, m: &DataMatrix) -> Result<DataMatrix> {
        mib_complete(&self.model, &self.base, m)
    }

    /// RMSE of the fitted values against the hidden truth.
    pub fn training_rmse(&self) -> f64 {
        let fitted = self.model.fitted_values(&self.training_set);
        let sse: f64 = fitted
            .iter()
            .zip(&self.training_set.y)
            .map(|(p, t)| (p - t).powi(2))
            .sum();
        (sse / self.training_set.len() as f64).sqrt()
    }
}
