//! k-fold benchmark of the base imputers and the meta-imputer.
//!
//! Per fold: split rows, standardize with statistics of the training rows,
//! hide cells of both parts independently, fit every imputer on the masked
//! training part, complete both parts, score the test mask directly and the
//! target column indirectly through downstream models. The meta-imputer is
//! stacked on the training mask. Seeds of masks, imputers and downstream
//! models are derived from the run seed and the fold, so adding or removing
//! an imputer does not change anything else.

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::folds::make_fold_plan;
use crate::imputers::{self, FittedImputer, ImputerSpec};
use crate::masking::{apply_mcar_mask, Mask};
use crate::meta::{FjMode, MibImputer, DEFAULT_RIDGE_EPSILON};
use crate::rng::{derive_seed, str_tag};
use crate::standardize::fit_standardizer;

use super::metrics::{direct_scores, indirect_scores, DirectScores, DownstreamParams, IndirectScores};

pub const MIB_NAME: &str = "mib";

const ROLE_TRAIN_MASK: u64 = 0;
const ROLE_TEST_MASK: u64 = 1;
const ROLE_IMPUTER: u64 = 2;
const ROLE_DOWNSTREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub folds: usize,
    pub rate: f64,
    pub seed: u64,
    /// Imputers scored on their own.
    pub roster: Vec<ImputerSpec>,
    /// Base imputers stacked by the meta-imputer; `None` leaves it out.
    pub mib_base: Option<Vec<ImputerSpec>>,
    pub ridge_epsilon: f64,
    pub fj_mode: FjMode,
    /// `None` skips the indirect scores.
    pub downstream: Option<DownstreamParams>,
    /// Recorded in the report metadata only.
    pub data_label: String,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            folds: 5,
            rate: 0.1,
            seed: 42,
            roster: ImputerSpec::all_defaults(),
            mib_base: Some(ImputerSpec::meta_base_defaults()),
            ridge_epsilon: DEFAULT_RIDGE_EPSILON,
            fj_mode: FjMode::OneHot,
            downstream: Some(DownstreamParams::default()),
            data_label: String::new(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(MibError::invalid(format!("rate {} outside [0, 1]", self.rate)));
        }
        if self.folds < 2 {
            return Err(MibError::invalid("folds must be >= 2"));
        }
        if self.roster.is_empty() && self.mib_base.is_none() {
            return Err(MibError::invalid("imputer roster is empty"));
        }
        if matches!(&self.mib_base, Some(base) if base.is_empty()) {
            return Err(MibError::invalid("meta-imputer needs at least one base imputer"));
        }
        self.roster
            .iter()
            .chain(self.mib_base.iter().flatten())
            .try_for_each(ImputerSpec::validate)
    }

    /// Stable text form of every setting that affects results.
    pub fn canonical_text(&self) -> String {
        let mut lines = vec![
            format!("folds={}", self.folds),
            format!("rate={}", self.rate),
            format!("seed={}", self.seed),
            format!(
                "roster={}",
                self.roster.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
            ),
            format!(
                "mib_base={}",
                self.mib_base.as_ref().map_or_else(
                    || "none".to_string(),
                    |b| b.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
                )
            ),
            format!("ridge_epsilon={}", self.ridge_epsilon),
            format!("fj_mode={}", self.fj_mode),
        ];
        lines.push(match &self.downstream {
            Some(p) => format!(
                "downstream=forest({},{},{},{:?});boost({},{},{});lr({});seed({})",
                p.forest.n_trees,
                p.forest.max_depth,
                p.forest.min_samples_leaf,
                p.forest.feature_subsample,
                p.boost.n_trees,
                p.boost.max_depth,
                p.boost.learning_rate,
                p.lr_epsilon,
                p.seed
            ),
            None => "downstream=none".to_string(),
        });
        lines.push(format!("data={}", self.data_label));
        lines.join("\n")
    }

    /// First 16 hex digits of the SHA-256 of [`canonical_text`](Self::canonical_text).
    pub fn hash(&self) -> String {
        config_hash(&self.canonical_text())
    }
}

pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Scores of one imputer on one fold, or their fold means.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    /// Short imputer name (`mean`, …, `mib`).
    pub imputer: String,
    /// Full spec text; for the meta-imputer, its base roster.
    pub spec: String,
    /// `None` for the aggregate row.
    pub fold: Option<usize>,
    pub direct: DirectScores,
    /// RMSE on the training mask of the training completion.
    pub train_masked_rmse: f64,
    pub indirect: Option<IndirectScores>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub rate: f64,
    pub folds: usize,
    pub ridge_epsilon: f64,
    pub fj_mode: FjMode,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub metadata: RunMetadata,
    /// Imputer-major, then fold order.
    pub folds: Vec<ScoreRow>,
    /// One per imputer, same order.
    pub aggregates: Vec<ScoreRow>,
}

impl BenchmarkReport {
    pub fn aggregate(&self, imputer: &str) -> Option<&ScoreRow> {
        self.aggregates.iter().find(|r| r.imputer == imputer)
    }

    pub fn fold_rows<'a>(&'a self, imputer: &'a str) -> impl Iterator<Item = &'a ScoreRow> + 'a {
        self.folds.iter().filter(move |r| r.imputer == imputer)
    }
}

/// Fold means of every metric, summing in fold order.
pub fn aggregate_rows(rows: &[&ScoreRow]) -> ScoreRow {
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&ScoreRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
    let indirect = rows.iter().all(|r| r.indirect.is_some()).then(|| IndirectScores {
        pred_rmse_rf: mean(&|r| r.indirect.unwrap().pred_rmse_rf),
        pred_rmse_gbt: mean(&|r| r.indirect.unwrap().pred_rmse_gbt),
        pred_rmse_lr: mean(&|r| r.indirect.unwrap().pred_rmse_lr),
    });
    ScoreRow {
        imputer: rows[0].imputer.clone(),
        spec: rows[0].spec.clone(),
        fold: None,
        direct: DirectScores {
            masked_mae: mean(&|r| r.direct.masked_mae),
            masked_rmse: mean(&|r| r.direct.masked_rmse),
            n_cells: rows.iter().map(|r| r.direct.n_cells).sum(),
        },
        train_masked_rmse: mean(&|r| r.train_masked_rmse),
        indirect,
    }
}

fn masked_rmse(imputed: &DataMatrix, mask: &Mask) -> Result<f64> {
    if mask.is_empty() {
        return Ok(0.0);
    }
    Ok(direct_scores(imputed, mask)?.masked_rmse)
}

/// Spec with its seed derived from the run seed, the fold and its own seed.
fn seeded(spec: &ImputerSpec, seed: u64, fold: usize) -> ImputerSpec {
    match spec.seed() {
        Some(own) => spec.clone().with_seed(derive_seed(
            seed,
            &[fold as u64, ROLE_IMPUTER, str_tag(spec.name()), own],
        )),
        None => spec.clone(),
    }
}

fn tag<T>(r: Result<T>, imputer: &str, fold: usize) -> Result<T> {
    r.map_err(|e| MibError::Imputer {
        imputer: imputer.to_string(),
        fold,
        source: Box::new(e),
    })
}

/// Rows whose target was observed in the source data.
fn rows_with_target(m: &DataMatrix, source: &DataMatrix, t: usize) -> Result<DataMatrix> {
    let keep: Vec<usize> = (0..source.n_rows()).filter(|&i| source.is_observed(i, t)).collect();
    m.select_rows(&keep)
}

struct Completed {
    name: String,
    spec: String,
    train: DataMatrix,
    test: DataMatrix,
}

fn run_fold(data: &DataMatrix, cfg: &BenchmarkConfig, fold: usize, train_rows: &[usize], test_rows: &[usize]) -> Result<Vec<ScoreRow>> {
    let train_raw = data.select_rows(train_rows)?;
    let test_raw = data.select_rows(test_rows)?;
    let scaler = fit_standardizer(&train_raw);
    let train = scaler.apply(&train_raw)?;
    let test = scaler.apply(&test_raw)?;
    let f = fold as u64;
    let (train_m, train_mask) = apply_mcar_mask(&train, cfg.rate, derive_seed(cfg.seed, &[f, ROLE_TRAIN_MASK]), true)?;
    let (test_m, test_mask) = apply_mcar_mask(&test, cfg.rate, derive_seed(cfg.seed, &[f, ROLE_TEST_MASK]), true)?;
    info!(
        "fold {fold}: {} train rows ({} hidden), {} test rows ({} hidden)",
        train_rows.len(),
        train_mask.len(),
        test_rows.len(),
        test_mask.len()
    );

    // fit each distinct spec once
    let mut distinct: BTreeMap<String, ImputerSpec> = BTreeMap::new();
    for spec in cfg.roster.iter().chain(cfg.mib_base.iter().flatten()) {
        let s = seeded(spec, cfg.seed, fold);
        distinct.entry(s.to_string()).or_insert(s);
    }
    let fitted: BTreeMap<String, FittedImputer> = distinct
        .par_iter()
        .map(|(key, spec)| Ok((key.clone(), tag(imputers::fit(spec, &train_m), spec.name(), fold)?)))
        .collect::<Result<_>>()?;

    let mut jobs: Vec<(String, String, Option<&FittedImputer>)> = cfg
        .roster
        .iter()
        .map(|spec| {
            let key = seeded(spec, cfg.seed, fold).to_string();
            (spec.name().to_string(), spec.to_string(), Some(&fitted[&key]))
        })
        .collect();
    let mib = match &cfg.mib_base {
        Some(base) => {
            let base: Vec<FittedImputer> = base
                .iter()
                .map(|s| fitted[&seeded(s, cfg.seed, fold).to_string()].clone())
                .collect();
            let stacked = MibImputer::from_fitted(base, &train_m, &train_mask, cfg.ridge_epsilon, cfg.fj_mode);
            let roster_text: Vec<String> = cfg.mib_base.iter().flatten().map(ToString::to_string).collect();
            jobs.push((MIB_NAME.to_string(), roster_text.join(";"), None));
            Some(tag(stacked, MIB_NAME, fold)?)
        }
        None => None,
    };

    let completed = jobs
        .par_iter()
        .map(|(name, spec, f)| {
            let (tr, te) = match f {
                Some(f) => (f.transform(&train_m), f.transform(&test_m)),
                None => {
                    let mib = mib.as_ref().expect("meta-imputer fitted");
                    (mib.transform(&train_m), mib.transform(&test_m))
                }
            };
            Ok(Completed {
                name: name.clone(),
                spec: spec.clone(),
                train: tag(tr, name, fold)?,
                test: tag(te, name, fold)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let target = data.target_col();
    completed
        .par_iter()
        .map(|c| {
            let direct = tag(direct_scores(&c.test, &test_mask), &c.name, fold)?;
            let train_masked_rmse = masked_rmse(&c.train, &train_mask)?;
            let indirect = match (&cfg.downstream, target) {
                (Some(params), Some(t)) => {
                    let tr = rows_with_target(&c.train, &train, t)?;
                    let te = rows_with_target(&c.test, &test, t)?;
                    let params = DownstreamParams {
                        seed: derive_seed(cfg.seed, &[f, ROLE_DOWNSTREAM, params.seed]),
                        ..*params
                    };
                    Some(tag(indirect_scores(&tr, &te, t, &params), &c.name, fold)?)
                }
                _ => None,
            };
            Ok(ScoreRow {
                imputer: c.name.clone(),
                spec: c.spec.clone(),
                fold: Some(fold),
                direct,
                train_masked_rmse,
                indirect,
            })
        })
        .collect()
}

/// Runs the full k-fold protocol on the raw (unstandardized) `data`.
pub fn run_benchmark(data: &DataMatrix, cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if cfg.downstream.is_some() && data.target_col().is_none() {
        return Err(MibError::invalid("indirect scores need a target column"));
    }
    let plan = make_fold_plan(data.n_rows(), cfg.folds, cfg.seed)?;
    let per_fold = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| {
            let (train_rows, test_rows) = plan.split(fold);
            run_fold(data, cfg, fold, &train_rows, &test_rows)
        })
        .collect::<Result<Vec<_>>>()?;

    let n_imputers = per_fold[0].len();
    let mut folds = Vec::with_capacity(n_imputers * cfg.folds);
    let mut aggregates = Vec::with_capacity(n_imputers);
    for k in 0..n_imputers {
        let rows: Vec<&ScoreRow> = per_fold.iter().map(|f| &f[k]).collect();
        aggregates.push(aggregate_rows(&rows));
        folds.extend(rows.into_iter().cloned());
    }
    Ok(BenchmarkReport {
        metadata: RunMetadata {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            rate: cfg.rate,
            folds: cfg.folds,
            ridge_epsilon: cfg.ridge_epsilon,
            fj_mode: cfg.fj_mode,
            data: cfg.data_label.clone(),
        },
        folds,
        aggregates,
    })
}
