//! The four subcommands. Each returns the paths it wrote, or the text to print.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;
use mib_core::data::{load_csv, save_csv, DataMatrix};
use mib_core::eval::{parse_report_csv, run_benchmark, summary_table, write_report_csv, BenchmarkConfig, DownstreamParams};
use mib_core::imputers::{self, ImputerSpec};
use mib_core::masking::{apply_mcar_mask, Mask, MaskedCell};
use mib_core::meta::MibImputer;
use mib_core::rng::{derive_seed, str_tag};
use mib_core::standardize::fit_standardizer;

use crate::config::{RunConfig, MIB_METHOD};
use crate::error::{CliError, CliResult};

fn load(cfg: &RunConfig) -> CliResult<DataMatrix> {
    let path = cfg.data_path()?;
    let m = load_csv(path, cfg.target.as_deref()).map_err(CliError::data)?;
    info!("loaded {} ({} rows, {} columns, {} missing)", path.display(), m.n_rows(), m.n_cols(), m.n_missing());
    Ok(m)
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Spec with its seed keyed off the run seed.
fn seeded(spec: ImputerSpec, seed: u64) -> ImputerSpec {
    match spec.seed() {
        Some(own) => {
            let s = derive_seed(seed, &[str_tag(spec.name()), own]);
            spec.with_seed(s)
        }
        None => spec,
    }
}

pub fn mask(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let data = load(cfg)?;
    let (masked, mask) = apply_mcar_mask(&data, cfg.rate, cfg.seed, true).map_err(CliError::runtime)?;
    let hash = cfg.hash("mask");
    let dir = out_dir(cfg)?;
    let data_out = dir.join("masked.csv");
    let mask_out = dir.join("mask.csv");
    let meta = format!("config_hash={hash} seed={} rate={} hidden={}", cfg.seed, cfg.rate, mask.len());
    save_csv(&masked, &data_out, Some(&meta)).map_err(CliError::runtime)?;
    mask.write_sidecar(create(&mask_out)?, Some(&format!("config_hash={hash}")))
        .map_err(CliError::runtime)?;
    info!("hid {} cells at rate {}", mask.len(), cfg.rate);
    Ok(vec![data_out, mask_out])
}

/// Reads a sidecar for `data` and checks its cells are the ones left empty.
fn read_mask(path: &Path, data: &DataMatrix) -> CliResult<Mask> {
    let mask = Mask::read_sidecar(path).map_err(CliError::data)?;
    if mask.shape() != (data.n_rows(), data.n_cols()) {
        return Err(CliError::Data(format!(
            "mask {} is {:?} but the data is {}x{}",
            path.display(),
            mask.shape(),
            data.n_rows(),
            data.n_cols()
        )));
    }
    if let Some(c) = mask.cells().iter().find(|c| data.is_observed(c.row, c.col)) {
        return Err(CliError::Data(format!(
            "masked cell ({}, {}) is not empty in the data",
            c.row, c.col
        )));
    }
    Ok(mask)
}

pub fn impute(cfg: &RunConfig, method: &str, sidecar: Option<&Path>) -> CliResult<PathBuf> {
    let is_mib = method.trim().eq_ignore_ascii_case(MIB_METHOD);
    // resolve the method before touching the data
    let spec = if is_mib { None } else { Some(seeded(cfg.spec(method)?, cfg.seed)) };
    let data = load(cfg)?;
    let scaler = fit_standardizer(&data);
    let z = scaler.apply(&data).map_err(CliError::runtime)?;

    let (label, completed, note) = match spec {
        Some(spec) => {
            let fitted = imputers::fit(&spec, &z).map_err(CliError::runtime)?;
            (spec.name().to_string(), fitted.transform(&z).map_err(CliError::runtime)?, spec.to_string())
        }
        None => {
            let base: Vec<ImputerSpec> = cfg.mib_base()?.into_iter().map(|s| seeded(s, cfg.seed)).collect();
            let (train, mask, note) = match sidecar {
                Some(p) => {
                    let raw = read_mask(p, &data)?;
                    let cells = raw
                        .cells()
                        .iter()
                        .map(|c| MaskedCell { truth: scaler.forward(c.col, c.truth), ..*c })
                        .collect();
                    let mask = Mask::from_cells(data.n_rows(), data.n_cols(), cells, raw.seed, raw.rate)
                        .map_err(CliError::data)?;
                    (z.clone(), mask, format!("mask={}", p.display()))
                }
                None => {
                    let seed = derive_seed(cfg.seed, &[str_tag("self-mask")]);
                    let (m, mask) = apply_mcar_mask(&z, cfg.self_mask_rate, seed, true).map_err(CliError::runtime)?;
                    (m, mask, format!("self_mask_rate={}", cfg.self_mask_rate))
                }
            };
            if mask.is_empty() {
                return Err(CliError::Data(
                    "no cells available to train the meta-model (nothing observed to self-mask, or an empty mask)".into(),
                ));
            }
            info!("meta-model trained on {} cells", mask.len());
            let mib = MibImputer::fit(&train, &mask, &base, cfg.ridge_epsilon, cfg.fj_mode).map_err(CliError::runtime)?;
            (MIB_METHOD.to_string(), mib.transform(&z).map_err(CliError::runtime)?, note)
        }
    };

    // observed cells keep their original bits; imputed ones go back to original units
    let mut out = data.clone();
    for (i, j) in data.missing_cells() {
        out.set(i, j, scaler.inverse(j, completed.value(i, j)));
    }
    let path = out_dir(cfg)?.join(format!("imputed_{label}.csv"));
    let meta = format!(
        "config_hash={} seed={} method={note} imputed={}",
        cfg.hash("impute"),
        cfg.seed,
        data.n_missing()
    );
    save_csv(&out, &path, Some(&meta)).map_err(CliError::runtime)?;
    Ok(path)
}

/// Runs the cross-validated benchmark; returns the written files and the summary.
pub fn benchmark(cfg: &RunConfig) -> CliResult<(Vec<PathBuf>, String)> {
    if cfg.target.is_none() {
        return Err(CliError::Config("benchmark needs a target column (--target or target=)".into()));
    }
    let (roster, mib_base) = cfg.roster()?;
    let bench = BenchmarkConfig {
        folds: cfg.folds,
        rate: cfg.rate,
        seed: cfg.seed,
        roster,
        mib_base,
        ridge_epsilon: cfg.ridge_epsilon,
        fj_mode: cfg.fj_mode,
        downstream: Some(DownstreamParams::default()),
        data_label: cfg.data_path()?.display().to_string(),
    };
    bench.validate().map_err(CliError::runtime)?;
    let data = load(cfg)?;
    if data.n_rows() < cfg.folds {
        return Err(CliError::Data(format!("{} rows cannot fill {} folds", data.n_rows(), cfg.folds)));
    }
    let report = run_benchmark(&data, &bench).map_err(CliError::runtime)?;
    let dir = out_dir(cfg)?;
    let report_path = dir.join("report.csv");
    write_report_csv(&report, create(&report_path)?).map_err(CliError::runtime)?;
    let summary = summary_table(&report);
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, &summary)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", summary_path.display())))?;
    Ok((vec![report_path, summary_path], summary))
}

pub fn report(path: &Path) -> CliResult<String> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let report = parse_report_csv(&text).map_err(CliError::data)?;
    Ok(summary_table(&report))
}
