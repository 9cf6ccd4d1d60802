//! Report CSV and the summary table.
//!
//! The CSV starts with one `#` line of run metadata, then a header and one
//! row per imputer and fold, followed by one row per imputer with fold
//! `mean`. Floats are written in shortest round-trip form, so reading a
//! report back reproduces every value exactly.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{MibError, Result};
use crate::imputers::ImputerKind;

use super::benchmark::{BenchmarkReport, RunMetadata, ScoreRow, MIB_NAME};
use super::metrics::{DirectScores, IndirectScores};

const HEADER: [&str; 10] = [
    "imputer",
    "spec",
    "fold",
    "masked_mae",
    "masked_rmse",
    "n_cells",
    "train_masked_rmse",
    "pred_rmse_rf",
    "pred_rmse_gbt",
    "pred_rmse_lr",
];

pub const SUMMARY_COLUMNS: [&str; 5] = [
    "Masked MAE",
    "Masked RMSE",
    "Prediction RMSE (RF)",
    "Prediction RMSE (XGB)",
    "Prediction RMSE (LR)",
];

pub fn metadata_line(m: &RunMetadata) -> String {
    format!(
        "config_hash={} seed={} rate={} folds={} ridge_epsilon={} fj_mode={} data={}",
        m.config_hash, m.seed, m.rate, m.folds, m.ridge_epsilon, m.fj_mode, m.data
    )
}

fn parse_metadata(line: &str) -> Result<RunMetadata> {
    let bad = || MibError::Format(format!("report metadata line '{line}' is malformed"));
    let mut fields = std::collections::HashMap::new();
    let body = line.trim_start_matches('#').trim();
    // `data=` is last and may contain spaces
    let (head, data) = body.split_once(" data=").ok_or_else(bad)?;
    for kv in head.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(bad)?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(bad);
    Ok(RunMetadata {
        config_hash: get("config_hash")?.to_string(),
        seed: get("seed")?.parse().map_err(|_| bad())?,
        rate: get("rate")?.parse().map_err(|_| bad())?,
        folds: get("folds")?.parse().map_err(|_| bad())?,
        ridge_epsilon: get("ridge_epsilon")?.parse().map_err(|_| bad())?,
        fj_mode: get("fj_mode")?.parse()?,
        data: data.to_string(),
    })
}

fn record(r: &ScoreRow) -> Vec<String> {
    let opt = |f: fn(&IndirectScores) -> f64| r.indirect.as_ref().map_or_else(String::new, |s| f(s).to_string());
    vec![
        r.imputer.clone(),
        r.spec.clone(),
        r.fold.map_or_else(|| "mean".to_string(), |f| f.to_string()),
        r.direct.masked_mae.to_string(),
        r.direct.masked_rmse.to_string(),
        r.direct.n_cells.to_string(),
        r.train_masked_rmse.to_string(),
        opt(|s| s.pred_rmse_rf),
        opt(|s| s.pred_rmse_gbt),
        opt(|s| s.pred_rmse_lr),
    ]
}

pub fn write_report_csv<W: Write>(report: &BenchmarkReport, mut out: W) -> Result<()> {
    writeln!(out, "# {}", metadata_line(&report.metadata)).map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in report.folds.iter().chain(&report.aggregates) {
        w.write_record(record(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn report_to_string(report: &BenchmarkReport) -> Result<String> {
    let mut buf = Vec::new();
    write_report_csv(report, &mut buf)?;
    String::from_utf8(buf).map_err(|e| MibError::Format(e.to_string()))
}

pub fn parse_report_csv(text: &str) -> Result<BenchmarkReport> {
    let first = text.lines().next().unwrap_or_default();
    if !first.starts_with('#') {
        return Err(MibError::Format("report is missing its metadata line".into()));
    }
    let metadata = parse_metadata(first)?;
    let body = &text[first.len()..];
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.trim_start().as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(MibError::Format(format!("unexpected report header {header:?}")));
    }
    let (mut folds, mut aggregates) = (Vec::new(), Vec::new());
    for (lineno, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| MibError::Format(format!("report row {}: bad {what}", lineno + 1));
        let num = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(HEADER[i])) };
        let opt = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let indirect = match (opt(7)?, opt(8)?, opt(9)?) {
            (Some(rf), Some(gbt), Some(lr)) => Some(IndirectScores {
                pred_rmse_rf: rf,
                pred_rmse_gbt: gbt,
                pred_rmse_lr: lr,
            }),
            (None, None, None) => None,
            _ => return Err(bad("prediction columns")),
        };
        let fold = match &rec[2] {
            "mean" => None,
            f => Some(f.parse().map_err(|_| bad("fold"))?),
        };
        let row = ScoreRow {
            imputer: rec[0].to_string(),
            spec: rec[1].to_string(),
            fold,
            direct: DirectScores {
                masked_mae: num(3)?,
                masked_rmse: num(4)?,
                n_cells: rec[5].parse().map_err(|_| bad("n_cells"))?,
            },
            train_masked_rmse: num(6)?,
            indirect,
        };
        if row.fold.is_some() {
            folds.push(row);
        } else {
            aggregates.push(row);
        }
    }
    Ok(BenchmarkReport {
        metadata,
        folds,
        aggregates,
    })
}

pub fn display_label(imputer: &str) -> String {
    if imputer == MIB_NAME {
        return "MIB".to_string();
    }
    ImputerKind::from_name(imputer).map_or_else(|| imputer.to_string(), |k| k.label().to_string())
}

/// Fixed-width table of the aggregate rows.
pub fn summary_table(report: &BenchmarkReport) -> String {
    let labels: Vec<String> = report.aggregates.iter().map(|r| display_label(&r.imputer)).collect();
    let lw = labels.iter().map(String::len).chain([7]).max().unwrap_or(7);
    let mut s = String::new();
    let _ = writeln!(s, "# {}", metadata_line(&report.metadata));
    let _ = write!(s, "{:<lw$}", "Imputer");
    for c in SUMMARY_COLUMNS {
        let _ = write!(s, "  {c:>w$}", w = c.len());
    }
    s.push('\n');
    for (label, r) in labels.iter().zip(&report.aggregates) {
        let _ = write!(s, "{label:<lw$}");
        let ind = r.indirect.as_ref();
        let cells = [
            Some(r.direct.masked_mae),
            Some(r.direct.masked_rmse),
            ind.map(|i| i.pred_rmse_rf),
            ind.map(|i| i.pred_rmse_gbt),
            ind.map(|i| i.pred_rmse_lr),
        ];
        for (c, v) in SUMMARY_COLUMNS.iter().zip(cells) {
            let text = v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            let _ = write!(s, "  {text:>w$}", w = c.len());
        }
        s.push('\n');
    }
    s
}
