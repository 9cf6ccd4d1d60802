//! `mib`: mask, impute, benchmark and report on CSV data.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliResult;

#[derive(Parser)]
#[command(name = "mib", version, about = "Stacked meta-imputation of missing tabular data")]
struct Cli {
    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the data commands. A `--config` file overrides them.
#[derive(Args, Default)]
struct Common {
    /// Input CSV (header row, empty field = missing).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Name of the target column.
    #[arg(long)]
    target: Option<String>,
    /// Masking rate in [0, 1].
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list of imputer specs, e.g. `mean,knn(k=3),mib`.
    #[arg(long)]
    imputers: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` file, `#` comments allowed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `one-hot` or `one-hot+stats`.
    #[arg(long)]
    fj_mode: Option<String>,
    #[arg(long)]
    ridge_epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Hide a random fraction of observed cells; writes masked.csv and mask.csv.
    Mask(Common),
    /// Complete the missing cells with one method; writes imputed_<method>.csv.
    Impute {
        #[command(flatten)]
        common: Common,
        /// An imputer spec or `mib`.
        #[arg(long)]
        method: String,
        /// Sidecar from `mib mask` giving ground truth for the meta-model.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Fraction of observed cells hidden for the meta-model when no sidecar is given.
        #[arg(long)]
        self_mask_rate: Option<f64>,
    },
    /// Cross-validated benchmark; writes report.csv and summary.txt.
    Benchmark(Common),
    /// Print the summary table of a report CSV.
    Report {
        /// Path to report.csv.
        report: PathBuf,
    },
}

impl Common {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::default();
        let flags = [
            ("data", self.data.as_ref().map(|p| p.display().to_string())),
            ("target", self.target.clone()),
            ("rate", self.rate.map(|v| v.to_string())),
            ("folds", self.folds.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("imputers", self.imputers.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("fj_mode", self.fj_mode.clone()),
            ("ridge_epsilon", self.ridge_epsilon.map(|v| v.to_string())),
        ];
        for (k, v) in flags.iter().chain(extra) {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Mask(common) => {
            for p in commands::mask(&common.resolve(&[])?)? {
                println!("{}", p.display());
            }
        }
        Command::Impute {
            common,
            method,
            mask,
            self_mask_rate,
        } => {
            let cfg = common.resolve(&[("self_mask_rate", self_mask_rate.map(|v| v.to_string()))])?;
            println!("{}", commands::impute(&cfg, &method, mask.as_deref())?.display());
        }
        Command::Benchmark(common) => {
            let (paths, summary) = commands::benchmark(&common.resolve(&[])?)?;
            print!("{summary}");
            for p in paths {
                log::info!("wrote {}", p.display());
            }
        }
        Command::Report { report } => print!("{}", commands::report(&report)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mib: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
