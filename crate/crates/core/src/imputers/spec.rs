//! Imputer specifications and their textual form.
//!
//! A spec prints as `name` or `name(key=value,...)`, e.g.
//! `knn(k=5)` or `mf(rank=auto,reg=0.1,lr=0.01,epochs=200,seed=0)`, and parses
//! back from the same syntax. Missing keys take their defaults.

use std::fmt;
use std::str::FromStr;

use crate::error::{MibError, Result};

use super::{AutoencoderParams, GainParams, GbtParams, KnnParams, MfParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ImputerKind {
    Mean,
    Median,
    Mode,
    Knn,
    MatrixFactorization,
    GradientBoostedTrees,
    Autoencoder,
    Gain,
}

impl ImputerKind {
    pub const ALL: [ImputerKind; 8] = [
        ImputerKind::Mean,
        ImputerKind::Median,
        ImputerKind::Mode,
        ImputerKind::Knn,
        ImputerKind::GradientBoostedTrees,
        ImputerKind::MatrixFactorization,
        ImputerKind::Autoencoder,
        ImputerKind::Gain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImputerKind::Mean => "mean",
            ImputerKind::Median => "median",
            ImputerKind::Mode => "mode",
            ImputerKind::Knn => "knn",
            ImputerKind::MatrixFactorization => "mf",
            ImputerKind::GradientBoostedTrees => "gbt",
            ImputerKind::Autoencoder => "ae",
            ImputerKind::Gain => "gain",
        }
    }

    /// Row label used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            ImputerKind::Mean => "Mean",
            ImputerKind::Median => "Median",
            ImputerKind::Mode => "Mode",
            ImputerKind::Knn => "KNN",
            ImputerKind::MatrixFactorization => "Matrix Factorization",
            ImputerKind::GradientBoostedTrees => "Boosted Trees",
            ImputerKind::Autoencoder => "Autoencoder",
            ImputerKind::Gain => "GAIN",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "mean" => ImputerKind::Mean,
            "median" => ImputerKind::Median,
            "mode" => ImputerKind::Mode,
            "knn" => ImputerKind::Knn,
            "mf" | "matrix_factorization" => ImputerKind::MatrixFactorization,
            "gbt" | "xgboost" | "boosted_trees" => ImputerKind::GradientBoostedTrees,
            "ae" | "autoencoder" => ImputerKind::Autoencoder,
            "gain" => ImputerKind::Gain,
            _ => return None,
        })
    }

    pub fn valid_names() -> String {
        ImputerKind::ALL.map(ImputerKind::name).join(", ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImputerSpec {
    Mean,
    Median,
    Mode,
    Knn(KnnParams),
    MatrixFactorization(MfParams),
    GradientBoostedTrees(GbtParams),
    Autoencoder(AutoencoderParams),
    Gain(GainParams),
}

impl ImputerSpec {
    pub fn default_for(kind: ImputerKind) -> Self {
        match kind {
            ImputerKind::Mean => ImputerSpec::Mean,
            ImputerKind::Median => ImputerSpec::Median,
            ImputerKind::Mode => ImputerSpec::Mode,
            ImputerKind::Knn => ImputerSpec::Knn(KnnParams::default()),
            ImputerKind::MatrixFactorization => ImputerSpec::MatrixFactorization(MfParams::default()),
            ImputerKind::GradientBoostedTrees => ImputerSpec::GradientBoostedTrees(GbtParams::default()),
            ImputerKind::Autoencoder => ImputerSpec::Autoencoder(AutoencoderParams::default()),
            ImputerKind::Gain => ImputerSpec::Gain(GainParams::default()),
        }
    }

    /// All eight kinds with default hyperparameters.
    pub fn all_defaults() -> Vec<Self> {
        ImputerKind::ALL.into_iter().map(Self::default_for).collect()
    }

    /// The seven imputers stacked by the meta-model by default.
    pub fn meta_base_defaults() -> Vec<Self> {
        ImputerKind::ALL
            .into_iter()
            .filter(|&k| k != ImputerKind::GradientBoostedTrees)
            .map(Self::default_for)
            .collect()
    }

    pub fn kind(&self) -> ImputerKind {
        match self {
            ImputerSpec::Mean => ImputerKind::Mean,
            ImputerSpec::Median => ImputerKind::Median,
            ImputerSpec::Mode => ImputerKind::Mode,
            ImputerSpec::Knn(_) => ImputerKind::Knn,
            ImputerSpec::MatrixFactorization(_) => ImputerKind::MatrixFactorization,
            ImputerSpec::GradientBoostedTrees(_) => ImputerKind::GradientBoostedTrees,
            ImputerSpec::Autoencoder(_) => ImputerKind::Autoencoder,
            ImputerSpec::Gain(_) => ImputerKind::Gain,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ImputerSpec::Mean | ImputerSpec::Median | ImputerSpec::Mode => Ok(()),
            ImputerSpec::Knn(p) => p.validate(),
            ImputerSpec::MatrixFactorization(p) => p.validate(),
            ImputerSpec::GradientBoostedTrees(p) => p.validate(),
            ImputerSpec::Autoencoder(p) => p.validate(),
            ImputerSpec::Gain(p) => p.validate(),
        }
    }

    /// Sets one named hyperparameter.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<()> {
        let name = self.name();
        let known = match self {
            ImputerSpec::Mean | ImputerSpec::Median | ImputerSpec::Mode => false,
            ImputerSpec::Knn(p) => p.set(key, value)?,
            ImputerSpec::MatrixFactorization(p) => p.set(key, value)?,
            ImputerSpec::GradientBoostedTrees(p) => p.set(key, value)?,
            ImputerSpec::Autoencoder(p) => p.set(key, value)?,
            ImputerSpec::Gain(p) => p.set(key, value)?,
        };
        if known {
            Ok(())
        } else {
            Err(MibError::invalid(format!("imputer '{name}' has no parameter '{key}'")))
        }
    }

    /// Replaces the seed of the stochastic kinds; a no-op for the others.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ImputerSpec::MatrixFactorization(p) => p.seed = seed,
            ImputerSpec::GradientBoostedTrees(p) => p.seed = seed,
            ImputerSpec::Autoencoder(p) => p.train.seed = seed,
            ImputerSpec::Gain(p) => p.seed = seed,
            _ => {}
        }
        self
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ImputerSpec::MatrixFactorization(p) => Some(p.seed),
            ImputerSpec::GradientBoostedTrees(p) => Some(p.seed),
            ImputerSpec::Autoencoder(p) => Some(p.train.seed),
            ImputerSpec::Gain(p) => Some(p.seed),
            _ => None,
        }
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        match self {
            ImputerSpec::Mean | ImputerSpec::Median | ImputerSpec::Mode => Vec::new(),
            ImputerSpec::Knn(p) => p.pairs(),
            ImputerSpec::MatrixFactorization(p) => p.pairs(),
            ImputerSpec::GradientBoostedTrees(p) => p.pairs(),
            ImputerSpec::Autoencoder(p) => p.pairs(),
            ImputerSpec::Gain(p) => p.pairs(),
        }
    }
}

impl fmt::Display for ImputerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs = self.pairs();
        if pairs.is_empty() {
            return f.write_str(self.name());
        }
        let body: Vec<String> = pairs.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.name(), body.join(","))
    }
}

impl FromStr for ImputerSpec {
    type Err = MibError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let args = rest
                    .strip_suffix(')')
                    .ok_or_else(|| MibError::invalid(format!("unbalanced parentheses in '{s}'")))?;
                (name, Some(args))
            }
            None => (s, None),
        };
        let kind = ImputerKind::from_name(name).ok_or_else(|| {
            MibError::invalid(format!(
                "unknown imputer '{name}'; valid names: {}",
                ImputerKind::valid_names()
            ))
        })?;
        let mut spec = ImputerSpec::default_for(kind);
        for arg in args.into_iter().flat_map(|a| a.split(',')).filter(|a| !a.trim().is_empty()) {
            let (k, v) = arg
                .split_once('=')
                .ok_or_else(|| MibError::invalid(format!("expected key=value, found '{arg}'")))?;
            spec.set_param(k.trim(), v.trim())?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub(crate) fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| MibError::invalid(format!("cannot parse '{value}' for '{key}'")))
}

/// `auto` or a number.
pub(crate) fn parse_auto(key: &str, value: &str) -> Result<Option<usize>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

pub(crate) fn show_auto(v: Option<usize>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}
