//! Run configuration: defaults, then command-line flags, then the optional
//! `key=value` config file (which wins).
//!
//! Besides the plain settings, a config file can set hyperparameters of one
//! imputer kind with `<kind>.<param>=<value>`, e.g. `knn.k=3`; these apply to
//! every spec of that kind, including the meta-imputer's base roster.

use std::path::{Path, PathBuf};

use mib_core::eval::config_hash;
use mib_core::imputers::{ImputerKind, ImputerSpec};
use mib_core::meta::{FjMode, DEFAULT_RIDGE_EPSILON};
use mib_core::MibError;

use crate::error::{CliError, CliResult};

pub const MIB_METHOD: &str = "mib";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub target: Option<String>,
    pub rate: f64,
    pub folds: usize,
    pub seed: u64,
    /// Raw roster entries; `mib` stands for the meta-imputer.
    pub imputers: Option<Vec<String>>,
    pub overrides: Vec<(ImputerKind, String, String)>,
    pub out: PathBuf,
    pub ridge_epsilon: f64,
    pub fj_mode: FjMode,
    /// Fraction of observed cells hidden to train the meta-model when
    /// imputing without a mask sidecar.
    pub self_mask_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            target: None,
            rate: 0.1,
            folds: 5,
            seed: 42,
            imputers: None,
            overrides: Vec::new(),
            out: PathBuf::from("mib-out"),
            ridge_epsilon: DEFAULT_RIDGE_EPSILON,
            fj_mode: FjMode::OneHot,
            self_mask_rate: 0.1,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse '{value}' for '{key}'")))
}

/// Splits a comma list, keeping commas inside parentheses.
pub fn split_list(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        match key.trim() {
            "data" => self.data = Some(PathBuf::from(value)),
            "target" => self.target = Some(value.to_string()),
            "rate" => self.rate = parse(key, value)?,
            "folds" => self.folds = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "imputers" => self.imputers = Some(split_list(value)),
            "out" => self.out = PathBuf::from(value),
            "ridge_epsilon" => self.ridge_epsilon = parse(key, value)?,
            "fj_mode" => self.fj_mode = value.parse().map_err(|e: MibError| CliError::Config(e.to_string()))?,
            "self_mask_rate" => self.self_mask_rate = parse(key, value)?,
            other => {
                let (kind, param) = other
                    .split_once('.')
                    .and_then(|(k, p)| ImputerKind::from_name(k).map(|k| (k, p)))
                    .ok_or_else(|| CliError::Config(format!("unknown config key '{other}'")))?;
                // reject unknown parameters now rather than at fit time
                ImputerSpec::default_for(kind)
                    .set_param(param, value)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                self.overrides.push((kind, param.to_string(), value.to_string()));
            }
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| CliError::Config(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(0.0..=1.0).contains(&self.rate) {
            return bad(format!("rate {} outside [0, 1]", self.rate));
        }
        if !(0.0..=1.0).contains(&self.self_mask_rate) {
            return bad(format!("self_mask_rate {} outside [0, 1]", self.self_mask_rate));
        }
        if self.folds < 2 {
            return bad("folds must be >= 2".into());
        }
        if !(self.ridge_epsilon >= 0.0 && self.ridge_epsilon.is_finite()) {
            return bad("ridge_epsilon must be >= 0".into());
        }
        if matches!(&self.imputers, Some(v) if v.is_empty()) {
            return bad("imputer roster is empty".into());
        }
        Ok(())
    }

    pub fn data_path(&self) -> CliResult<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Config("no input data (use --data or data=)".into()))
    }

    /// Parses one spec and applies the per-kind overrides.
    pub fn spec(&self, text: &str) -> CliResult<ImputerSpec> {
        let mut spec: ImputerSpec = text.parse().map_err(|e: MibError| {
            CliError::Config(format!("{e} (or '{MIB_METHOD}')"))
        })?;
        for (kind, k, v) in &self.overrides {
            if *kind == spec.kind() {
                spec.set_param(k, v).map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    /// Default meta-imputer base roster with overrides applied.
    pub fn mib_base(&self) -> CliResult<Vec<ImputerSpec>> {
        ImputerSpec::meta_base_defaults()
            .iter()
            .map(|s| self.spec(&s.to_string()))
            .collect()
    }

    /// Standalone imputers and, when `mib` is listed, the meta-imputer base.
    pub fn roster(&self) -> CliResult<(Vec<ImputerSpec>, Option<Vec<ImputerSpec>>)> {
        let names: Vec<String> = match &self.imputers {
            Some(v) => v.clone(),
            None => ImputerSpec::all_defaults()
                .iter()
                .map(ToString::to_string)
                .chain([MIB_METHOD.to_string()])
                .collect(),
        };
        let mut roster = Vec::new();
        let mut with_mib = false;
        for n in &names {
            if n.eq_ignore_ascii_case(MIB_METHOD) {
                with_mib = true;
            } else {
                roster.push(self.spec(n)?);
            }
        }
        let base = if with_mib { Some(self.mib_base()?) } else { None };
        Ok((roster, base))
    }

    /// Every setting that affects outputs, one `key=value` per line.
    pub fn canonical_text(&self, command: &str) -> String {
        let mut lines = vec![
            format!("command={command}"),
            format!("data={}", self.data.as_deref().map(|p| p.display().to_string()).unwrap_or_default()),
            format!("target={}", self.target.as_deref().unwrap_or("")),
            format!("rate={}", self.rate),
            format!("folds={}", self.folds),
            format!("seed={}", self.seed),
            format!("imputers={}", self.imputers.as_ref().map(|v| v.join(";")).unwrap_or_default()),
            format!("ridge_epsilon={}", self.ridge_epsilon),
            format!("fj_mode={}", self.fj_mode),
            format!("self_mask_rate={}", self.self_mask_rate),
        ];
        lines.extend(self.overrides.iter().map(|(k, p, v)| format!("{}.{p}={v}", k.name())));
        lines.join("\n")
    }

    pub fn hash(&self, command: &str) -> String {
        config_hash(&self.canonical_text(command))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_split_respects_parentheses() {
        assert_eq!(split_list("mean, knn(k=3), mf(rank=2,reg=0.5) ,mib"), vec!["mean", "knn(k=3)", "mf(rank=2,reg=0.5)", "mib"]);
        assert!(split_list(" ").is_empty());
    }

    #[test]
    fn file_text_with_comments_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nrate = 0.2\n\nimputers=mean,knn,mib\nknn.k=3\nfj_mode=one-hot+stats\n").unwrap();
        assert_eq!(c.rate, 0.2);
        assert_eq!(c.fj_mode, FjMode::OneHotStats);
        let (roster, base) = c.roster().unwrap();
        assert_eq!(roster[1].to_string(), "knn(k=3)");
        assert!(base.unwrap().iter().any(|s| s.to_string() == "knn(k=3)"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_text("colour=blue"), Err(CliError::Config(_))));
        assert!(matches!(c.apply_text("knn.j=3"), Err(CliError::Config(_))));
        assert!(matches!(c.apply_text("rate"), Err(CliError::Config(_))));
        assert!(matches!(c.apply_text("folds=two"), Err(CliError::Config(_))));
    }

    #[test]
    fn validation() {
        let c = RunConfig { rate: 1.5, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { folds: 1, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { imputers: Some(vec![]), ..RunConfig::default() };
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn default_roster_is_eight_plus_mib() {
        let (roster, base) = RunConfig::default().roster().unwrap();
        assert_eq!(roster.len(), 8);
        assert_eq!(base.unwrap().len(), 7);
    }

    #[test]
    fn hash_depends_on_command_and_settings() {
        let a = RunConfig::default();
        let b = RunConfig { seed: 1, ..RunConfig::default() };
        assert_ne!(a.hash("mask"), a.hash("impute"));
        assert_ne!(a.hash("mask"), b.hash("mask"));
        assert_eq!(a.hash("mask").len(), 16);
    }
}
