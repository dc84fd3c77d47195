//! Experiment configuration: defaults, then a key=value file, then flags.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TolerancesConfig {
    pub quadrature: f64,
    /// Relative to `max a`.
    pub step: f64,
    /// Relative to `max a`.
    pub residual: f64,
    pub bisection: f64,
    pub eigen: f64,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        Self { quadrature: 1e-10, step: 1e-11, residual: 1e-8, bisection: 1e-3, eigen: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub s: f64,
    pub dim: usize,
    pub kappa: f64,
    pub gamma: f64,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_grid: Vec<f64>,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub profile: Option<PathBuf>,
    pub quick: bool,
    pub seed: u64,
    pub nodes: usize,
    /// Expected grid hash, when rerunning from a manifest.
    pub grid_hash: Option<u64>,
    pub tolerances: TolerancesConfig,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: String::new(),
            s: 0.75,
            dim: 1,
            kappa: 1.0,
            gamma: 0.5,
            tau: None,
            lambda: None,
            lambda_grid: Vec::new(),
            window_lo: None,
            window_hi: None,
            profile: None,
            quick: false,
            seed: 20240611,
            nodes: 256,
            grid_hash: None,
            tolerances: TolerancesConfig::default(),
            out_dir: PathBuf::from("out"),
            threads: 0,
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| CliError::Config { line, message: format!("cannot parse {key} = {value:?}") })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(str::trim).filter(|v| !v.is_empty()).map(|v| parse(line, key, v)).collect()
}

fn parse_hash(line: usize, value: &str) -> Result<u64> {
    let digits = value.strip_prefix("0x").unwrap_or(value);
    u64::from_str_radix(digits, 16).map_err(|_| CliError::Config { line, message: format!("cannot parse grid_hash = {value:?}") })
}

impl ExperimentConfig {
    /// Applies a config file. Lines are `key = value`, `[section]` or
    /// comments starting with `#`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(CliError::Config { line, message: "unterminated section header".into() })?;
                section = name.trim().to_string();
                if !["experiment", "problem", "grid", "tolerances", "output"].contains(&section.as_str()) {
                    return Err(CliError::Config { line, message: format!("unknown section [{section}]") });
                }
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(CliError::Config { line, message: format!("expected key = value, got {content:?}") })?;
            let (key, value) = (key.trim(), value.trim());
            let t = &mut self.tolerances;
            match (section.as_str(), key) {
                ("experiment", "scenario") => self.scenario = value.to_string(),
                ("problem", "s") => self.s = parse(line, key, value)?,
                ("problem", "dim") => self.dim = parse(line, key, value)?,
                ("problem", "kappa") => self.kappa = parse(line, key, value)?,
                ("problem", "gamma") => self.gamma = parse(line, key, value)?,
                ("problem", "tau") => self.tau = Some(parse(line, key, value)?),
                ("problem", "lambda") => self.lambda = Some(parse(line, key, value)?),
                ("problem", "lambda_grid") => self.lambda_grid = parse_list(line, key, value)?,
                ("problem", "window_lo") => self.window_lo = Some(parse(line, key, value)?),
                ("problem", "window_hi") => self.window_hi = Some(parse(line, key, value)?),
                ("problem", "profile") => self.profile = Some(PathBuf::from(value)),
                ("problem", "quick") => self.quick = parse(line, key, value)?,
                ("problem", "seed") => self.seed = parse(line, key, value)?,
                ("grid", "nodes") => self.nodes = parse(line, key, value)?,
                ("grid", "grid_hash") => self.grid_hash = Some(parse_hash(line, value)?),
                ("tolerances", "quadrature") => t.quadrature = parse(line, key, value)?,
                ("tolerances", "step") => t.step = parse(line, key, value)?,
                ("tolerances", "residual") => t.residual = parse(line, key, value)?,
                ("tolerances", "bisection") => t.bisection = parse(line, key, value)?,
                ("tolerances", "eigen") => t.eigen = parse(line, key, value)?,
                ("output", "out_dir") => self.out_dir = PathBuf::from(value),
                ("output", "threads") => self.threads = parse(line, key, value)?,
                ("output", "files") => {}
                ("", _) => return Err(CliError::Config { line, message: format!("key {key:?} outside any section") }),
                _ => return Err(CliError::Config { line, message: format!("unknown key {key:?} in [{section}]") }),
            }
        }
        Ok(())
    }

    /// `uses_gamma` is false for scenarios that never build a profile.
    pub fn validate(&self, uses_gamma: bool) -> Result<()> {
        let t = &self.tolerances;
        let tols = [t.quadrature, t.step, t.residual, t.bisection, t.eigen];
        if tols.iter().any(|&v| !(v > 0.0)) {
            return Err(CliError::Invalid(format!("tolerances must be positive: {tols:?}")));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(CliError::Invalid(format!("s = {} outside (0, 1)", self.s)));
        }
        if uses_gamma && !(self.gamma > 0.0 && self.gamma < self.s) {
            return Err(CliError::Invalid(format!("gamma = {} outside (0, s)", self.gamma)));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(CliError::Invalid(format!("dim = {} not in {{1, 2, 3}}", self.dim)));
        }
        if self.nodes < 64 {
            return Err(CliError::Invalid(format!("nodes = {} below 64", self.nodes)));
        }
        if !(self.kappa > 0.0) {
            return Err(CliError::Invalid(format!("kappa = {} must be positive", self.kappa)));
        }
        Ok(())
    }

    /// The config as a manifest, with the grid hash and output files of the run.
    pub fn manifest(&self, grid_hash: Option<u64>, files: &[String]) -> String {
        let mut m = String::new();
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}"));
        let _ = writeln!(m, "[experiment]\nscenario = {}\n", self.scenario);
        let _ = writeln!(m, "[problem]");
        let _ = writeln!(m, "s = {:?}\ndim = {}\nkappa = {:?}\ngamma = {:?}", self.s, self.dim, self.kappa, self.gamma);
        for (key, v) in [("tau", opt(self.tau)), ("lambda", opt(self.lambda)), ("window_lo", opt(self.window_lo)), ("window_hi", opt(self.window_hi))] {
            if let Some(v) = v {
                let _ = writeln!(m, "{key} = {v}");
            }
        }
        if !self.lambda_grid.is_empty() {
            let list: Vec<String> = self.lambda_grid.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(m, "lambda_grid = {}", list.join(","));
        }
        if let Some(p) = &self.profile {
            let _ = writeln!(m, "profile = {}", p.display());
        }
        let _ = writeln!(m, "quick = {}\nseed = {}\n", self.quick, self.seed);
        let _ = writeln!(m, "[grid]\nnodes = {}", self.nodes);
        if let Some(h) = grid_hash {
            let _ = writeln!(m, "grid_hash = {h:#018x}");
        }
        let t = &self.tolerances;
        let _ = writeln!(
            m,
            "\n[tolerances]\nquadrature = {:?}\nstep = {:?}\nresidual = {:?}\nbisection = {:?}\neigen = {:?}\n",
            t.quadrature, t.step, t.residual, t.bisection, t.eigen
        );
        let _ = writeln!(m, "[output]\nout_dir = {}\nthreads = {}\nfiles = {}", self.out_dir.display(), self.threads, files.join(","));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let cfg = ExperimentConfig {
            scenario: "pullin".into(),
            s: 0.6,
            gamma: 0.1 + 0.2,
            lambda_grid: vec![0.01, 1.0 / 3.0],
            tau: Some(0.7),
            ..Default::default()
        };
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.manifest(Some(0xdead_beef), &["a.csv".into()])).unwrap();
        assert_eq!(back.grid_hash, Some(0xdead_beef));
        back.grid_hash = None;
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_text("# header\n[problem]\ns = 0.5\ngamma = abc\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 4, .. }), "{err}");
        let err = cfg.apply_text("[problem]\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 3, .. }), "{err}");
        let err = cfg.apply_text("[nowhere]\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 1, .. }), "{err}");
        let err = cfg.apply_text("s = 0.5\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 1, .. }), "{err}");
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let ok = ExperimentConfig::default();
        ok.validate(true).unwrap();
        ExperimentConfig { gamma: 0.8, ..ok.clone() }.validate(false).unwrap();
        for bad in [
            ExperimentConfig { gamma: 0.8, ..ok.clone() },
            ExperimentConfig { dim: 4, ..ok.clone() },
            ExperimentConfig { nodes: 32, ..ok.clone() },
            ExperimentConfig { tolerances: TolerancesConfig { eigen: 0.0, ..Default::default() }, ..ok.clone() },
        ] {
            assert!(bad.validate(true).is_err(), "{bad:?}");
        }
    }
}
