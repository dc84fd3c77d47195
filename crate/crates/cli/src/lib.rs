//! Command-line experiments for the fractional MEMS solver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::{CliError, Result};
use output::Output;

pub const THREADS_ENV: &str = "FRAC_MEMS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fracmems", version, about = "Solver and verification harness for the fractional MEMS equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate psi_s(tau)
    Psi,
    /// Fractional Laplacian of a boundary barrier over a window
    Barrier,
    /// Green operator ratios (--tau) or blowup of G[a^-2] (--gamma)
    Green,
    /// Minimal solution at one load
    Solve,
    /// Pull-in bracket and closed-form bounds
    Pullin,
    /// Principal eigenvalue along a load grid
    Stability,
    /// Boundary decay exponent fit
    Decay,
    /// Touchdown probe for gamma in (2s/3, s)
    Nonexist,
    /// Run the acceptance criteria
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Psi => "psi",
            Command::Barrier => "barrier",
            Command::Green => "green",
            Command::Solve => "solve",
            Command::Pullin => "pullin",
            Command::Stability => "stability",
            Command::Decay => "decay",
            Command::Nonexist => "nonexist",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// key=value config file; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; FRAC_MEMS_THREADS takes precedence
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Comma-separated loads
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub window_lo: Option<f64>,
    #[arg(long, global = true)]
    pub window_hi: Option<f64>,
    /// CSV of (r, a) rows replacing the semi-sphere profile
    #[arg(long, global = true)]
    pub profile: Option<PathBuf>,
    /// Grid size
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Quadrature tolerance for psi, bisection tolerance otherwise
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Reduced grid for verify-all
    #[arg(long, global = true)]
    pub quick: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// Defaults, then the config file, then flags.
pub fn resolve(command: Command, flags: &Flags) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &flags.config {
        commands::load_config(&mut cfg, path)?;
        if !cfg.scenario.is_empty() && cfg.scenario != command.name() {
            return Err(CliError::Invalid(format!("config is for scenario {:?}, not {:?}", cfg.scenario, command.name())));
        }
    }
    cfg.scenario = command.name().to_string();
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = flags.$field.clone() { cfg.$field = v; })* };
    }
    set!(s, dim, kappa, gamma, nodes, out_dir, threads, seed);
    macro_rules! set_opt {
        ($($field:ident),*) => { $(if let Some(v) = flags.$field.clone() { cfg.$field = Some(v); })* };
    }
    set_opt!(tau, lambda, window_lo, window_hi, profile);
    if let Some(v) = &flags.lambda_grid {
        cfg.lambda_grid = v.clone();
    }
    if let Some(t) = flags.tol {
        if command == Command::Psi {
            cfg.tolerances.quadrature = t;
        } else {
            cfg.tolerances.bisection = t;
        }
    }
    cfg.quick |= flags.quick;
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()) {
        cfg.threads = n;
    }
    let uses_gamma = match command {
        Command::Psi | Command::Barrier | Command::VerifyAll => false,
        Command::Green => cfg.tau.is_none(),
        _ => true,
    };
    cfg.validate(uses_gamma)?;
    Ok(cfg)
}

/// Runs one subcommand and writes its manifest. Returns the exit code.
pub fn run(command: Command, flags: &Flags) -> u8 {
    match execute(command, flags) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, flags: &Flags) -> Result<u8> {
    let cfg = resolve(command, flags)?;
    if cfg.threads > 0 {
        // A second call within one process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let mut out = Output::new(&cfg.out_dir)?;
    let outcome = match command {
        Command::Psi => commands::psi_table(&cfg, &mut out),
        Command::Barrier => commands::barrier(&cfg, &mut out),
        Command::Green => commands::green(&cfg, &mut out),
        Command::Solve => commands::solve(&cfg, &mut out),
        Command::Pullin => commands::pullin(&cfg, &mut out),
        Command::Stability => commands::stability(&cfg, &mut out),
        Command::Decay => commands::decay(&cfg, &mut out),
        Command::Nonexist => commands::nonexist(&cfg, &mut out),
        Command::VerifyAll => commands::verify_all(&cfg, &mut out),
    }?;
    let files = out.files.clone();
    out.text("manifest.txt", &cfg.manifest(outcome.grid_hash, &files))?;
    println!("{}", outcome.summary);
    println!("wrote {} files to {}", files.len() + 1, out.dir().display());
    match outcome.failure {
        Some(f) => {
            eprintln!("assertion failed: {f}");
            Ok(2)
        }
        None => Ok(0),
    }
}
