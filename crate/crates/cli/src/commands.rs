use std::fs;

use fracmems::barrier::{barrier_ratio, log_barrier_ratio, RatioSample, Window};
use fracmems::boundary::{asymptotic_window, decade_loads, decay_grid, fit_decay, nonexistence_report};
use fracmems::green::{blowup_ratio, green_two_sided, window_nodes, GreenOperator};
use fracmems::grid::{Geometry, GridSpec, RadialGrid};
use fracmems::operator::FracParams;
use fracmems::psi::psi;
use fracmems::pullin::{bisect_pullin, PullInResult};
use fracmems::solver::{energy, MembraneProfile, MinimalSolver, Tolerances};
use fracmems::stability::{mu1, EigenSettings};
use fracmems::verify::{blowup_probes, run_criterion, VerifyConfig, CRITERIA};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{num, opt, Output};

/// What a finished run reports back.
#[derive(Debug, Default)]
pub struct Outcome {
    pub grid_hash: Option<u64>,
    pub summary: String,
    /// A failed check; the outputs are still written.
    pub failure: Option<String>,
}

fn geometry(dim: usize) -> Geometry {
    if dim == 1 {
        Geometry::Interval
    } else {
        Geometry::Radial { dim }
    }
}

fn green_for(cfg: &ExperimentConfig, grid: &RadialGrid) -> Result<GreenOperator> {
    if let Some(expected) = cfg.grid_hash {
        if expected != grid.hash64() {
            return Err(CliError::Assertion(format!("grid hash {:#018x} differs from the manifest's {expected:#018x}", grid.hash64())));
        }
    }
    Ok(GreenOperator::new(grid, &FracParams::new(cfg.s, grid.geometry().dim())?)?)
}

fn default_grid(cfg: &ExperimentConfig) -> Result<RadialGrid> {
    Ok(GridSpec::for_order(geometry(cfg.dim), cfg.nodes, cfg.s).build()?)
}

fn profile(cfg: &ExperimentConfig) -> Result<MembraneProfile> {
    let Some(path) = &cfg.profile else {
        return Ok(MembraneProfile::semi_sphere(cfg.kappa, cfg.gamma)?);
    };
    let mut reader = csv::Reader::from_path(path)?;
    let mut table = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| CliError::Invalid(format!("{}: bad row {:?}", path.display(), record)))
        };
        table.push((field(0)?, field(1)?));
    }
    Ok(MembraneProfile::tabulated(cfg.gamma, table)?)
}

fn solver<'g>(cfg: &ExperimentConfig, green: &'g GreenOperator, profile: &MembraneProfile) -> MinimalSolver<'g> {
    let s = MinimalSolver::new(green, profile);
    let max_a = s.a.max();
    let mut tols = Tolerances::relative_to(max_a);
    tols.step_tol = cfg.tolerances.step * max_a;
    tols.res_tol = cfg.tolerances.residual * max_a;
    s.with_tolerances(tols)
}

fn pullin_of(cfg: &ExperimentConfig, solver: &MinimalSolver, profile: &MembraneProfile) -> Result<PullInResult> {
    let guess = 0.1 * cfg.kappa.powi(3);
    Ok(bisect_pullin(solver, profile, (0.5 * guess, 2.0 * guess), cfg.tolerances.bisection)?)
}

fn ratio_rows(samples: &[RatioSample]) -> Vec<Vec<String>> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    sorted.iter().map(|r| vec![num(r.rho), num(r.value), num(r.ratio)]).collect()
}

fn window(cfg: &ExperimentConfig, lo: f64, hi: f64) -> (f64, f64) {
    (cfg.window_lo.unwrap_or(lo), cfg.window_hi.unwrap_or(hi))
}

pub fn psi_table(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let taus: Vec<f64> = match cfg.tau {
        Some(t) => vec![t],
        None => (1..=40).map(|k| 2.0 * cfg.s * k as f64 / 41.0).collect(),
    };
    let mut rows = Vec::new();
    for tau in taus {
        let v = psi(cfg.s, tau, cfg.tolerances.quadrature)?;
        rows.push(vec![num(v.s), num(v.tau), num(v.value), num(v.est_error)]);
    }
    out.csv("psi.csv", &["s", "tau", "value", "est_error"], &rows)?;
    Ok(Outcome { summary: format!("psi: {} rows", rows.len()), ..Default::default() })
}

pub fn barrier(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let (lo, hi) = window(cfg, 1e-3, 1e-1);
    let w = Window::new(lo, hi, 11);
    let params = FracParams::new(cfg.s, cfg.dim)?;
    let samples = match cfg.tau {
        Some(tau) => barrier_ratio(tau, &params, &w)?,
        None => log_barrier_ratio(&params, &w)?,
    };
    out.csv("barrier.csv", &["rho", "value", "ratio"], &ratio_rows(&samples))?;
    let kind = cfg.tau.map_or("log barrier".to_string(), |t| format!("tau = {t}"));
    Ok(Outcome { summary: format!("barrier: {kind}, {} samples", samples.len()), ..Default::default() })
}

pub fn green(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let grid = default_grid(cfg)?;
    let g = green_for(cfg, &grid)?;
    let (samples, summary) = match cfg.tau {
        Some(tau) => {
            let r = green_two_sided(tau, &g, window(cfg, 1e-3, 0.4))?;
            (r, format!("green: two-sided ratio for tau = {tau}"))
        }
        None => {
            let b = blowup_ratio(cfg.gamma, &g, &blowup_probes())?;
            let summary = format!("green: blowup for gamma = {}, growth exponent {:.4}", cfg.gamma, b.growth_exponent());
            (b.samples, summary)
        }
    };
    out.csv("green.csv", &["rho", "value", "ratio"], &ratio_rows(&samples))?;
    Ok(Outcome { grid_hash: Some(grid.hash64()), summary, ..Default::default() })
}

pub fn solve(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let lambda = cfg.lambda.ok_or_else(|| CliError::Invalid("solve needs --lambda".into()))?;
    let grid = default_grid(cfg)?;
    let g = green_for(cfg, &grid)?;
    let profile = profile(cfg)?;
    let solver = solver(cfg, &g, &profile);
    let t = solver.iterate(lambda)?;
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            let (a, u) = (solver.a.values[i], t.solution.values[i]);
            vec![num(grid.nodes()[i]), num(a), num(u), num(a - u)]
        })
        .collect();
    out.csv("solution.csv", &["r", "a", "u", "gap"], &rows)?;
    let e = if t.status.is_solution() { Some(energy(&g, &t.solution, &solver.a)?.dirichlet) } else { None };
    let summary = vec![t.status.name().to_string(), num(t.residual), num(t.min_gap), opt(e)];
    out.csv("summary.csv", &["status", "residual", "min_gap", "energy"], &[summary])?;
    Ok(Outcome {
        grid_hash: Some(grid.hash64()),
        summary: format!("solve: {} after {} iterations, residual {:.3e}", t.status.name(), t.iterations(), t.residual),
        ..Default::default()
    })
}

pub fn pullin(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let grid = default_grid(cfg)?;
    let g = green_for(cfg, &grid)?;
    let profile = profile(cfg)?;
    let p = pullin_of(cfg, &solver(cfg, &g, &profile), &profile)?;
    let b = &p.bounds;
    let row = vec![num(cfg.kappa), num(cfg.gamma), num(p.lambda_lo), num(p.lambda_hi), opt(b.upper_general), opt(b.upper_ball), opt(b.lower_ball)];
    out.csv("pullin.csv", &["kappa", "gamma", "lambda_lo", "lambda_hi", "upper_general", "upper_ball", "lower_ball"], &[row])?;
    let failure = (!(p.lambda_lo < p.lambda_hi)).then(|| format!("bracket [{}, {}] is empty", p.lambda_lo, p.lambda_hi));
    Ok(Outcome {
        grid_hash: Some(grid.hash64()),
        summary: format!("pullin: lambda* in [{:.8}, {:.8}] after {} runs", p.lambda_lo, p.lambda_hi, p.evaluations),
        failure,
    })
}

pub fn stability(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let grid = default_grid(cfg)?;
    let g = green_for(cfg, &grid)?;
    let profile = profile(cfg)?;
    let solver = solver(cfg, &g, &profile);
    let loads = if cfg.lambda_grid.is_empty() {
        let p = pullin_of(cfg, &solver, &profile)?;
        [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|f| f * p.lambda_lo).collect()
    } else {
        cfg.lambda_grid.clone()
    };
    let settings = EigenSettings { eig_tol: cfg.tolerances.eigen, ..Default::default() };
    let (mut rows, mut problems) = (Vec::new(), Vec::new());
    for lambda in loads {
        let t = solver.iterate(lambda)?;
        if !t.status.is_solution() {
            problems.push(format!("no solution at lambda = {lambda} ({})", t.status.name()));
            continue;
        }
        let r = mu1(&g, lambda, &t.solution, &solver.a, &settings)?;
        if !(r.mu1 > 0.0) {
            problems.push(format!("mu1 = {} at lambda = {lambda}", r.mu1));
        }
        rows.push(vec![num(lambda), num(r.mu1), num(r.residual)]);
    }
    out.csv("stability.csv", &["lambda", "mu1", "residual"], &rows)?;
    Ok(Outcome {
        grid_hash: Some(grid.hash64()),
        summary: format!("stability: {} loads", rows.len()),
        failure: (!problems.is_empty()).then(|| problems.join("; ")),
    })
}

pub fn decay(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let grid = decay_grid(cfg.nodes, cfg.s)?;
    let g = green_for(cfg, &grid)?;
    let profile = profile(cfg)?;
    let solver = solver(cfg, &g, &profile);
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => 0.3 * pullin_of(cfg, &solver, &profile)?.midpoint(),
    };
    let t = solver.iterate(lambda)?;
    if !t.status.is_solution() {
        return Err(CliError::Assertion(format!("no solution at lambda = {lambda} ({})", t.status.name())));
    }
    let (lo, hi) = asymptotic_window(&grid);
    let w = window(cfg, lo, hi);
    let fit = fit_decay(&grid, &t.solution, cfg.s, cfg.gamma, w)?;
    let mut idx = window_nodes(&grid, w.0, w.1);
    idx.sort_by(|&i, &j| grid.rho(i).total_cmp(&grid.rho(j)));
    let rows: Vec<Vec<String>> = idx
        .iter()
        .map(|&i| {
            let (rho, u) = (grid.rho(i), t.solution.values[i]);
            vec![num(rho), num(u), num(u / rho.powf(fit.predicted))]
        })
        .collect();
    out.csv("decay.csv", &["rho", "u", "ratio"], &rows)?;
    let summary = vec![num(fit.exponent), num(fit.predicted), fit.log_flag.to_string(), num(fit.r_squared)];
    out.csv("summary.csv", &["exponent", "predicted", "log_flag", "r2"], &[summary])?;
    Ok(Outcome {
        grid_hash: Some(grid.hash64()),
        summary: format!("decay: exponent {:.4} (predicted {:.4}), log flag {}, r2 {:.6}", fit.exponent, fit.predicted, fit.log_flag, fit.r_squared),
        failure: (!fit.valid()).then(|| format!("fit r2 = {} below 0.99", fit.r_squared)),
    })
}

pub fn nonexist(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let loads = decade_loads(cfg.lambda.unwrap_or(1e-6));
    let r = nonexistence_report(cfg.s, cfg.dim, cfg.gamma, cfg.kappa, &loads, cfg.nodes, &blowup_probes())?;
    let mut rows = Vec::new();
    for g in &r.grids {
        for run in &g.runs {
            rows.push(vec![
                g.nodes.to_string(),
                format!("{:#018x}", g.grid_hash),
                num(run.lambda),
                run.status.name().to_string(),
                run.iterations.to_string(),
                num(run.min_gap),
                num(run.min_gap_rho),
            ]);
        }
    }
    out.csv("runs.csv", &["nodes", "grid_hash", "lambda", "status", "iterations", "min_gap", "min_gap_rho"], &rows)?;
    let blowup: Vec<Vec<String>> = r.blowup.samples.iter().map(|x| vec![num(x.rho), num(x.value), num(x.ratio)]).collect();
    out.csv("blowup.csv", &["rho", "u", "ratio"], &blowup)?;
    let predicted = 2.0 * cfg.s - 3.0 * cfg.gamma;
    let summary = vec![num(r.blowup.growth_exponent()), num(predicted), r.all_fail().to_string(), r.boundary_driven().to_string(), num(r.rho_min)];
    out.csv("summary.csv", &["exponent", "predicted", "all_touchdown", "boundary_driven", "rho_min"], &[summary])?;
    let failure = match r.check() {
        Err(e) => Some(e.to_string()),
        Ok(()) if !r.boundary_driven() => Some("a touchdown gap minimum lies in the interior".into()),
        Ok(()) => None,
    };
    Ok(Outcome {
        summary: format!("nonexist: {} runs, all touchdown {}, blowup exponent {:.4}", rows.len(), r.all_fail(), r.blowup.growth_exponent()),
        failure,
        ..Default::default()
    })
}

pub fn verify_all(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let base = if cfg.quick { VerifyConfig::quick() } else { VerifyConfig::full() };
    let vc = VerifyConfig { seed: cfg.seed, ..base };
    let (mut rows, mut failed, mut lines) = (Vec::new(), Vec::new(), Vec::new());
    for id in 1..=CRITERIA {
        let report = run_criterion(id, &vc);
        println!("{}", report.summary_line());
        if !report.passed() {
            failed.push(id);
        }
        let detail: Vec<String> = report.failures().iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        rows.push(vec![id.to_string(), report.title.to_string(), report.passed().to_string(), report.checks.len().to_string(), detail.join("; ")]);
        for c in &report.checks {
            lines.push(format!("{id}\t{}\t{}\t{}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail));
        }
    }
    out.csv("verify.csv", &["criterion", "title", "passed", "checks", "failures"], &rows)?;
    out.text("checks.tsv", &(lines.join("\n") + "\n"))?;
    Ok(Outcome {
        summary: format!("verify-all: {} of {CRITERIA} criteria pass at n = {}", CRITERIA - failed.len(), vc.nodes),
        failure: (!failed.is_empty()).then(|| format!("failing criteria {failed:?}")),
        ..Default::default()
    })
}

/// Reads a config file into `cfg`.
pub fn load_config(cfg: &mut ExperimentConfig, path: &std::path::Path) -> Result<()> {
    let text = fs::read_to_string(path)?;
    cfg.apply_text(&text)
}
