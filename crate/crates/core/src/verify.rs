//! The acceptance suite: ten criteria, each a list of named checks.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::barrier::{barrier_ratio, log_barrier_ratio, RatioSummary, Window};
use crate::boundary::{
    asymptotic_window, decade_loads, decay_grid, default_window, fit_decay, nonexistence_report, probe_rho_min,
};
use crate::error::Result;
use crate::fit::loglog_fit;
use crate::green::{bulk_nodes, green_two_sided, window_nodes, GreenOperator};
use crate::grid::{Geometry, GridFunction, GridSpec};
use crate::operator::FracParams;
use crate::oracle::compare_with_pointwise;
use crate::profile::{Bump, CosCap, EvenBumps, PowerCap, Profile};
use crate::psi::{psi, psi_root, DEFAULT_TOL};
use crate::pullin::{bisect_pullin, lower_bound_ball, monotonicity_scan, upper_bound_ball, PullInResult, Trend};
use crate::solver::{energy, monotone_gap_check, MembraneProfile, MinimalSolver, Status};
use crate::stability::{extremal_solution, mu1, random_rayleigh_min, touchdown_gap_profile, weak_residuals, EigenSettings, Pencil};

pub const CRITERIA: usize = 10;

/// Grid size used by the suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub nodes: usize,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn quick() -> Self {
        Self { nodes: 256, seed: 20240611 }
    }

    pub fn full() -> Self {
        Self { nodes: 512, seed: 20240611 }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// One line: id, verdict, title, failing checks.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!("criterion {:>2} {verdict} {} ({} checks, {:.1} s)", self.id, self.title, self.checks.len(), self.seconds);
        for c in self.failures() {
            line += &format!("; failed {}: {}", c.name, c.detail);
        }
        line
    }
}

pub const TITLES: [&str; CRITERIA] = [
    "psi root, sign chart and concavity",
    "barrier chart",
    "Green estimates",
    "monotone iteration",
    "pull-in bracket and bounds",
    "pull-in monotonicity",
    "decay exponents",
    "nonexistence",
    "stability",
    "oracle equivalence",
];

struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check { name: name.into(), passed, detail: detail.into() });
    }
}

/// Runs criterion `id` (1-based). Numerical faults become a failed check.
pub fn run_criterion(id: usize, cfg: &VerifyConfig) -> CriterionReport {
    let start = Instant::now();
    let mut checks = Checks(Vec::new());
    let outcome = match id {
        1 => psi_chart(&mut checks),
        2 => barrier_chart(&mut checks),
        3 => green_estimates(cfg, &mut checks),
        4 => monotone_iteration(cfg, &mut checks),
        5 => pullin_bounds(cfg, &mut checks),
        6 => pullin_monotonicity(cfg, &mut checks),
        7 => decay_exponents(cfg, &mut checks),
        8 => nonexistence(cfg, &mut checks),
        9 => stability(cfg, &mut checks),
        10 => oracle_equivalence(cfg, &mut checks),
        _ => {
            checks.add("criterion id", false, format!("no criterion {id}"));
            Ok(())
        }
    };
    if let Err(e) = outcome {
        checks.add("numerical fault", false, e.to_string());
    }
    CriterionReport {
        id,
        title: TITLES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        checks: checks.0,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionReport> {
    (1..=CRITERIA).map(|id| run_criterion(id, cfg)).collect()
}

fn psi_chart(c: &mut Checks) -> Result<()> {
    for s in [0.25, 0.5, 0.75, 0.9] {
        let at_root = psi(s, s, DEFAULT_TOL)?.value;
        c.add(format!("psi(s,s) s={s}"), at_root.abs() <= 1e-8, format!("{at_root:e}"));
        let root = psi_root(s, 1e-12)?;
        c.add(format!("root s={s}"), (root - s).abs() <= 1e-6, format!("{root}"));
        let taus: Vec<f64> = (1..=40).map(|k| 2.0 * s * k as f64 / 41.0).collect();
        let values = taus.iter().map(|&t| Ok(psi(s, t, DEFAULT_TOL)?.value)).collect::<Result<Vec<f64>>>()?;
        let signs = taus.iter().zip(&values).all(|(&t, &v)| if t < s { v > 0.0 } else { v < 0.0 });
        c.add(format!("sign chart s={s}"), signs, "40-point grid");
        let worst = values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::NEG_INFINITY, f64::max);
        c.add(format!("concavity s={s}"), worst < 0.0, format!("largest second difference {worst:e}"));
        let limit = psi(s, 1e-9, DEFAULT_TOL)?.value;
        c.add(format!("limit at 0 s={s}"), (limit - 0.5 / s).abs() <= 1e-6, format!("{limit} vs {}", 0.5 / s));
    }
    Ok(())
}

fn barrier_chart(c: &mut Checks) -> Result<()> {
    let window = Window::default();
    for s in [0.3, 0.5, 0.75] {
        for dim in [1, 2] {
            let p = FracParams::new(s, dim)?;
            let below = RatioSummary::of(&barrier_ratio(0.5 * s, &p, &window)?);
            c.add(format!("tau=0.5s s={s} N={dim}"), below.all_positive() && below.spread() <= 50.0, format!("{below:?}"));
            let above = RatioSummary::of(&barrier_ratio(1.5 * s, &p, &window)?);
            c.add(format!("tau=1.5s s={s} N={dim}"), above.all_negative() && above.spread() <= 50.0, format!("{above:?}"));
            let critical = barrier_ratio(s, &p, &window)?;
            let worst = critical.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
            c.add(format!("tau=s bounded s={s} N={dim}"), worst < 10.0, format!("max |value| {worst:.3}"));
            let log = RatioSummary::of(&log_barrier_ratio(&p, &window)?);
            let spread = log.min.abs().max(log.max.abs()) / log.min.abs().min(log.max.abs());
            c.add(format!("log barrier positive s={s} N={dim}"), log.all_positive(), format!("{log:?}"));
            c.add(format!("log barrier bounded s={s} N={dim}"), log.spread().is_finite() && spread <= 50.0, format!("spread {spread:.3}"));
        }
    }
    Ok(())
}

fn interval(s: f64, nodes: usize) -> Result<GreenOperator> {
    let grid = GridSpec::for_order(Geometry::Interval, nodes, s).build()?;
    GreenOperator::new(&grid, &FracParams::new(s, 1)?)
}

fn green_estimates(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let green = interval(0.5, cfg.nodes)?;
    for tau in [0.2, 0.5, 0.8] {
        let r = RatioSummary::of(&green_two_sided(tau, &green, (1e-3, 0.4))?);
        c.add(format!("two-sided tau={tau}"), r.all_positive() && r.spread() <= 20.0, format!("spread {:.3}", r.spread()));
    }
    for dim in [1, 2, 3] {
        let geometry = if dim == 1 { Geometry::Interval } else { Geometry::Radial { dim } };
        let grid = GridSpec::for_order(geometry, cfg.nodes / 2, 0.5).build()?;
        let g = GreenOperator::new(&grid, &FracParams::new(0.5, dim)?)?;
        let u = g.solve(&vec![1.0; grid.len()])?;
        let w = default_window(&grid);
        let idx = window_nodes(&grid, w.0, w.1);
        let fit = loglog_fit(&idx.iter().map(|&i| grid.rho(i)).collect::<Vec<_>>(), &idx.iter().map(|&i| u[i]).collect::<Vec<_>>())?;
        c.add(format!("G[1] exponent N={dim}"), (fit.slope - 0.5).abs() <= 0.02, format!("{:.4}", fit.slope));
    }
    Ok(())
}

fn reference_solver_setup(cfg: &VerifyConfig, kappa: f64, gamma: f64) -> Result<(GreenOperator, MembraneProfile)> {
    Ok((interval(0.75, cfg.nodes)?, MembraneProfile::semi_sphere(kappa, gamma)?))
}

fn monotone_iteration(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let (green, profile) = reference_solver_setup(cfg, 1.0, 0.5)?;
    let solver = MinimalSolver::new(&green, &profile);
    let max_a = solver.a.max();
    let loads = [0.01, 0.02, 0.04, 0.06, 0.08];
    let mut traces = Vec::new();
    let mut scaled = Vec::new();
    for &lambda in &loads {
        let t = solver.iterate(lambda)?;
        c.add(format!("converged lambda={lambda}"), t.status == Status::Converged, t.status.name());
        c.add(format!("monotone lambda={lambda}"), t.monotone(), format!("{} iterations", t.iterations()));
        c.add(format!("residual lambda={lambda}"), t.residual <= 1e-8 * max_a, format!("{:e}", t.residual));
        let e = energy(&green, &t.solution, &solver.a)?;
        c.add(format!("energy identity lambda={lambda}"), e.identity_defect(lambda) <= 0.01, format!("{:e}", e.identity_defect(lambda)));
        scaled.push(e.dirichlet / (lambda * lambda));
        traces.push(t);
    }
    for pair in traces.windows(2) {
        let g = monotone_gap_check(&solver, &pair[0], &pair[1])?;
        c.add(format!("gap {}..{}", pair[0].lambda, pair[1].lambda), g.holds(), format!("margin {:e}, slack {:e}", g.worst_margin, g.slack));
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    c.add("dirichlet/lambda^2 bounded", hi.is_finite() && hi <= 10.0 * lo, format!("range [{lo:.4}, {hi:.4}]"));
    Ok(())
}

fn pullin(cfg: &VerifyConfig, kappa: f64, gamma: f64) -> Result<(PullInResult, GreenOperator)> {
    let (green, profile) = reference_solver_setup(cfg, kappa, gamma)?;
    let solver = MinimalSolver::new(&green, &profile);
    let guess = 0.1 * kappa.powi(3);
    let p = bisect_pullin(&solver, &profile, (0.5 * guess, 2.0 * guess), 5e-4)?;
    Ok((p, green))
}

fn pullin_bounds(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let (p, green) = pullin(cfg, 1.0, 0.5)?;
    c.add("bracket width", p.relative_width() <= 1e-3, format!("[{}, {}]", p.lambda_lo, p.lambda_hi));
    match p.bounds.lower_ball {
        Some(l) => c.add("lower ball bound", l <= p.lambda_hi, format!("{l:.5} vs lambda_hi {:.5}", p.lambda_hi)),
        None => c.add("lower ball bound", false, "not available"),
    }
    match p.bounds.upper_general {
        Some(u) => c.add("general upper bound", p.lambda_lo <= 1.1 * u, format!("{:.5} vs {u:.5}", p.lambda_lo)),
        None => c.add("general upper bound", false, "denominator diverges"),
    }
    let s = green.params().s;
    let cbar = crate::pullin::measured_cbar(&green)?;
    let up = upper_bound_ball(2.0, 0.5, s, cbar) / upper_bound_ball(1.0, 0.5, s, cbar);
    c.add("upper bound cubic in kappa", (up - 8.0).abs() <= 1e-12, format!("{up}"));
    let low = lower_bound_ball(2.0, &green)? / lower_bound_ball(1.0, &green)?;
    c.add("lower bound cubic in kappa", (low - 8.0).abs() <= 1e-12, format!("{low}"));
    let (p2, _) = pullin(cfg, 2.0, 0.5)?;
    let ratio = p2.midpoint() / p.midpoint();
    c.add("lambda*(2 kappa) / lambda*(kappa)", (6.5..=9.5).contains(&ratio), format!("{ratio:.4}"));
    Ok(())
}

fn pullin_monotonicity(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let green = interval(0.75, cfg.nodes)?;
    let by_gamma = monotonicity_scan(&green, &[1.0], &[0.25, 0.4, 0.5], 1e-3)?;
    let mids: Vec<String> = by_gamma.rows.iter().map(|r| format!("{:.5}", r.result.midpoint())).collect();
    c.add("decreasing in gamma", by_gamma.decreasing_in_gamma == Trend::Holds, format!("{:?} {mids:?}", by_gamma.decreasing_in_gamma));
    let by_kappa = monotonicity_scan(&green, &[0.5, 1.0, 2.0], &[0.4], 1e-3)?;
    let mids: Vec<String> = by_kappa.rows.iter().map(|r| format!("{:.5}", r.result.midpoint())).collect();
    c.add("increasing in kappa", by_kappa.increasing_in_kappa == Trend::Holds, format!("{:?} {mids:?}", by_kappa.increasing_in_kappa));
    Ok(())
}

fn decay_fit_at(nodes: usize, s: f64, gamma: f64) -> Result<crate::boundary::DecayFit> {
    let grid = decay_grid(nodes, s)?;
    let green = GreenOperator::new(&grid, &FracParams::new(s, 1)?)?;
    let profile = MembraneProfile::semi_sphere(1.0, gamma)?;
    let solver = MinimalSolver::new(&green, &profile);
    let p = bisect_pullin(&solver, &profile, (0.02, 0.2), 1e-3)?;
    let run = solver.iterate(0.3 * p.midpoint())?;
    fit_decay(&grid, &run.solution, s, gamma, asymptotic_window(&grid))
}

fn decay_exponents(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let nodes = cfg.nodes / 2;
    for (s, gamma) in [(0.5, 0.2), (0.6, 0.4), (0.75, 0.5)] {
        let f = decay_fit_at(nodes, s, gamma)?;
        c.add(format!("exponent s={s} gamma={gamma}"), f.within(0.05), format!("{:.4} vs {:.4}", f.exponent, f.predicted));
        c.add(format!("r2 s={s} gamma={gamma}"), f.valid(), format!("{:.6}", f.r_squared));
    }
    for s in [0.5, 0.75] {
        for frac in [0.4, 0.5, 0.6] {
            let f = decay_fit_at(nodes, s, frac * s)?;
            let expected = frac == 0.5;
            c.add(format!("log flag s={s} gamma={frac}s"), f.log_flag == expected, format!("flag {} (log rms {:.1e}, power rms {:.1e})", f.log_flag, f.log_rms, f.power_rms));
            c.add(format!("r2 s={s} gamma={frac}s"), f.valid(), format!("{:.6}", f.r_squared));
        }
    }
    Ok(())
}

/// Boundary distances `10^{-1 - k/4}`, `k = 0..8`.
pub fn blowup_probes() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-1.0 - 0.25 * k as f64)).collect()
}

fn nonexistence(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let s = 0.75;
    let loads = decade_loads(1e-6);
    let nodes = cfg.nodes / 2;
    for gamma in [0.55, 0.6, 0.7] {
        let r = nonexistence_report(s, 1, gamma, 1.0, &loads, nodes, &blowup_probes())?;
        let statuses: Vec<String> = r.grids.iter().map(|g| g.runs.iter().map(|x| &x.status.name()[..2]).collect::<Vec<_>>().join("")).collect();
        c.add(format!("all touchdown gamma={gamma}"), r.all_fail(), format!("rho_min {:.1e}, {statuses:?}", r.rho_min));
        c.add(format!("boundary driven gamma={gamma}"), r.boundary_driven(), "min gap in rho < 0.1");
        let g = r.blowup.growth_exponent();
        let expected = 2.0 * s - 3.0 * gamma;
        c.add(format!("blowup exponent gamma={gamma}"), (g - expected).abs() <= 0.1, format!("{g:.4} vs {expected:.4}"));
    }
    let rho_min = probe_rho_min(s, 0.55, 1e-6);
    for n in [nodes, 2 * nodes] {
        let grid = GridSpec::for_order(Geometry::Radial { dim: 1 }, n, s).with_rho_min(rho_min).build()?;
        let green = GreenOperator::new(&grid, &FracParams::new(s, 1)?)?;
        let profile = MembraneProfile::semi_sphere(1.0, 0.5)?;
        let t = MinimalSolver::new(&green, &profile).iterate(1e-6)?;
        c.add(format!("control gamma=0.5 n={n}"), t.status == Status::Converged, t.status.name());
    }
    Ok(())
}

fn stability(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let settings = EigenSettings::default();
    let (s, gamma) = (0.75, 0.5);
    let mut integrals = Vec::new();
    for (k, nodes) in [cfg.nodes, 2 * cfg.nodes].into_iter().enumerate() {
        let green = interval(s, nodes)?;
        let profile = MembraneProfile::semi_sphere(1.0, gamma)?;
        let solver = MinimalSolver::new(&green, &profile);
        let p = bisect_pullin(&solver, &profile, (0.05, 0.2), 1e-3)?;
        let ext = extremal_solution(&solver, &p, gamma)?;
        integrals.push(ext.weighted_integrals.clone());
        if k == 1 {
            break;
        }
        let star = p.midpoint();
        let mut mus = Vec::new();
        let mut rng = StdRng::seed_from_u64(cfg.seed);
        for f in [0.2, 0.4, 0.6, 0.8] {
            let t = solver.iterate(f * star)?;
            let r = mu1(&green, f * star, &t.solution, &solver.a, &settings)?;
            let pencil = Pencil::new(&green, f * star, &t.solution, &solver.a)?;
            let best = random_rayleigh_min(&pencil, green.grid(), s, 100, rng.random());
            c.add(format!("rayleigh consistency {f} lambda*"), best >= r.mu1 - r.tolerance, format!("mu1 {:.6}, best trial {best:.6}", r.mu1));
            mus.push(r);
        }
        c.add("stable at 0.2 lambda*", mus[0].mu1 > 0.0, format!("{:.6}", mus[0].mu1));
        let decreasing = mus.windows(2).all(|w| w[0].mu1 - w[1].mu1 > 2.0 * w[0].tolerance.max(w[1].tolerance));
        let listed: Vec<String> = mus.iter().map(|r| format!("{:.6}", r.mu1)).collect();
        c.add("mu1 strictly decreasing", decreasing, format!("{listed:?}"));
        let lo = mu1(&green, p.lambda_lo, &p.lo_solution, &solver.a, &settings)?;
        c.add("semi-stability at lambda_lo", lo.mu1 >= -0.05 * mus[0].mu1, format!("{:.6}", lo.mu1));
        c.add("extremal weak residual", ext.weak_ok(), format!("{:?} vs {:?}", ext.weak_residuals, ext.weak_tols));
        let half = solver.iterate(0.5 * star)?;
        let (res, tols) = weak_residuals(&green, 0.5 * star, &half.solution, &solver.a);
        let ok = res.iter().zip(&tols).all(|(r, t)| r.abs() <= *t);
        c.add("weak residual at 0.5 lambda*", ok, format!("{res:?} vs {tols:?}"));
    }
    for (a, b) in integrals[0].iter().zip(&integrals[1]) {
        let ratio = b.1 / a.1;
        c.add(format!("weighted integral beta={:.3}", a.0), a.1.is_finite() && (0.5..=2.0).contains(&ratio), format!("{:.4} -> {:.4}", a.1, b.1));
    }
    let mut profile_values = Vec::new();
    for nodes in [cfg.nodes, 2 * cfg.nodes] {
        let green = interval(0.5, nodes)?;
        let profile = MembraneProfile::semi_sphere(1.0, 1.0 / 3.0)?;
        let solver = MinimalSolver::new(&green, &profile);
        let p = bisect_pullin(&solver, &profile, (0.03, 0.12), 1e-3)?;
        let (gap, integral) = touchdown_gap_profile(green.grid(), &p.lo_solution, &solver.a, 0.5, 0.5)?;
        c.add(format!("compact gap n={nodes}"), gap > 0.0 && integral.is_finite(), format!("gap {gap:.4}, integral {integral:.4}"));
        profile_values.push(integral);
    }
    let ratio = profile_values[1] / profile_values[0];
    c.add("compact integral refinement", (0.5..=2.0).contains(&ratio), format!("ratio {ratio:.4}"));
    Ok(())
}

fn oracle_equivalence(cfg: &VerifyConfig, c: &mut Checks) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let s = 0.5;
    let params = FracParams::new(s, 1)?;
    let spec = GridSpec::for_order(Geometry::Interval, cfg.nodes / 2, s);
    let bumps = EvenBumps { bumps: vec![Bump { center: 0.4, width: 0.3, amplitude: 1.0 }] };
    let profiles: [(&str, &dyn Profile); 3] = [("power cap", &PowerCap { p: 3.0 }), ("cos cap", &CosCap), ("even bumps", &bumps)];
    for (name, profile) in profiles {
        let points: Vec<f64> = (0..10).map(|_| rng.random_range(-0.9..0.9)).collect();
        let cmp = compare_with_pointwise(profile, &params, &spec, &points, 1e-9)?;
        c.add(format!("pointwise {name}"), cmp.agrees(5.0), format!("worst {:.2e}, combined tol {:.2e}", cmp.worst_error(), cmp.combined_tol()));
    }
    for (geometry, s) in [(Geometry::Interval, 0.5), (Geometry::Radial { dim: 2 }, 0.6)] {
        let grid = GridSpec::for_order(geometry, 48, s).build()?;
        let green = GreenOperator::new(&grid, &FracParams::new(s, geometry.dim())?)?;
        let targets = bulk_nodes(&grid, 3);
        let rows = green.kernel_rows(&targets)?;
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let coef: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shift = 2.0 + rng.random::<f64>();
            let f = GridFunction::sample(&grid, |x, _| shift + (0..4).map(|k| coef[k] * (k as f64 * x).cos()).sum::<f64>());
            let inverse = green.solve(&f.values)?;
            for (r, &i) in targets.iter().enumerate() {
                let quad: f64 = rows.row(r).iter().zip(&f.values).map(|(k, v)| k * v).sum();
                worst = worst.max(((quad - inverse[i]) / inverse[i]).abs());
            }
        }
        c.add(format!("kernel vs inverse N={}", geometry.dim()), worst <= 0.05, format!("worst relative {worst:.2e}"));
    }
    Ok(())
}
