//! The Green operator of the unit ball (or interval) with zero exterior data.
//!
//! Two independent evaluations: the exact algebraic inverse of the assembled
//! operator, and product quadrature of the closed-form ball kernel
//! `G(x, y) = k_{N,s} |x - y|^{2s-N} int_0^z t^{s-1} (1 + t)^{-N/2} dt`,
//! `z = (1 - |x|^2)(1 - |y|^2) / |x - y|^2`, averaged over spheres for radial data.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::barrier::RatioSample;
use crate::error::{FracError, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::grid::{Geometry, GridFunction, RadialGrid};
use crate::lu::MLu;
use crate::operator::{FracParams, OperatorMatrix};
use crate::quadrature::{gl16, graded_away, tanh_sinh, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenMethod {
    DiscreteInverse,
    KernelQuadrature,
}

/// Below this argument the kernel integrals are summed as power series.
const SERIES_SPLIT: f64 = 0.25;

/// The closed-form Green kernel of the unit ball.
#[derive(Debug, Clone, Copy)]
pub struct BallKernel {
    pub dim: usize,
    pub s: f64,
    k: f64,
    kappa: f64,
    b_one: f64,
}

impl BallKernel {
    pub fn new(dim: usize, s: f64) -> Self {
        let n = dim as f64;
        let k = (ln_gamma(0.5 * n) - 2.0 * s * 2f64.ln() - 0.5 * n * PI.ln() - 2.0 * ln_gamma(s)).exp();
        let mut kernel = Self { dim, s, k, kappa: 0.5 * n - s, b_one: 0.0 };
        kernel.b_one = kernel.b_small(1.0);
        kernel
    }

    /// `int_0^z t^{s-1} (1+t)^{-N/2} dt` for `z <= 1`: series up to `SERIES_SPLIT`,
    /// Gauss-Legendre beyond.
    fn b_small(&self, z: f64) -> f64 {
        let (s, half_n) = (self.s, 0.5 * self.dim as f64);
        let head = z.min(SERIES_SPLIT);
        let mut total = 0.0;
        let mut c = 1.0;
        let mut pow = head.powf(s);
        for k in 0..80 {
            let term = c * pow / (s + k as f64);
            total += term;
            if term.abs() < 1e-17 * total.abs() {
                break;
            }
            c *= -(half_n + k as f64) / (k as f64 + 1.0);
            pow *= head;
        }
        if z > SERIES_SPLIT {
            total += graded_away(gl16(), SERIES_SPLIT, z, SERIES_SPLIT, |t| t.powf(s - 1.0) * (1.0 + t).powf(-half_n));
        }
        total
    }

    /// `B(z) = int_0^z t^{s-1} (1+t)^{-N/2} dt`.
    pub fn b(&self, z: f64) -> f64 {
        if z <= 1.0 {
            return self.b_small(z);
        }
        // t = 1/u on [1, z]: int_{1/z}^1 u^{kappa-1} (1+u)^{-N/2} du, split off u^{kappa-1}
        // and integrate the remainder u^kappa h(u) by series below SERIES_SPLIT.
        let (kappa, half_n) = (self.kappa, 0.5 * self.dim as f64);
        let lz = z.ln();
        let main = if kappa.abs() < 1e-14 { lz } else { -(-kappa * lz).exp_m1() / kappa };
        let lo = 1.0 / z;
        let h = |u: f64| -(-half_n * u.ln_1p()).exp_m1() / u;
        let mut correction = 0.0;
        if lo < SERIES_SPLIT {
            // h(u) = sum_k c_k u^k with c_k = -binom(-N/2, k + 1).
            let mut c = half_n;
            let (mut hi_pow, mut lo_pow) = (SERIES_SPLIT.powf(kappa + 1.0), lo.powf(kappa + 1.0));
            for k in 0..60 {
                let term = c * (hi_pow - lo_pow) / (kappa + 1.0 + k as f64);
                correction += term;
                if term.abs() < 1e-17 * correction.abs() {
                    break;
                }
                c *= -(half_n + k as f64 + 1.0) / (k as f64 + 2.0);
                hi_pow *= SERIES_SPLIT;
                lo_pow *= lo;
            }
        }
        correction += graded_away(gl16(), lo.max(SERIES_SPLIT), 1.0, lo.max(SERIES_SPLIT), |u| u.powf(kappa) * h(u));
        self.b_one + main - correction
    }

    /// `G` at two points with separation `e` and `a_x = 1 - |x|^2`, `a_y = 1 - |y|^2`.
    pub fn point(&self, e: f64, ax: f64, ay: f64) -> f64 {
        let z = (ax / e) * (ay / e);
        self.k * e.powf(2.0 * self.s - self.dim as f64) * self.b(z)
    }

    /// Spherical integral `int_{|y| = rho} G(x, y) dS(y)` for `|x| = r`;
    /// `dr`, `drho` are the boundary distances.
    pub fn radial(&self, r: f64, dr: f64, rho: f64, drho: f64) -> f64 {
        self.radial_with_gap(r, dr, rho, drho, (drho - dr).abs())
    }

    /// [`Self::radial`] with the gap `|r - rho|` supplied exactly.
    pub fn radial_with_gap(&self, r: f64, dr: f64, rho: f64, drho: f64, gap: f64) -> f64 {
        let ax = dr * (2.0 - dr);
        let ay = drho * (2.0 - drho);
        match self.dim {
            1 => self.point(gap, ax, ay) + self.point(r + rho, ax, ay),
            2 => {
                // Singular scale of e(theta)^2 = d^2 + 4 r rho sin^2(theta/2) near theta = 0.
                let root = (r * rho).sqrt();
                let near = (gap / root).clamp(1e-300, PI);
                let f = |th: f64| self.point(gap.hypot(2.0 * root * (0.5 * th).sin()), ax, ay);
                2.0 * rho * graded_away(gl16(), 0.0, PI, near, f)
            }
            _ => {
                // d mu = -e de / (r rho) on e in [|d|, r + rho].
                let lo = gap;
                let hi = r + rho;
                if hi <= lo {
                    return 0.0;
                }
                let f = |w: f64| {
                    let e = lo + w;
                    self.point(e, ax, ay) * e
                };
                2.0 * PI * rho / r * graded_away(gl16(), 0.0, hi - lo, lo.max(1e-300), f)
            }
        }
    }
}

/// A point given by position and boundary distance.
#[derive(Debug, Clone, Copy)]
struct Pt {
    pos: f64,
    dist: f64,
}

/// A piece of the load between two knots, where the load is a quadratic
/// `sum_k f_k (c0 + c1 t + c2 t^2)` in the fraction `t` of the way from `a` to `b`.
#[derive(Debug, Clone)]
struct Segment {
    a: Pt,
    b: Pt,
    len: f64,
    basis: Vec<(usize, [f64; 3])>,
    /// `Some(i)` when the segment ends at node `i`.
    ends: (Option<usize>, Option<usize>),
}

impl Segment {
    /// Point at arclength `u` from `a`, with `v = len - u` to `b`.
    fn at(&self, u: f64, v: f64) -> Pt {
        let same_side = self.a.pos * self.b.pos >= 0.0;
        let t = u / self.len;
        let pos = if u < v { self.a.pos + t * (self.b.pos - self.a.pos) } else { self.b.pos + (v / self.len) * (self.a.pos - self.b.pos) };
        let dist = if same_side {
            if u < v {
                self.a.dist + t * (self.b.dist - self.a.dist)
            } else {
                self.b.dist + (v / self.len) * (self.a.dist - self.b.dist)
            }
        } else {
            1.0 - pos.abs()
        };
        Pt { pos, dist }
    }
}

/// Monomial coefficients of the Lagrange basis through three abscissae.
fn quadratic_basis(c: [f64; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let (p, q) = ((k + 1) % 3, (k + 2) % 3);
        let den = (c[k] - c[p]) * (c[k] - c[q]);
        out[k] = [c[p] * c[q] / den, -(c[p] + c[q]) / den, 1.0 / den];
    }
    out
}

fn segments(grid: &RadialGrid) -> Vec<Segment> {
    let pos = grid.nodes();
    let dist = grid.boundary_distances();
    let n = grid.len();
    let node = |i: usize| Pt { pos: pos[i], dist: dist[i] };
    let mut out = Vec::with_capacity(n + 1);
    let constant = |i: usize| vec![(i, [1.0, 0.0, 0.0])];
    match grid.geometry() {
        Geometry::Interval => out.push(Segment {
            a: Pt { pos: -1.0, dist: 0.0 },
            b: node(0),
            len: dist[0],
            basis: constant(0),
            ends: (None, Some(0)),
        }),
        Geometry::Radial { .. } => out.push(Segment {
            a: Pt { pos: 0.0, dist: 1.0 },
            b: node(0),
            len: pos[0],
            basis: constant(0),
            ends: (None, Some(0)),
        }),
    }
    for i in 0..n - 1 {
        let len = grid.offset(i, i + 1).abs();
        // Average of the quadratics through the neighbouring triples.
        let triples: Vec<[usize; 3]> = [(i > 0).then(|| [i - 1, i, i + 1]), (i + 2 < n).then(|| [i, i + 1, i + 2])]
            .into_iter()
            .flatten()
            .collect();
        let mut basis: Vec<(usize, [f64; 3])> = Vec::new();
        for tri in &triples {
            let c = tri.map(|k| grid.offset(i, k) / grid.offset(i, i + 1));
            for (k, coef) in tri.iter().zip(quadratic_basis(c)) {
                let scaled = coef.map(|v| v / triples.len() as f64);
                match basis.iter_mut().find(|(d, _)| d == k) {
                    Some((_, acc)) => (0..3).for_each(|m| acc[m] += scaled[m]),
                    None => basis.push((*k, scaled)),
                }
            }
        }
        out.push(Segment { a: node(i), b: node(i + 1), len, basis, ends: (Some(i), Some(i + 1)) });
    }
    out.push(Segment {
        a: node(n - 1),
        b: Pt { pos: 1.0, dist: 0.0 },
        len: dist[n - 1],
        basis: constant(n - 1),
        ends: (Some(n - 1), None),
    });
    out
}

/// Separation of a target node and a point, from distances on a common side.
fn separation(geometry: Geometry, t: Pt, y: Pt) -> f64 {
    match geometry {
        Geometry::Radial { .. } => (t.dist - y.dist).abs(),
        Geometry::Interval => {
            if t.pos * y.pos >= 0.0 && t.dist < 0.5 && y.dist < 0.5 {
                (t.dist - y.dist).abs()
            } else {
                (t.pos - y.pos).abs()
            }
        }
    }
}

/// Moments `int g t^m` for `m = 0, 1, 2` on `[0, len]` by [`graded_away`] panels.
fn graded_moments<F: FnMut(f64) -> [f64; 3]>(rule: &GaussLegendre, len: f64, dist: f64, mut f: F) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut lo = 0.0;
    while lo < len {
        let hi = (lo + dist + lo).min(len);
        for (x, w) in rule.mapped(lo, hi) {
            let v = f(x);
            (0..3).for_each(|m| acc[m] += w * v[m]);
        }
        lo = hi;
    }
    acc
}

/// Row `i` of the product-quadrature matrix: `u_i = sum_j K_ij f_j`.
fn kernel_row(kernel: &BallKernel, grid: &RadialGrid, segs: &[Segment], i: usize) -> Vec<f64> {
    let geometry = grid.geometry();
    let t = Pt { pos: grid.nodes()[i], dist: grid.boundary_distances()[i] };
    let at = t.dist * (2.0 - t.dist);
    let g = |y: Pt, u_sep: Option<f64>| -> f64 {
        match geometry {
            Geometry::Interval => {
                let e = u_sep.unwrap_or_else(|| separation(geometry, t, y));
                kernel.point(e, at, y.dist * (2.0 - y.dist))
            }
            Geometry::Radial { .. } => {
                let gap = u_sep.unwrap_or_else(|| (y.dist - t.dist).abs());
                kernel.radial_with_gap(t.pos, t.dist, y.pos, y.dist, gap)
            }
        }
    };
    let mut row = vec![0.0; grid.len()];
    for seg in segs {
        let singular_a = seg.ends.0 == Some(i);
        let singular_b = seg.ends.1 == Some(i);
        let touches_boundary = seg.a.dist == 0.0 || seg.b.dist == 0.0;
        let len = seg.len;
        let value = |u: f64, v: f64| {
            let sep = if singular_a {
                Some(u)
            } else if singular_b {
                Some(v)
            } else {
                None
            };
            g(seg.at(u, v), sep)
        };
        let fraction = |u: f64, v: f64| if u < v { u / len } else { 1.0 - v / len };
        let moments = if singular_a || singular_b || touches_boundary {
            // Tanh-sinh sees the exact distances to both ends.
            let scale = value(0.5 * len, 0.5 * len).abs() * len + 1e-300;
            let mut m = [0.0; 3];
            for (k, slot) in m.iter_mut().enumerate() {
                let f = |_: f64, u: f64, v: f64| value(u, v) * fraction(u, v).powi(k as i32);
                *slot = tanh_sinh(f, 0.0, len, 1e-10 * scale).map(|e| e.value).unwrap_or(f64::NAN);
                if seg.basis.len() == 1 {
                    break;
                }
            }
            m
        } else {
            // Grade away from whichever end is nearer to the target.
            let da = separation(geometry, t, seg.a);
            let db = separation(geometry, t, seg.b);
            let map = |w: f64| if da <= db { (w, len - w) } else { (len - w, w) };
            graded_moments(gl16(), len, da.min(db), |w| {
                let (u, v) = map(w);
                let g = value(u, v);
                let x = fraction(u, v);
                [g, g * x, g * x * x]
            })
        };
        for (k, c) in &seg.basis {
            row[*k] += c[0] * moments[0] + c[1] * moments[1] + c[2] * moments[2];
        }
    }
    row
}

/// `G_{s,Omega}` on a grid, with the factorised operator and the lazily
/// built kernel-quadrature matrix.
#[derive(Debug)]
pub struct GreenOperator {
    operator: OperatorMatrix,
    lu: MLu,
    kernel: OnceLock<Result<DMatrix<f64>>>,
}

impl GreenOperator {
    pub fn new(grid: &RadialGrid, params: &FracParams) -> Result<Self> {
        Self::from_operator(OperatorMatrix::assemble(grid, params)?)
    }

    pub fn from_operator(operator: OperatorMatrix) -> Result<Self> {
        let lu = MLu::new(&operator.matrix)?;
        Ok(Self { operator, lu, kernel: OnceLock::new() })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.operator.grid
    }

    pub fn params(&self) -> &FracParams {
        &self.operator.params
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.operator
    }

    /// Solves `A u = f`.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.lu.solve(f)
    }

    /// Product-quadrature rows for the given target nodes.
    pub fn kernel_rows(&self, targets: &[usize]) -> Result<DMatrix<f64>> {
        let grid = self.grid();
        let params = self.params();
        if grid.geometry().dim() != params.dim {
            return Err(FracError::KernelUnavailable(format!("{:?} with N = {}", grid.geometry(), params.dim)));
        }
        let kernel = BallKernel::new(params.dim, params.s);
        let segs = segments(grid);
        let rows: Vec<Vec<f64>> = targets.par_iter().map(|&i| kernel_row(&kernel, grid, &segs, i)).collect();
        let n = grid.len();
        let m = DMatrix::from_fn(targets.len(), n, |r, c| rows[r][c]);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(FracError::NonConvergentQuadrature {
                what: "Green kernel quadrature",
                achieved: f64::NAN,
                requested: 1e-10,
            });
        }
        Ok(m)
    }

    fn kernel_matrix(&self) -> Result<&DMatrix<f64>> {
        self.kernel
            .get_or_init(|| {
                let all: Vec<usize> = (0..self.grid().len()).collect();
                self.kernel_rows(&all)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn apply(&self, f: &GridFunction, method: GreenMethod) -> Result<GridFunction> {
        let grid = self.grid();
        if f.len() != grid.len() {
            return Err(FracError::Domain(format!("{} values for {} nodes", f.len(), grid.len())));
        }
        let values = match method {
            GreenMethod::DiscreteInverse => self.solve(&f.values)?,
            GreenMethod::KernelQuadrature => {
                let k = self.kernel_matrix()?;
                (k * nalgebra::DVector::from_column_slice(&f.values)).as_slice().to_vec()
            }
        };
        GridFunction::new(grid, values)
    }
}

/// Boundary profile `rho^{min(s, tau)}`, or `rho^s ln(1/rho)` at `tau = s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarrhoKind {
    PowerMin,
    LogCritical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarrhoProfile {
    pub tau: f64,
    pub s: f64,
    pub kind: VarrhoKind,
}

impl VarrhoProfile {
    pub fn new(tau: f64, s: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 2.0 * s) {
            return Err(FracError::Domain(format!("exponent {tau} outside (0, {})", 2.0 * s)));
        }
        let kind = if (tau - s).abs() <= 1e-12 { VarrhoKind::LogCritical } else { VarrhoKind::PowerMin };
        Ok(Self { tau, s, kind })
    }

    /// Value at clamped distance `rho = min(1/2, dist)`.
    pub fn value(&self, dist: f64) -> f64 {
        let rho = dist.min(0.5);
        match self.kind {
            VarrhoKind::PowerMin => rho.powf(self.s.min(self.tau)),
            VarrhoKind::LogCritical => rho.powf(self.s) * (1.0 / rho).ln(),
        }
    }
}

/// Nodes of the grid whose boundary distance is in `[lo, hi]`, one side only.
/// Every `stride`-th node at boundary distance at least 0.3.
pub fn bulk_nodes(grid: &RadialGrid, stride: usize) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.boundary_distances()[i] >= 0.3).step_by(stride.max(1)).collect()
}

pub fn window_nodes(grid: &RadialGrid, lo: f64, hi: f64) -> Vec<usize> {
    grid.window(lo, hi)
        .into_iter()
        .filter(|&i| grid.nodes()[i] >= 0.0)
        .collect()
}

/// Samples of `G[rho^{tau - 2s}] / varrho_tau` on the boundary window.
pub fn green_two_sided(tau: f64, green: &GreenOperator, window: (f64, f64)) -> Result<Vec<RatioSample>> {
    let s = green.params().s;
    let profile = VarrhoProfile::new(tau, s)?;
    let grid = green.grid();
    let f: Vec<f64> = (0..grid.len()).map(|i| grid.rho(i).powf(tau - 2.0 * s)).collect();
    let u = green.solve(&f)?;
    let idx = window_nodes(grid, window.0, window.1);
    if idx.len() < 3 {
        return Err(FracError::InsufficientWindow { points: idx.len(), needed: 3 });
    }
    Ok(idx
        .into_iter()
        .map(|i| {
            let rho = grid.rho(i);
            RatioSample { rho, value: u[i], ratio: u[i] / profile.value(grid.boundary_distances()[i]) }
        })
        .collect())
}

/// `q = G[rho^{-2 gamma}] rho^{-gamma}` at the probe distances and its fitted power.
#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub gamma: f64,
    pub samples: Vec<RatioSample>,
    pub growth: LineFit,
}

impl BlowupReport {
    /// Exponent of `q` in `rho`, negative when `q` blows up at the boundary.
    pub fn growth_exponent(&self) -> f64 {
        self.growth.slope
    }

    /// `q` at the smallest probe over `q` at the largest.
    pub fn amplification(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.ratio / a.ratio,
            _ => f64::NAN,
        }
    }

    pub fn strictly_increasing_towards_boundary(&self) -> bool {
        // Samples are ordered by decreasing distance.
        self.samples.windows(2).all(|w| w[1].ratio > w[0].ratio)
    }
}

/// Log-log interpolation of positive nodal values at boundary distance `d`.
fn interpolate_in_distance(grid: &RadialGrid, values: &[f64], d: f64) -> Result<f64> {
    let idx = window_nodes(grid, 0.0, 1.0);
    let dist = grid.boundary_distances();
    // idx runs towards the boundary: distances decrease.
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        if dist[i] >= d && d >= dist[j] {
            let t = (d / dist[i]).ln() / (dist[j] / dist[i]).ln();
            if !(values[i] > 0.0 && values[j] > 0.0) {
                return Ok(values[i] + t * (values[j] - values[i]));
            }
            return Ok((values[i].ln() + t * (values[j] / values[i]).ln()).exp());
        }
    }
    Err(FracError::WindowTooClose { lo: d, hi: d, resolution: grid.min_distance() })
}

pub fn blowup_ratio(gamma: f64, green: &GreenOperator, probes: &[f64]) -> Result<BlowupReport> {
    let s = green.params().s;
    if !(gamma > 0.0 && gamma < s) {
        return Err(FracError::Domain(format!("gamma = {gamma} outside (0, {s})")));
    }
    let grid = green.grid();
    let f: Vec<f64> = (0..grid.len()).map(|i| grid.rho(i).powf(-2.0 * gamma)).collect();
    let u = green.solve(&f)?;
    let mut probes = probes.to_vec();
    probes.sort_by(|a, b| b.total_cmp(a));
    let samples = probes
        .iter()
        .map(|&rho| {
            let value = interpolate_in_distance(grid, &u, rho)?;
            Ok(RatioSample { rho, value, ratio: value * rho.powf(-gamma) })
        })
        .collect::<Result<Vec<_>>>()?;
    let rhos: Vec<f64> = samples.iter().map(|s| s.rho).collect();
    let qs: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
    let growth = loglog_fit(&rhos, &qs)?;
    Ok(BlowupReport { gamma, samples, growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::quadrature::adaptive;
    use crate::special::torsion_constant;

    #[test]
    fn b_matches_adaptive_quadrature() {
        for dim in 1..=3 {
            let half_n = 0.5 * dim as f64;
            for s in [0.3, 0.5, 0.8] {
                let k = BallKernel::new(dim, s);
                let kappa = half_n - s;
                for z in [1e-4f64, 0.3, 1.0, 2.5, 40.0, 1e6] {
                    // w = t^s on [0, min(z, 1)], then t = 1/u beyond 1.
                    let head = adaptive(|w: f64| (1.0 + w.powf(1.0 / s)).powf(-half_n), 0.0, z.min(1.0).powf(s), 1e-13, 50).unwrap().value / s;
                    let tail = if z <= 1.0 {
                        0.0
                    } else if kappa > 0.0 {
                        adaptive(|w: f64| (1.0 + w.powf(1.0 / kappa)).powf(-half_n), z.powf(-kappa), 1.0, 1e-13, 50).unwrap().value / kappa
                    } else {
                        adaptive(|u: f64| u.powf(kappa - 1.0) * (1.0 + u).powf(-half_n), 1.0 / z, 1.0, 1e-13, 50).unwrap().value
                    };
                    let reference = head + tail;
                    let v = k.b(z);
                    assert!(((v - reference) / reference).abs() < 1e-10, "N={dim} s={s} z={z}: {v} vs {reference}");
                }
            }
        }
    }

    #[test]
    fn kernel_is_symmetric_and_positive() {
        let k = BallKernel::new(3, 0.4);
        for (r, rho) in [(0.2, 0.7), (0.5, 0.51), (0.9, 0.05)] {
            let a = k.radial(r, 1.0 - r, rho, 1.0 - rho) / (rho * rho);
            let b = k.radial(rho, 1.0 - rho, r, 1.0 - r) / (r * r);
            assert!(a > 0.0 && ((a - b) / a).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn torsion_function_from_both_methods() {
        for (geometry, s) in [(Geometry::Interval, 0.5), (Geometry::Interval, 0.3), (Geometry::Radial { dim: 2 }, 0.6), (Geometry::Radial { dim: 3 }, 0.4)] {
            let grid = GridSpec::for_order(geometry, 48, s).build().unwrap();
            let params = FracParams::new(s, geometry.dim()).unwrap();
            let green = GreenOperator::new(&grid, &params).unwrap();
            let cbar = torsion_constant(geometry.dim(), s);
            let exact = |i: usize| {
                let d = grid.boundary_distances()[i];
                cbar * (d * (2.0 - d)).powf(s)
            };
            let inverse = green.solve(&vec![1.0; grid.len()]).unwrap();
            let targets = bulk_nodes(&grid, 4);
            let rows = green.kernel_rows(&targets).unwrap();
            for (r, &i) in targets.iter().enumerate() {
                let quad: f64 = rows.row(r).iter().sum();
                assert!(((quad - exact(i)) / exact(i)).abs() < 1e-5, "{geometry:?} kernel node {i}: {quad} vs {}", exact(i));
            }
            for i in bulk_nodes(&grid, 1) {
                let rel = (inverse[i] - exact(i)) / exact(i);
                assert!(rel.abs() < 5e-3, "{geometry:?} inverse node {i}: {rel}");
            }
        }
    }

    #[test]
    fn methods_agree_on_a_smooth_load() {
        for (geometry, s) in [(Geometry::Interval, 0.4), (Geometry::Radial { dim: 2 }, 0.7)] {
            let grid = GridSpec::for_order(geometry, 48, s).build().unwrap();
            let params = FracParams::new(s, geometry.dim()).unwrap();
            let green = GreenOperator::new(&grid, &params).unwrap();
            let f = GridFunction::sample(&grid, |x, _| (2.0 * x).cos() + x);
            let inverse = green.solve(&f.values).unwrap();
            let targets = bulk_nodes(&grid, 3);
            let rows = green.kernel_rows(&targets).unwrap();
            for (r, &i) in targets.iter().enumerate() {
                let quad: f64 = rows.row(r).iter().zip(&f.values).map(|(k, v)| k * v).sum();
                assert!(((quad - inverse[i]) / inverse[i]).abs() < 1e-3, "{geometry:?} node {i}: {quad} vs {}", inverse[i]);
            }
        }
    }

    fn interval(s: f64, n: usize) -> GreenOperator {
        let grid = GridSpec::for_order(Geometry::Interval, n, s).build().unwrap();
        GreenOperator::new(&grid, &FracParams::new(s, 1).unwrap()).unwrap()
    }

    #[test]
    fn two_sided_in_all_three_regimes() {
        let green = interval(0.5, 128);
        for tau in [0.2, 0.5, 0.8] {
            let r = crate::barrier::RatioSummary::of(&green_two_sided(tau, &green, (1e-3, 0.4)).unwrap());
            assert!(r.all_positive() && r.spread() <= 20.0, "tau={tau}: {r:?}");
        }
    }

    #[test]
    fn blowup_exponents() {
        let probes: Vec<f64> = (0..9).map(|k| 10f64.powf(-1.0 - 0.25 * k as f64)).collect();
        for (s, gamma) in [(0.6, 0.5), (0.75, 0.6)] {
            let b = blowup_ratio(gamma, &interval(s, 128), &probes).unwrap();
            assert!(b.strictly_increasing_towards_boundary());
            assert!((b.growth_exponent() - (2.0 * s - 3.0 * gamma)).abs() < 0.05, "{b:?}");
        }
        let bounded = blowup_ratio(0.35, &interval(0.6, 128), &probes).unwrap();
        assert!(bounded.growth_exponent() >= 0.0);
    }
}
