//! One-dimensional quadrature rules.
//!
//! Three families are provided:
//! - fixed Gauss-Legendre rules (cached for the sizes used by the assembly loops),
//! - globally adaptive Gauss-Kronrod (7/15) with a depth cap,
//! - tanh-sinh for integrands with algebraic endpoint singularities.

use std::sync::OnceLock;

use crate::error::{FracError, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached 8-point rule.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// Cached 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Cached 32-point rule.
pub fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Globally adaptive: the interval with the largest Kronrod-Gauss difference
/// is bisected until the summed estimate is below `tol`. Intervals at
/// `max_depth` are frozen; if the target cannot be met the call fails with
/// [`FracError::NonConvergentQuadrature`].
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    struct Piece {
        lo: f64,
        hi: f64,
        value: f64,
        error: f64,
        depth: u32,
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![Piece { lo: a, hi: b, value: v, error: e, depth: 0 }];
    let mut total_err = e;
    loop {
        if !total_err.is_finite() || pieces.iter().any(|p| !p.value.is_finite()) {
            return Err(FracError::NonConvergentQuadrature {
                what: "non-finite integrand",
                achieved: f64::INFINITY,
                requested: tol,
            });
        }
        if total_err <= tol {
            break;
        }
        let worst = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < max_depth)
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(FracError::NonConvergentQuadrature {
                what: "adaptive Gauss-Kronrod",
                achieved: total_err,
                requested: tol,
            });
        };
        let p = pieces.swap_remove(i);
        let mid = 0.5 * (p.lo + p.hi);
        let (v1, e1) = gk15(&mut f, p.lo, mid);
        let (v2, e2) = gk15(&mut f, mid, p.hi);
        pieces.push(Piece { lo: p.lo, hi: mid, value: v1, error: e1, depth: p.depth + 1 });
        pieces.push(Piece { lo: mid, hi: p.hi, value: v2, error: e2, depth: p.depth + 1 });
        total_err = pieces.iter().map(|p| p.error).sum();
    }
    let value = pieces.iter().map(|p| p.value).sum();
    Ok(Estimate { value, error: total_err })
}

/// Tanh-sinh integration of `f` over `[a, b]`.
///
/// `f` receives `(x, da, db)` where `da = x - a` and `db = b - x` are computed
/// without cancellation, so integrands singular at an endpoint can be written
/// in terms of the distance to it.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Estimate> {
    const MAX_LEVEL: u32 = 10;
    const T_MAX: f64 = 4.0;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut eval = |t: f64| -> f64 {
        let sh = pi2 * t.sinh();
        let ch = pi2 * t.cosh();
        let u = 1.0 / sh.cosh();
        // 1 - tanh(sh) and 1 + tanh(sh) without cancellation.
        let e = (-2.0 * sh.abs()).exp();
        let small = 2.0 * e / (1.0 + e);
        let (one_minus, one_plus) = if sh >= 0.0 {
            (small, 2.0 - small)
        } else {
            (2.0 - small, small)
        };
        let da = half * one_plus;
        let db = half * one_minus;
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if da < db { a + da } else { b - db };
        let w = half * ch * u * u;
        if w == 0.0 {
            return 0.0;
        }
        let v = f(x, da, db);
        w * v
    };
    let _ = mid;
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > T_MAX {
            break;
        }
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut diff = f64::NAN;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > T_MAX {
                break;
            }
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        diff = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            break;
        }
        if diff <= tol {
            return Ok(Estimate { value: estimate, error: diff });
        }
    }
    Err(FracError::NonConvergentQuadrature {
        what: "tanh-sinh",
        achieved: diff,
        requested: tol,
    })
}

/// Composite Gauss-Legendre over `[a, b]` on pieces that grow geometrically
/// away from a singular point at `a - dist` (`dist > 0`).
///
/// Every piece has length at most its distance from the singular point, which
/// keeps the relative error of an 8-point rule near machine precision for
/// kernels like `|t|^{-1-2s}`.
pub fn graded_away<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    dist: f64,
    mut f: F,
) -> f64 {
    debug_assert!(b >= a && dist > 0.0);
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let d = dist + (lo - a);
        let hi = (lo + d).min(b);
        total += rule.integrate(lo, hi, &mut f);
        lo = hi;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        for n in [3, 8, 16, 32] {
            let rule = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let v = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n}");
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn adaptive_handles_mild_singularity() {
        let est = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-7, 60).unwrap();
        assert!((est.value - 2.0).abs() < 1e-6, "{est:?}");
    }

    #[test]
    fn adaptive_reports_failure_at_depth_cap() {
        let res = adaptive(|x: f64| x.powf(-0.9), 0.0, 1.0, 1e-12, 3);
        assert!(matches!(res, Err(FracError::NonConvergentQuadrature { .. })));
    }

    #[test]
    fn tanh_sinh_endpoint_singularities() {
        // Beta(0.3, 0.6)
        let est = tanh_sinh(|_, da, db| da.powf(-0.7) * db.powf(-0.4), 0.0, 1.0, 1e-11).unwrap();
        let exact = crate::special::beta(0.3, 0.6);
        assert!((est.value - exact).abs() < 1e-9, "{} vs {}", est.value, exact);
    }

    #[test]
    fn graded_pieces_integrate_power_kernel() {
        let s = 0.75;
        let v = graded_away(gl8(), 1e-6, 1.0, 1e-6, |t| t.powf(-1.0 - 2.0 * s));
        let exact = ((1e-6f64).powf(-2.0 * s) - 1.0) / (2.0 * s);
        assert!(((v - exact) / exact).abs() < 1e-10, "{v} {exact}");
    }
}
