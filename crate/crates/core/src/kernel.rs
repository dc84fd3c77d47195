//! Kernels of the fractional Laplacian reduced to one radial variable.
//!
//! For a radial `u`, `(-Delta)^s u(r) = p.v. int_0^inf (u(r) - u(y)) k(r, y) dy`
//! with `k` obtained by integrating `c_{N,s} |x - z|^{-N-2s}` over the sphere
//! `|z| = y`. On the interval `k(x, y) = c_{1,s} |x - y|^{-1-2s}`.
//!
//! Every kernel is written as `k(r, r + t) = m(r, t) |t|^{-1-2s}` with `m`
//! smooth across `t = 0`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::grid::Geometry;
use crate::quadrature::{gl16, gl32, gl8, graded_away};
use crate::special::{c_ns, pow_diff_over_exp};

/// `J(q) = int_0^{pi/2} (cos^2 psi + q sin^2 psi)^s dpsi` for `q` in `[0, 1]`.
pub fn j_factor(q: f64, s: f64) -> f64 {
    if q >= 1.0 {
        return FRAC_PI_2;
    }
    if q <= 0.0 {
        return PI.sqrt() * gamma(s + 0.5) / (2.0 * gamma(s + 1.0));
    }
    // phi = pi/2 - psi: integrand (sin^2 phi + q cos^2 phi)^s, nearly |phi|^{2s} for small q.
    let f = |phi: f64| {
        let (sn, cs) = phi.sin_cos();
        (sn * sn + q * cs * cs).powf(s)
    };
    if q >= 0.05 {
        return gl32().integrate(0.0, FRAC_PI_2, f);
    }
    let sq = q.sqrt();
    let split = (20.0 * sq).min(FRAC_PI_2);
    let wmax = (split / sq).asinh();
    let near = gl32().integrate(0.0, wmax, |w| {
        let phi = sq * w.sinh();
        f(phi) * sq * w.cosh()
    });
    let far = if split < FRAC_PI_2 {
        graded_away(gl16(), split, FRAC_PI_2, split, f)
    } else {
        0.0
    };
    near + far
}

const J_DEGREE: usize = 16;
const J_LEVELS: usize = 42;

/// Piecewise Chebyshev table of `u -> J(u^2)` on the dyadic intervals
/// `[2^{-k-1}, 2^{-k}]`, with `J(0)` below the last one.
#[derive(Debug, Clone)]
pub struct JTable {
    at_zero: f64,
    coeffs: Vec<[f64; J_DEGREE + 1]>,
}

impl JTable {
    pub fn new(s: f64) -> Self {
        let m = J_DEGREE + 1;
        let coeffs = (0..J_LEVELS)
            .map(|k| {
                let hi = 0.5f64.powi(k as i32);
                let (mid, half) = (0.75 * hi, 0.25 * hi);
                let values: Vec<f64> = (0..m)
                    .map(|j| {
                        let x = (PI * (j as f64 + 0.5) / m as f64).cos();
                        let u = mid + half * x;
                        j_factor(u * u, s)
                    })
                    .collect();
                let mut c = [0.0; J_DEGREE + 1];
                for (i, ci) in c.iter_mut().enumerate() {
                    let sum: f64 = values
                        .iter()
                        .enumerate()
                        .map(|(j, v)| v * (PI * i as f64 * (j as f64 + 0.5) / m as f64).cos())
                        .sum();
                    *ci = 2.0 * sum / m as f64;
                }
                c[0] *= 0.5;
                c
            })
            .collect();
        Self { at_zero: j_factor(0.0, s), coeffs }
    }

    /// `J(q)` with `q = u^2`, `u` in `[0, 1]`.
    pub fn eval_sqrt(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return FRAC_PI_2;
        }
        if u <= 0.0 {
            return self.at_zero;
        }
        let k = (-u.log2()).floor() as usize;
        if k >= J_LEVELS {
            return self.at_zero;
        }
        let hi = 0.5f64.powi(k as i32);
        let x = ((u - 0.75 * hi) / (0.25 * hi)).clamp(-1.0, 1.0);
        let c = &self.coeffs[k];
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ci in c.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + ci;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + c[0]
    }
}

/// The reduced kernel of a geometry.
#[derive(Debug, Clone)]
pub struct ReducedKernel {
    pub geometry: Geometry,
    pub s: f64,
    c: f64,
    alpha: f64,
    table: Option<Arc<JTable>>,
}

impl ReducedKernel {
    pub fn new(geometry: Geometry, s: f64) -> Self {
        let c = c_ns(geometry.dim(), s);
        let table = match geometry {
            Geometry::Radial { dim: 2 } => Some(Arc::new(JTable::new(s))),
            _ => None,
        };
        Self { geometry, s, c, alpha: 1.0 + 2.0 * s, table }
    }

    /// `m(r, t) = k(r, r + t) |t|^{1+2s}`; `t` must be the accurate offset.
    pub fn smooth(&self, r: f64, t: f64) -> f64 {
        let c = self.c;
        match self.geometry {
            Geometry::Interval => c,
            Geometry::Radial { dim: 1 } => {
                let y = r + t;
                let at = t.abs();
                if at == 0.0 {
                    return c;
                }
                c * (1.0 + (at / (r + y)).powf(self.alpha))
            }
            Geometry::Radial { dim: 2 } => {
                let y = r + t;
                let u = (t / (r + y)).abs();
                let j = match &self.table {
                    Some(table) => table.eval_sqrt(u),
                    None => j_factor(u * u, self.s),
                };
                c * 4.0 * y / (r + y) * j
            }
            Geometry::Radial { .. } => {
                let y = r + t;
                let sum = r + y;
                // 1 - (|t| / (r + y))^alpha with |t| / (r + y) - 1 = -2 min(r, y) / (r + y).
                let lz = (-2.0 * r.min(y) / sum).ln_1p();
                let bracket = -(self.alpha * lz).exp_m1();
                if r == 0.0 {
                    return c * 4.0 * PI;
                }
                c * 2.0 * PI * y / (r * self.alpha) * bracket
            }
        }
    }

    /// `k(r, r + t)`.
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        self.smooth(r, t) * t.abs().powf(-self.alpha)
    }

    /// Exterior mass `int_{outside} k(r, y) dy` for the node at position `pos`
    /// with boundary distance `dist`.
    pub fn tail(&self, pos: f64, dist: f64) -> f64 {
        let s = self.s;
        let c = self.c;
        match self.geometry {
            Geometry::Interval | Geometry::Radial { dim: 1 } => {
                let _ = pos;
                c / (2.0 * s) * (dist.powf(-2.0 * s) + (2.0 - dist).powf(-2.0 * s))
            }
            Geometry::Radial { dim: 2 } => {
                let r = pos;
                let big = 1e4;
                let near = graded_away(gl8(), dist, big, dist, |t| self.eval(r, t));
                // Beyond the cut the kernel is 2 pi c y^{-1-2s} up to O(r^2 / y^2).
                let y = r + big;
                near + 2.0 * PI * c * y.powf(-2.0 * s) / (2.0 * s)
            }
            Geometry::Radial { .. } => {
                let r = pos;
                if r < 1e-8 {
                    return 4.0 * PI * c / (2.0 * s);
                }
                let e = 1.0 - 2.0 * s;
                let first = pow_diff_over_exp(dist, 2.0 - dist, e);
                let second = r * (dist.powf(-2.0 * s) + (2.0 - dist).powf(-2.0 * s)) / (2.0 * s);
                -c * 2.0 * PI / (r * self.alpha) * (first - second)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;

    #[test]
    fn j_factor_matches_adaptive() {
        for s in [0.2, 0.5, 0.9] {
            for q in [0.0, 1e-12, 1e-6, 1e-3, 0.04, 0.3, 1.0] {
                let reference = adaptive(
                    |p: f64| (p.cos().powi(2) + q * p.sin().powi(2)).powf(s),
                    0.0,
                    FRAC_PI_2,
                    1e-13,
                    50,
                )
                .unwrap()
                .value;
                let v = j_factor(q, s);
                assert!((v - reference).abs() < 1e-11, "s={s} q={q}: {v} vs {reference}");
            }
        }
    }

    #[test]
    fn j_table_matches_direct_evaluation() {
        for s in [0.2, 0.5, 0.75] {
            let table = JTable::new(s);
            for k in 0..400 {
                let u = (k as f64 * 0.37).sin().abs() * 0.5f64.powi(k / 8);
                let direct = j_factor(u * u, s);
                let v = table.eval_sqrt(u);
                assert!(((v - direct) / direct).abs() < 1e-12, "s={s} u={u}: {v} vs {direct}");
            }
        }
    }

    /// Spherical average of `c |x - z|^{-3-2s}` over `|z| = y` by direct quadrature.
    fn shell_average_3d(s: f64, r: f64, y: f64) -> f64 {
        let c = c_ns(3, s);
        let v = adaptive(
            |mu: f64| (r * r + y * y - 2.0 * r * y * mu).powf(-1.5 - s),
            -1.0,
            1.0,
            1e-12,
            60,
        )
        .unwrap()
        .value;
        c * 2.0 * PI * y * y * v
    }

    fn shell_average_2d(s: f64, r: f64, y: f64) -> f64 {
        let c = c_ns(2, s);
        let v = adaptive(
            |th: f64| (r * r + y * y - 2.0 * r * y * th.cos()).powf(-1.0 - s),
            0.0,
            PI,
            1e-12,
            60,
        )
        .unwrap()
        .value;
        c * 2.0 * y * v
    }

    #[test]
    fn radial_kernels_match_shell_averages() {
        for s in [0.3, 0.7] {
            for (r, y) in [(0.5, 0.8), (0.1, 0.9), (0.9, 0.3), (0.01, 0.6)] {
                let k3 = ReducedKernel::new(Geometry::Radial { dim: 3 }, s).eval(r, y - r);
                let e3 = shell_average_3d(s, r, y);
                assert!(((k3 - e3) / e3).abs() < 1e-9, "3d s={s} r={r} y={y}: {k3} vs {e3}");
                let k2 = ReducedKernel::new(Geometry::Radial { dim: 2 }, s).eval(r, y - r);
                let e2 = shell_average_2d(s, r, y);
                assert!(((k2 - e2) / e2).abs() < 1e-9, "2d s={s} r={r} y={y}: {k2} vs {e2}");
            }
        }
    }

    #[test]
    fn tails_match_numeric_integration() {
        for s in [0.25, 0.5, 0.8] {
            for dim in 1..=3 {
                let k = ReducedKernel::new(Geometry::Radial { dim }, s);
                for r in [0.2, 0.7, 0.95] {
                    let dist = 1.0 - r;
                    let numeric = graded_away(gl16(), dist, 1e6, dist, |t| k.eval(r, t))
                        + 2.0 * PI * c_ns(dim, s) * (1e6f64).powf(-2.0 * s) / (2.0 * s)
                            * if dim == 3 { 2.0 } else if dim == 1 { 1.0 / PI } else { 1.0 };
                    let t = k.tail(r, dist);
                    assert!(((t - numeric) / t).abs() < 1e-7, "dim={dim} s={s} r={r}: {t} vs {numeric}");
                }
            }
        }
    }
}
