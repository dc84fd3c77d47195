//! Mesh-free evaluation of `(-Delta)^s` at a single point.
//!
//! `(-Delta)^s u(x) = c/2 int_{S^{N-1}} int_0^inf (2u(x) - u(x + t w) - u(x - t w)) t^{-1-2s} dt dw`.
//! The line integral is split at every `t` where the line crosses a
//! breakpoint of the profile; the first `t`-piece uses the Taylor model
//! `-u''(0) t^{1-2s}`, the last one is integrated in closed form for
//! compactly supported profiles. For `N = 2, 3` the angular integral is done
//! adaptively over one polar angle.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{FracError, Result};
use crate::operator::FracParams;
use crate::profile::Profile;
use crate::quadrature::{adaptive, tanh_sinh, Estimate};

const TAYLOR_CUT: f64 = 1e-4;

/// One direction: `int_0^inf (2 u0 - g(t) - g(-t)) t^{-1-2s} dt`.
struct Line<F: Fn(f64) -> f64> {
    s: f64,
    u0: f64,
    curvature: f64,
    g: F,
    breaks: Vec<f64>,
    compact: bool,
    growth: f64,
}

impl<F: Fn(f64) -> f64> Line<F> {
    fn integrate(&self, tol: f64) -> Result<Estimate> {
        let s = self.s;
        let mut breaks: Vec<f64> = self.breaks.iter().copied().filter(|b| *b > 0.0).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        let first = breaks.first().copied().unwrap_or(1.0);
        let cut = TAYLOR_CUT.min(0.25 * first);
        let mut value = -self.curvature * cut.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        let mut error = 0.0;
        let integrand = |t: f64| (2.0 * self.u0 - (self.g)(t) - (self.g)(-t)) * t.powf(-1.0 - 2.0 * s);
        let mut knots = vec![cut];
        knots.extend(breaks.iter().copied().filter(|&b| b > cut));
        let pieces = knots.len() + 1;
        let piece_tol = tol / pieces as f64;
        for w in knots.windows(2) {
            let e = piece(&integrand, w[0], w[1], piece_tol)?;
            value += e.value;
            error += e.error;
        }
        let last = *knots.last().unwrap_or(&cut);
        if self.compact {
            value += 2.0 * self.u0 * last.powf(-2.0 * s) / (2.0 * s);
        } else {
            // t = last w^{-k} with k = 1 / (2s - growth) flattens the tail to O(1) in w.
            let k = 1.0 / (2.0 * s - self.growth);
            let e = adaptive(
                |w: f64| {
                    let t = last * w.powf(-k);
                    integrand(t) * k * t / w
                },
                0.0,
                1.0,
                piece_tol,
                60,
            )?;
            value += e.value;
            error += e.error;
        }
        Ok(Estimate { value, error })
    }
}

fn piece<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<Estimate> {
    match tanh_sinh(|t, _, _| f(t), lo, hi, tol) {
        Ok(e) => Ok(e),
        Err(_) => adaptive(f, lo, hi, tol, 60),
    }
}

/// Positive `t` with `|x + t w| = b` where `|x| = r`, `<x, w> = r mu`.
fn crossings(r: f64, mu: f64, b: f64, out: &mut Vec<f64>) {
    let disc = b * b - r * r * (1.0 - mu * mu);
    if disc < 0.0 {
        return;
    }
    let root = disc.sqrt();
    for sign in [1.0, -1.0] {
        let m = sign * mu;
        for t in [-r * m + root, -r * m - root] {
            if t > 0.0 {
                out.push(t);
            }
        }
    }
}

/// `(-Delta)^s profile` at `x`: the signed position for `N = 1`, the radius
/// for radial profiles in `N = 2, 3`.
pub fn apply_pointwise(profile: &dyn Profile, params: &FracParams, x: f64, tol: f64) -> Result<Estimate> {
    if !(tol > 0.0) {
        return Err(FracError::Domain(format!("tolerance {tol} must be positive")));
    }
    let s = params.s;
    let c = params.c_ns;
    if params.dim == 1 {
        let breaks = profile.breakpoints().iter().map(|b| (b - x).abs()).collect();
        let line = Line {
            s,
            u0: profile.value(x),
            curvature: profile.d2(x),
            g: |t: f64| profile.value(x + t),
            breaks,
            compact: profile.compact(),
            growth: profile.growth(),
        };
        let e = line.integrate(tol / c)?;
        return Ok(Estimate { value: c * e.value, error: c * e.error });
    }
    if !profile.compact() {
        return Err(FracError::Domain("radial profiles must be compactly supported".into()));
    }
    let r = x.abs();
    let u0 = profile.value(r);
    let (d1, d2) = (profile.d1(r), profile.d2(r));
    let radii: Vec<f64> = profile.breakpoints().iter().map(|b| b.abs()).filter(|b| *b > 0.0).collect();
    let inner = |mu: f64, tol: f64| -> Result<Estimate> {
        let curvature = if r < 1e-12 { d2 } else { d2 * mu * mu + d1 * (1.0 - mu * mu) / r };
        let mut breaks = Vec::new();
        for &b in &radii {
            crossings(r, mu, b, &mut breaks);
        }
        let line = Line {
            s,
            u0,
            curvature,
            g: |t: f64| profile.value((r * r + 2.0 * r * mu * t + t * t).max(0.0).sqrt()),
            breaks,
            compact: true,
            growth: 0.0,
        };
        line.integrate(tol)
    };
    // Outer weight and variable: mu in [0, 1] for N = 3, theta in [0, pi/2] for N = 2.
    let (scale, upper) = match params.dim {
        2 => (2.0 * c, FRAC_PI_2),
        _ => (2.0 * PI * c, 1.0),
    };
    let inner_tol = 0.1 * tol / (scale * upper);
    let mut failure = None;
    let mut inner_error = 0.0;
    let outer = adaptive(
        |v: f64| {
            let mu = if params.dim == 2 { v.cos() } else { v };
            match inner(mu, inner_tol) {
                Ok(e) => {
                    inner_error = f64::max(inner_error, e.error);
                    e.value
                }
                Err(err) => {
                    failure.get_or_insert(err);
                    0.0
                }
            }
        },
        0.0,
        upper,
        0.5 * tol / scale,
        40,
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(Estimate {
        value: scale * outer.value,
        error: scale * (outer.error + inner_error * upper),
    })
}
