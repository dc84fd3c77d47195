//! The one-dimensional boundary kernel
//!
//! `psi_s(tau) = int_0^inf [2 - (1+t)^tau - |1-t|^tau chi_(0,1)(t)] t^{-1-2s} dt`,
//!
//! which fixes the sign of `(-Delta)^s` applied to `rho^tau` next to a flat
//! boundary: `(-Delta)^s_R (t_+)^tau (l) = c_{1,s} l^{tau-2s} psi_s(tau)`.
//!
//! The integral is split at `t0 = 1/2`, `1 - delta`, `1` and `T`:
//! - on `[0, t0]` the bracket is expanded in even powers of `t`, which cancels
//!   the non-integrable terms and integrates exactly;
//! - the `(1-t)^tau` endpoint singularity on `[1 - delta, 1]` is integrated
//!   through the binomial series of `(1-w)^{-1-2s}` against `w^tau`;
//! - the smooth middle pieces use adaptive Gauss-Kronrod;
//! - the `[T, inf)` tail of every monomial is integrated in closed form.

use crate::error::{FracError, Result};
use crate::quadrature::adaptive;
use crate::roots::brent;
use crate::special::{binomials_with_derivative, c_ns};

/// Default absolute tolerance for kernel evaluations.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Maximum bisection depth of the adaptive pieces.
pub const MAX_DEPTH: u32 = 30;

const SERIES_END: f64 = 0.5;
const DELTA: f64 = 0.1;
const TAIL_START: f64 = 100.0;
const SERIES_TERMS: usize = 400;

/// A kernel value with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub s: f64,
    pub tau: f64,
    pub value: f64,
    pub est_error: f64,
}

fn check_domain(s: f64, tau: f64, tol: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(FracError::Domain(format!("order s = {s} outside (0, 1)")));
    }
    if !(tau > 0.0 && tau < 2.0 * s) {
        return Err(FracError::Domain(format!("exponent tau = {tau} outside (0, {})", 2.0 * s)));
    }
    if !(tol > 0.0) {
        return Err(FracError::Domain(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

/// Sum of a series whose terms are produced by `term(k)` for `k >= start`,
/// stopping once terms fall below `cutoff` in magnitude.
fn sum_series<F: FnMut(usize) -> f64>(start: usize, cutoff: f64, mut term: F) -> (f64, f64) {
    let mut total = 0.0;
    let mut last = f64::INFINITY;
    for k in start..start + SERIES_TERMS {
        let t = term(k);
        total += t;
        last = t.abs();
        if last < cutoff && k > start + 2 {
            break;
        }
    }
    (total, last)
}

/// Evaluates `psi_s(tau)` to absolute accuracy `tol`.
pub fn psi(s: f64, tau: f64, tol: f64) -> Result<PsiValue> {
    check_domain(s, tau, tol)?;
    let two_s = 2.0 * s;
    let (binom, _) = binomials_with_derivative(tau, 2 * SERIES_TERMS + 2);
    let cut = tol * 1e-3;

    // [0, t0]: 2 - (1+t)^tau - (1-t)^tau = -2 sum_{k>=1} C(tau, 2k) t^{2k}.
    let (near_zero, last0) = sum_series(1, cut, |k| {
        let p = 2.0 * k as f64 - two_s;
        -2.0 * binom[2 * k] * SERIES_END.powf(p) / p
    });

    let piece_tol = tol / 8.0;
    let inner = adaptive(
        |t: f64| (2.0 - (1.0 + t).powf(tau) - (1.0 - t).powf(tau)) * t.powf(-1.0 - two_s),
        SERIES_END,
        1.0 - DELTA,
        piece_tol,
        MAX_DEPTH,
    )?;
    let smooth_near_one = adaptive(
        |t: f64| (2.0 - (1.0 + t).powf(tau)) * t.powf(-1.0 - two_s),
        1.0 - DELTA,
        TAIL_START,
        piece_tol,
        MAX_DEPTH,
    )?;

    // -int_0^delta w^tau (1-w)^{-1-2s} dw, (1-w)^{-1-2s} = sum_j b_j w^j.
    let mut b = 1.0;
    let (sing, last1) = sum_series(0, cut, |j| {
        if j > 0 {
            b *= (two_s + j as f64) / j as f64;
        }
        let p = tau + j as f64 + 1.0;
        -b * DELTA.powf(p) / p
    });

    // [T, inf): 2 t^{-1-2s} - sum_j C(tau, j) t^{tau-2s-j-1}.
    let (tail_series, last2) = sum_series(0, cut, |j| {
        let beta = tau - two_s - j as f64;
        binom[j] * TAIL_START.powf(beta) / beta
    });
    let tail = TAIL_START.powf(-two_s) / s + tail_series;

    let value = near_zero + inner.value + smooth_near_one.value + sing + tail;
    let est_error = inner.error + smooth_near_one.error + 2.0 * (last0 + last1 + last2);
    Ok(PsiValue { s, tau, value, est_error })
}

/// Evaluates `psi_s'(tau)`, the `tau`-derivative of [`psi`].
pub fn psi_prime(s: f64, tau: f64, tol: f64) -> Result<PsiValue> {
    check_domain(s, tau, tol)?;
    let two_s = 2.0 * s;
    let (binom, dbinom) = binomials_with_derivative(tau, 2 * SERIES_TERMS + 2);
    let cut = tol * 1e-3;

    let (near_zero, last0) = sum_series(1, cut, |k| {
        let p = 2.0 * k as f64 - two_s;
        -2.0 * dbinom[2 * k] * SERIES_END.powf(p) / p
    });

    let piece_tol = tol / 8.0;
    let inner = adaptive(
        |t: f64| {
            let g = (1.0 + t).powf(tau) * t.ln_1p() + (1.0 - t).powf(tau) * (-t).ln_1p();
            -g * t.powf(-1.0 - two_s)
        },
        SERIES_END,
        1.0 - DELTA,
        piece_tol,
        MAX_DEPTH,
    )?;
    let smooth_near_one = adaptive(
        |t: f64| -(1.0 + t).powf(tau) * t.ln_1p() * t.powf(-1.0 - two_s),
        1.0 - DELTA,
        TAIL_START,
        piece_tol,
        MAX_DEPTH,
    )?;

    // -int_0^delta w^tau ln(w) (1-w)^{-1-2s} dw.
    let ld = DELTA.ln();
    let mut b = 1.0;
    let (sing, last1) = sum_series(0, cut, |j| {
        if j > 0 {
            b *= (two_s + j as f64) / j as f64;
        }
        let p = tau + j as f64 + 1.0;
        -b * DELTA.powf(p) * (ld / p - 1.0 / (p * p))
    });

    // -d/dtau of sum_j C(tau, j) T^beta / (-beta), beta = tau - 2s - j.
    let lt = TAIL_START.ln();
    let (tail, last2) = sum_series(0, cut, |j| {
        let beta = tau - two_s - j as f64;
        let tb = TAIL_START.powf(beta);
        let d = dbinom[j] * tb / (-beta) + binom[j] * (tb * lt / (-beta) + tb / (beta * beta));
        -d
    });

    let value = near_zero + inner.value + smooth_near_one.value + sing + tail;
    let est_error = inner.error + smooth_near_one.error + 2.0 * (last0 + last1 + last2);
    Ok(PsiValue { s, tau, value, est_error })
}

/// Locates the unique zero of `psi_s` in `(0, 2s)` by Brent's method.
pub fn psi_root(s: f64, tol: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(FracError::Domain(format!("order s = {s} outside (0, 1)")));
    }
    let lo = 0.02 * s;
    let hi = 1.98 * s;
    let eval_tol = (tol * 1e-2).min(DEFAULT_TOL);
    let root = brent(|t| psi(s, t, eval_tol).map(|v| v.value), lo, hi, 1e-14, 200)?;
    let at_root = psi(s, root, eval_tol)?;
    if at_root.value.abs() > tol {
        return Err(FracError::BracketFailure { lo, hi });
    }
    Ok(root)
}

/// `(-Delta)^s` of the half-line power `(t_+)^tau` at `l > 0`:
/// `c_{1,s} l^{tau-2s} psi_s(tau)`.
pub fn halfline_value(s: f64, tau: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(FracError::Domain(format!("position {l} must be positive")));
    }
    let p = psi(s, tau, DEFAULT_TOL)?;
    Ok(c_ns(1, s) * l.powf(tau - 2.0 * s) * p.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_at_tau_equal_s() {
        for s in [0.25, 0.5, 0.75, 0.9] {
            let v = psi(s, s, DEFAULT_TOL).unwrap();
            assert!(v.value.abs() <= 1e-9, "s={s}: {v:?}");
            assert!(v.est_error <= DEFAULT_TOL);
        }
    }

    #[test]
    fn limit_at_zero_is_one_over_two_s() {
        for s in [0.3, 0.5, 0.8] {
            let v = psi(s, 1e-9, DEFAULT_TOL).unwrap();
            assert!((v.value - 0.5 / s).abs() < 1e-6, "s={s}: {}", v.value);
        }
    }

    #[test]
    fn derivative_negative_at_root() {
        let d = psi_prime(0.5, 0.5, DEFAULT_TOL).unwrap();
        assert!(d.value < 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let (s, tau, h) = (0.6, 0.5, 1e-4);
        let p = psi(s, tau + h, 1e-12).unwrap().value;
        let m = psi(s, tau - h, 1e-12).unwrap().value;
        let d = psi_prime(s, tau, 1e-12).unwrap().value;
        assert!(((p - m) / (2.0 * h) - d).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(psi(0.5, 1.0, 1e-10), Err(FracError::Domain(_))));
        assert!(matches!(psi(0.5, 0.0, 1e-10), Err(FracError::Domain(_))));
        assert!(matches!(psi(1.2, 0.5, 1e-10), Err(FracError::Domain(_))));
        assert!(matches!(psi_prime(0.5, -0.1, 1e-10), Err(FracError::Domain(_))));
    }

    #[test]
    fn halfline_scaling() {
        let (s, tau) = (0.4, 0.3);
        let r = halfline_value(s, tau, 2.0).unwrap() / halfline_value(s, tau, 1.0).unwrap();
        assert!((r - 2f64.powf(tau - 2.0 * s)).abs() < 1e-12);
        assert!(halfline_value(s, s, 3.0).unwrap().abs() < 1e-9);
    }
}
