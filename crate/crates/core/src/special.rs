//! Normalisation constants and special functions.

use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Normalisation constant of the integral fractional Laplacian,
/// `c_{N,s} = 2^{2s} pi^{-N/2} s Gamma((N+2s)/2) / Gamma(1-s)`.
pub fn c_ns(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    (2.0 * s * 2f64.ln() - 0.5 * n * PI.ln() + s.ln() + ln_gamma(0.5 * (n + 2.0 * s))
        - ln_gamma(1.0 - s))
    .exp()
}

/// Surface measure of the unit sphere `S^{N-1}` (`|S^0| = 2`).
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(0.5 * n) / gamma(0.5 * n)
}

/// Volume of the unit ball in `R^N`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Euler Beta function through log-Gamma.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// `(-Delta)^s (1-|x|^2)_+^s = 1 / cbar_{N,s}` on the unit ball, so
/// `G[1] = cbar_{N,s} (1-|x|^2)^s`.
pub fn torsion_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    (ln_gamma(0.5 * n) - 2.0 * s * 2f64.ln() - ln_gamma(1.0 + s) - ln_gamma(0.5 * n + s)).exp()
}

/// Generalised binomial coefficients `C(tau, j)` for `j = 0..len` together
/// with their derivatives in `tau`.
pub fn binomials_with_derivative(tau: f64, len: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = Vec::with_capacity(len);
    let mut d = Vec::with_capacity(len);
    c.push(1.0);
    d.push(0.0);
    for j in 1..len {
        let jf = j as f64;
        let prev_c = c[j - 1];
        let prev_d = d[j - 1];
        c.push(prev_c * (tau - jf + 1.0) / jf);
        d.push((prev_d * (tau - jf + 1.0) + prev_c) / jf);
    }
    (c, d)
}

/// `(x^e - y^e) / e` evaluated stably, with the limit `ln(x/y)` at `e = 0`.
pub fn pow_diff_over_exp(x: f64, y: f64, e: f64) -> f64 {
    let lx = x.ln();
    let ly = y.ln();
    let arg = e * (lx - ly);
    if arg.abs() < 1e-300 {
        return lx - ly;
    }
    (e * ly).exp() * arg.exp_m1() / e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_ns_known_values() {
        // c_{1,1/2} = 1/pi, c_{3,1/2} = 1/pi^2.
        assert!((c_ns(1, 0.5) - 1.0 / PI).abs() < 1e-14);
        assert!((c_ns(3, 0.5) - 1.0 / (PI * PI)).abs() < 1e-14);
        // Direct formula.
        for &(n, s) in &[(1usize, 0.3), (2, 0.75), (3, 0.9)] {
            let nf = n as f64;
            let direct = 2f64.powf(2.0 * s) * PI.powf(-nf / 2.0) * s * gamma((nf + 2.0 * s) / 2.0)
                / gamma(1.0 - s);
            assert!(((c_ns(n, s) - direct) / direct).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_half_three_halves() {
        assert!((beta(0.5, 1.5) - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn binomial_derivative_matches_difference() {
        let (c, d) = binomials_with_derivative(0.37, 12);
        let (cp, _) = binomials_with_derivative(0.37 + 1e-6, 12);
        let (cm, _) = binomials_with_derivative(0.37 - 1e-6, 12);
        for j in 0..12 {
            let fd = (cp[j] - cm[j]) / 2e-6;
            assert!((fd - d[j]).abs() < 1e-8, "j={j}");
        }
        assert!((c[2] - 0.37 * (0.37 - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pow_diff_limit() {
        let v = pow_diff_over_exp(3.0, 2.0, 1e-12);
        assert!((v - (1.5f64).ln()).abs() < 1e-10);
        let e = 0.3;
        let v = pow_diff_over_exp(3.0, 2.0, e);
        assert!((v - (3f64.powf(e) - 2f64.powf(e)) / e).abs() < 1e-13);
    }
}
