//! Boundary behaviour of `(-Delta)^s` applied to the barriers `V_tau` and `W_s`.

use crate::error::{FracError, Result};
use crate::operator::FracParams;
use crate::pointwise::apply_pointwise;
use crate::profile::{Barrier, BarrierKind, Profile};

/// Interior lift of `V_tau` for `tau > s`; a higher plateau pushes the
/// negative boundary regime out to the whole default window.
pub const SUPERCRITICAL_LIFT: f64 = 8.0;

/// Smallest boundary distance the pointwise quadrature resolves reliably.
pub const MIN_PROBE_DISTANCE: f64 = 1e-8;

/// Geometric sample of boundary distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Window {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    pub fn distances(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi <= 0.5 && self.points >= 2) {
            return Err(FracError::Domain(format!(
                "window [{}, {}] with {} points",
                self.lo, self.hi, self.points
            )));
        }
        if self.lo < MIN_PROBE_DISTANCE {
            return Err(FracError::WindowTooClose {
                lo: self.lo,
                hi: self.hi,
                resolution: MIN_PROBE_DISTANCE,
            });
        }
        let q = (self.hi / self.lo).ln() / (self.points - 1) as f64;
        Ok((0..self.points).map(|k| self.lo * (q * k as f64).exp()).collect())
    }
}

impl Default for Window {
    fn default() -> Self {
        Self::new(1e-3, 1e-1, 11)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub rho: f64,
    pub value: f64,
    pub ratio: f64,
}

/// Extremes of a ratio series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSummary {
    pub min: f64,
    pub max: f64,
}

impl RatioSummary {
    pub fn of(samples: &[RatioSample]) -> Self {
        let min = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
        let max = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }

    pub fn all_positive(&self) -> bool {
        self.min > 0.0
    }

    pub fn all_negative(&self) -> bool {
        self.max < 0.0
    }

    /// `max |r| / min |r|` for a series of one sign, infinite otherwise.
    pub fn spread(&self) -> f64 {
        if self.all_positive() {
            self.max / self.min
        } else if self.all_negative() {
            self.min / self.max
        } else {
            f64::INFINITY
        }
    }
}

fn probe(profile: &dyn Profile, params: &FracParams, window: &Window, scale: impl Fn(f64) -> f64) -> Result<Vec<RatioSample>> {
    window
        .distances()?
        .into_iter()
        .map(|rho| {
            let size = scale(rho).abs().max(1.0);
            let value = apply_pointwise(profile, params, 1.0 - rho, 1e-9 * size)?.value;
            Ok(RatioSample { rho, value, ratio: value / scale(rho) })
        })
        .collect()
}

/// `(-Delta)^s V_tau / rho^{tau - 2s}` across the window.
pub fn barrier_ratio(tau: f64, params: &FracParams, window: &Window) -> Result<Vec<RatioSample>> {
    let s = params.s;
    if !(tau > 0.0 && tau < 2.0 * s) {
        return Err(FracError::Domain(format!("exponent {tau} outside (0, {})", 2.0 * s)));
    }
    let lift = if tau > s { SUPERCRITICAL_LIFT } else { 1.0 };
    let barrier = Barrier::with_plateau(BarrierKind::Power(tau), lift);
    probe(&barrier, params, window, |rho| rho.powf(tau - 2.0 * s))
}

/// `-(-Delta)^s W_s * rho^s` across the window.
pub fn log_barrier_ratio(params: &FracParams, window: &Window) -> Result<Vec<RatioSample>> {
    let s = params.s;
    probe(&Barrier::log(s), params, window, |rho| -rho.powf(-s))
}
