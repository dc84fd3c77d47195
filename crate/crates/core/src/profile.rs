//! Closed-form test functions and boundary barriers.
//!
//! A profile is a function of one variable: the signed position on the
//! interval, or the radius for radial functions. Profiles vanish outside the
//! unit ball unless they say otherwise.

/// A function with known first and second derivatives.
pub trait Profile: Send + Sync {
    fn value(&self, x: f64) -> f64;

    /// Value at a node whose boundary distance `dist = 1 - |x|` is known more
    /// accurately than `x` itself.
    fn value_at(&self, x: f64, dist: f64) -> f64 {
        let _ = dist;
        self.value(x)
    }

    fn d1(&self, x: f64) -> f64 {
        let h = 1e-5;
        (self.value(x + h) - self.value(x - h)) / (2.0 * h)
    }

    fn d2(&self, x: f64) -> f64 {
        let h = 1e-4;
        (self.value(x + h) - 2.0 * self.value(x) + self.value(x - h)) / (h * h)
    }

    /// Points where the profile fails to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        vec![-1.0, 1.0]
    }

    /// Whether the profile vanishes outside `[-1, 1]`.
    fn compact(&self) -> bool {
        true
    }

    /// Exponent `g` with `|u(x)| = O(|x|^g)` at infinity; must be below `2s`.
    fn growth(&self) -> f64 {
        0.0
    }
}

/// `(1 - x^2)_+^p`.
#[derive(Debug, Clone, Copy)]
pub struct PowerCap {
    pub p: f64,
}

impl Profile for PowerCap {
    fn value(&self, x: f64) -> f64 {
        let d = 1.0 - x * x;
        if d <= 0.0 {
            0.0
        } else {
            d.powf(self.p)
        }
    }

    fn value_at(&self, x: f64, dist: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        (dist * (2.0 - dist)).powf(self.p)
    }

    fn d1(&self, x: f64) -> f64 {
        let d = 1.0 - x * x;
        if d <= 0.0 {
            return 0.0;
        }
        -2.0 * self.p * x * d.powf(self.p - 1.0)
    }

    fn d2(&self, x: f64) -> f64 {
        let d = 1.0 - x * x;
        if d <= 0.0 {
            return 0.0;
        }
        let p = self.p;
        -2.0 * p * d.powf(p - 1.0) + 4.0 * p * (p - 1.0) * x * x * d.powf(p - 2.0)
    }
}

/// `cos(pi x / 2) (1 - x^2)_+^2`, a `C^1` profile smooth inside the ball.
#[derive(Debug, Clone, Copy)]
pub struct CosCap;

impl Profile for CosCap {
    fn value(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - x * x;
        (0.5 * std::f64::consts::PI * x).cos() * d * d
    }

    fn d1(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let k = 0.5 * std::f64::consts::PI;
        let d = 1.0 - x * x;
        -k * (k * x).sin() * d * d - 4.0 * x * d * (k * x).cos()
    }

    fn d2(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let k = 0.5 * std::f64::consts::PI;
        let d = 1.0 - x * x;
        let (sn, cs) = (k * x).sin_cos();
        -k * k * cs * d * d + 8.0 * k * x * d * sn + cs * (12.0 * x * x - 4.0)
    }
}

/// `amplitude (1 - ((x - center) / width)^2)_+^3`, a `C^2` bump.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    fn local(&self, x: f64) -> Option<(f64, f64)> {
        let z = (x - self.center) / self.width;
        let q = 1.0 - z * z;
        (q > 0.0).then_some((z, q))
    }
}

impl Profile for Bump {
    fn value(&self, x: f64) -> f64 {
        self.local(x).map_or(0.0, |(_, q)| self.amplitude * q * q * q)
    }

    fn d1(&self, x: f64) -> f64 {
        self.local(x)
            .map_or(0.0, |(z, q)| -6.0 * self.amplitude * z * q * q / self.width)
    }

    fn d2(&self, x: f64) -> f64 {
        self.local(x).map_or(0.0, |(z, q)| {
            self.amplitude * (-6.0 * q * q + 24.0 * z * z * q) / (self.width * self.width)
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.center - self.width, self.center + self.width]
    }
}

/// Sum of bumps mirrored about the origin, an even `C^2_c` function.
#[derive(Debug, Clone)]
pub struct EvenBumps {
    pub bumps: Vec<Bump>,
}

impl EvenBumps {
    fn mirrored(&self) -> impl Iterator<Item = Bump> + '_ {
        self.bumps.iter().flat_map(|b| {
            [*b, Bump { center: -b.center, ..*b }]
        })
    }
}

impl Profile for EvenBumps {
    fn value(&self, x: f64) -> f64 {
        self.mirrored().map(|b| b.value(x)).sum()
    }

    fn d1(&self, x: f64) -> f64 {
        self.mirrored().map(|b| b.d1(x)).sum()
    }

    fn d2(&self, x: f64) -> f64 {
        self.mirrored().map(|b| b.d2(x)).sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.mirrored().flat_map(|b| b.breakpoints()).collect()
    }
}

/// The half-line power `(x_+)^tau`; not compactly supported.
#[derive(Debug, Clone, Copy)]
pub struct HalfLinePower {
    pub tau: f64,
}

impl Profile for HalfLinePower {
    fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x.powf(self.tau)
        }
    }

    fn d1(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.tau * x.powf(self.tau - 1.0)
        }
    }

    fn d2(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.tau * (self.tau - 1.0) * x.powf(self.tau - 2.0)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn compact(&self) -> bool {
        false
    }

    fn growth(&self) -> f64 {
        self.tau
    }
}

/// Boundary behaviour of a barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierKind {
    /// `rho^tau`.
    Power(f64),
    /// `rho^s ln(1 / rho)`.
    Log(f64),
}

/// Start of the interior blend and the distance where the barrier turns constant.
pub const BLEND_START: f64 = 0.25;
pub const BLEND_END: f64 = 0.5;

/// A barrier `f(dist)`: the boundary law for `dist <= BLEND_START`, a quintic
/// matching value and two derivatives there, constant for `dist >= BLEND_END`.
#[derive(Debug, Clone, Copy)]
pub struct Barrier {
    pub kind: BarrierKind,
    quintic: [f64; 6],
}

impl Barrier {
    pub fn new(kind: BarrierKind) -> Self {
        Self::with_plateau(kind, 1.0)
    }

    /// Barrier whose interior constant is `lift` times the natural one.
    pub fn with_plateau(kind: BarrierKind, lift: f64) -> Self {
        let d = BLEND_START;
        let (f0, f1, f2) = Self::law(kind, d);
        let l = BLEND_END - BLEND_START;
        // Hermite data on [0, 1]: value/slope/curvature at 0, constant c at 1.
        let (a0, a1, a2) = (f0, f1 * l, f2 * l * l);
        let c = lift * (a0 + 0.5 * a1 + a2 / 12.0);
        let a3 = 10.0 * (c - a0) - 6.0 * a1 - 1.5 * a2;
        let a4 = -15.0 * (c - a0) + 8.0 * a1 + 1.5 * a2;
        let a5 = 6.0 * (c - a0) - 3.0 * a1 - 0.5 * a2;
        Self { kind, quintic: [a0, a1, a2 / 2.0, a3, a4, a5] }
    }

    pub fn power(tau: f64) -> Self {
        Self::new(BarrierKind::Power(tau))
    }

    pub fn log(s: f64) -> Self {
        Self::new(BarrierKind::Log(s))
    }

    /// Value and first two derivatives of the boundary law at `d`.
    fn law(kind: BarrierKind, d: f64) -> (f64, f64, f64) {
        match kind {
            BarrierKind::Power(t) => (d.powf(t), t * d.powf(t - 1.0), t * (t - 1.0) * d.powf(t - 2.0)),
            BarrierKind::Log(s) => {
                let l = -d.ln();
                let ds = d.powf(s);
                (
                    ds * l,
                    d.powf(s - 1.0) * (s * l - 1.0),
                    d.powf(s - 2.0) * (s * (s - 1.0) * l - (2.0 * s - 1.0)),
                )
            }
        }
    }

    /// `f(dist)` with its first two derivatives in `dist`.
    pub fn of_distance(&self, d: f64) -> (f64, f64, f64) {
        if d <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if d <= BLEND_START {
            return Self::law(self.kind, d);
        }
        let l = BLEND_END - BLEND_START;
        let z = ((d - BLEND_START) / l).min(1.0);
        let a = &self.quintic;
        let v = a[0] + z * (a[1] + z * (a[2] + z * (a[3] + z * (a[4] + z * a[5]))));
        let v1 = a[1] + z * (2.0 * a[2] + z * (3.0 * a[3] + z * (4.0 * a[4] + z * 5.0 * a[5])));
        let v2 = 2.0 * a[2] + z * (6.0 * a[3] + z * (12.0 * a[4] + z * 20.0 * a[5]));
        if d >= BLEND_END {
            (v, 0.0, 0.0)
        } else {
            (v, v1 / l, v2 / (l * l))
        }
    }
}

impl Profile for Barrier {
    fn value(&self, x: f64) -> f64 {
        self.of_distance(1.0 - x.abs()).0
    }

    fn value_at(&self, x: f64, dist: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        self.of_distance(dist).0
    }

    fn d1(&self, x: f64) -> f64 {
        -x.signum() * self.of_distance(1.0 - x.abs()).1
    }

    fn d2(&self, x: f64) -> f64 {
        self.of_distance(1.0 - x.abs()).2
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = (1.0 - BLEND_START, 1.0 - BLEND_END);
        vec![-1.0, -a, -b, b, a, 1.0]
    }
}
