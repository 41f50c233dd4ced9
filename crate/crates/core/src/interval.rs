//! Closed intervals with outward rounding.
//!
//! Arithmetic operations are evaluated in round-to-nearest and the endpoints
//! are then pushed one ulp outward, which encloses the exact result of every
//! correctly rounded IEEE operation (`+ - * / sqrt`). Library transcendental
//! functions are not correctly rounded; their results are widened by
//! [`LIBM_ULPS`] instead.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Outward widening applied to `cos`, `sin` and friends.
pub const LIBM_ULPS: u32 = 4;

/// Outward widening applied to long floating-point reductions (dot products,
/// Rayleigh quotients).
pub const REDUCTION_ULPS: u32 = 8;

/// Step `x` down by `n` ulps.
pub fn down(x: f64, n: u32) -> f64 {
    (0..n).fold(x, |v, _| v.next_down())
}

/// Step `x` up by `n` ulps.
pub fn up(x: f64, n: u32) -> f64 {
    (0..n).fold(x, |v, _| v.next_up())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Enclosure of a value computed with at most `ulps` ulps of error.
    pub fn approx(x: f64, ulps: u32) -> Self {
        Interval {
            lo: down(x, ulps),
            hi: up(x, ulps),
        }
    }

    pub fn entire() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn widen(&self, ulps: u32) -> Interval {
        Interval {
            lo: down(self.lo, ulps),
            hi: up(self.hi, ulps),
        }
    }

    pub fn sqrt(self) -> Interval {
        let lo = if self.lo <= 0.0 { 0.0 } else { down(self.lo.sqrt(), 1) };
        Interval {
            lo: lo.max(0.0),
            hi: up(self.hi.max(0.0).sqrt(), 1),
        }
    }

    pub fn sqr(self) -> Interval {
        if self.lo >= 0.0 {
            self * self
        } else if self.hi <= 0.0 {
            (-self) * (-self)
        } else {
            let m = self.lo.abs().max(self.hi.abs());
            Interval {
                lo: 0.0,
                hi: up(m * m, 1),
            }
        }
    }

    /// Cosine over an angle interval contained in `[0, π]` (decreasing there).
    pub fn cos_on_half_turn(self) -> Interval {
        debug_assert!(self.lo >= 0.0 && self.hi <= std::f64::consts::PI + 1e-12);
        Interval {
            lo: down(self.hi.cos(), LIBM_ULPS).max(-1.0),
            hi: up(self.lo.cos(), LIBM_ULPS).min(1.0),
        }
    }

    /// Sine over an angle interval contained in `[0, π]`.
    pub fn sin_on_half_turn(self) -> Interval {
        use std::f64::consts::FRAC_PI_2;
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let hi = if self.contains(FRAC_PI_2) { 1.0 } else { a.max(b) };
        Interval {
            lo: down(a.min(b), LIBM_ULPS).max(0.0),
            hi: up(hi, LIBM_ULPS).min(1.0),
        }
    }

    /// Cotangent over an angle interval contained in `(0, π)` (decreasing there).
    pub fn cot_on_half_turn(self) -> Interval {
        let c = |t: f64| t.cos() / t.sin();
        Interval {
            lo: down(c(self.hi), LIBM_ULPS + 1),
            hi: up(c(self.lo), LIBM_ULPS + 1),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: down(self.lo + rhs.lo, 1),
            hi: up(self.hi + rhs.hi, 1),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: down(self.lo - rhs.hi, 1),
            hi: up(self.hi - rhs.lo, 1),
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo, 1),
            hi: up(hi, 1),
        }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        if rhs.contains_zero() {
            return Interval::entire();
        }
        let q = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo, 1),
            hi: up(hi, 1),
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for Interval {
            type Output = Interval;
            fn $m(self, rhs: f64) -> Interval { $tr::$m(self, Interval::point(rhs)) }
        }
        impl $tr<Interval> for f64 {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval { $tr::$m(Interval::point(self), rhs) }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ulp_steps() {
        assert!(down(1.0, 1) < 1.0);
        assert!(up(1.0, 1) > 1.0);
        assert_eq!(up(down(1.0, 3), 3), 1.0);
    }

    #[test]
    fn division_by_zero_interval_is_entire() {
        let q = Interval::new(1.0, 2.0) / Interval::new(-1.0, 1.0);
        assert_eq!(q.lo, f64::NEG_INFINITY);
        assert_eq!(q.hi, f64::INFINITY);
    }

    #[test]
    fn trig_enclosures() {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
        let t = Interval::new(FRAC_PI_3, FRAC_PI_2 + 0.1);
        let s = t.sin_on_half_turn();
        assert_eq!(s.hi, 1.0);
        assert!(s.contains((FRAC_PI_3).sin()));
        let c = t.cos_on_half_turn();
        assert!(c.contains(0.5) && c.contains((FRAC_PI_2 + 0.1).cos()));
        let k = t.cot_on_half_turn();
        assert!(k.contains(1.0 / 3f64.sqrt()));
    }

    proptest! {
        #[test]
        fn arithmetic_encloses_samples(
            a in -10.0f64..10.0, wa in 0.0f64..1.0,
            b in -10.0f64..10.0, wb in 0.0f64..1.0,
            s in 0.0f64..1.0, t in 0.0f64..1.0,
        ) {
            let x = Interval::new(a, a + wa);
            let y = Interval::new(b, b + wb);
            let xs = a + s * wa;
            let ys = b + t * wb;
            prop_assert!((x + y).contains(xs + ys));
            prop_assert!((x - y).contains(xs - ys));
            prop_assert!((x * y).contains(xs * ys));
            if !y.contains_zero() {
                prop_assert!((x / y).contains(xs / ys));
            }
            prop_assert!(x.sqr().contains(xs * xs));
        }
    }
}
