//! Triangle parametrization and the affine maps between triangles.
//!
//! Every triangle is normalized to `O = (0,0)`, `A = (1,0)` and an apex `B`
//! in the upper half plane. On the unit circle the apex is
//! `B = (cos θ, sin θ)` and the triangle is written `T^θ`. The map taking
//! `T^θ` onto `T^θ̃` fixes `O` and `A` and has the upper-triangular matrix
//! `(1, α; 0, β)` with `α = (cos θ̃ − cos θ)/sin θ` and `β = sin θ̃ / sin θ`.

use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::interval::{self, Interval, LIBM_ULPS};
use crate::{Error, Result};

pub type Point = [f64; 2];

fn check_angle(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta < PI {
        Ok(())
    } else {
        Err(Error::domain(format!("angle {theta} outside (0, π)")))
    }
}

/// Triangle `O A B` with `O = (0,0)`, `A = (1,0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleShape {
    theta: f64,
    apex: Point,
}

impl TriangleShape {
    /// `T^θ`, apex on the unit circle.
    pub fn from_angle(theta: f64) -> Result<Self> {
        check_angle(theta)?;
        Ok(TriangleShape {
            theta,
            apex: [theta.cos(), theta.sin()],
        })
    }

    /// Triangle with an arbitrary apex `B = (x, y)`, `y > 0`.
    pub fn from_apex(apex: Point) -> Result<Self> {
        let [x, y] = apex;
        if !(x.is_finite() && y.is_finite() && y > 0.0) {
            return Err(Error::domain(format!("apex ({x}, {y}) must have y > 0")));
        }
        Ok(TriangleShape {
            theta: y.atan2(x),
            apex,
        })
    }

    pub fn equilateral() -> Self {
        TriangleShape::from_angle(FRAC_PI_3).expect("π/3 is a valid angle")
    }

    /// Angle `∠AOB` in radians.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn apex(&self) -> Point {
        self.apex
    }

    pub fn vertices(&self) -> [Point; 3] {
        [[0.0, 0.0], [1.0, 0.0], self.apex]
    }

    /// Lengths of `OA`, `AB`, `BO`.
    pub fn edge_lengths(&self) -> [f64; 3] {
        let [x, y] = self.apex;
        [1.0, (x - 1.0).hypot(y), x.hypot(y)]
    }

    pub fn diameter(&self) -> f64 {
        self.edge_lengths().into_iter().fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.apex[1]
    }

    /// Whether the apex lies in `{x² + y² ≤ 1, x ≥ 1/2, y > 0}`, the region
    /// that covers every triangle of unit diameter up to isometry.
    pub fn in_reduced_region(&self) -> bool {
        let [x, y] = self.apex;
        y > 0.0 && x >= 0.5 && x * x + y * y <= 1.0 + 1e-14
    }
}

/// Convenience wrapper for [`TriangleShape::from_angle`].
pub fn triangle_from_angle(theta: f64) -> Result<TriangleShape> {
    TriangleShape::from_angle(theta)
}

/// Linear map `(x, y) ↦ (x + α y, β y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub alpha: f64,
    pub beta: f64,
    pub source: TriangleShape,
    pub target: TriangleShape,
}

impl AffineMap {
    pub fn apply(&self, p: Point) -> Point {
        [p[0] + self.alpha * p[1], self.beta * p[1]]
    }

    pub fn determinant(&self) -> f64 {
        self.beta
    }

    pub fn inverse(&self) -> AffineMap {
        AffineMap {
            alpha: -self.alpha / self.beta,
            beta: 1.0 / self.beta,
            source: self.target,
            target: self.source,
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &AffineMap) -> AffineMap {
        // (1, a2; 0, b2)(1, a1; 0, b1) = (1, a1 + a2 b1; 0, b2 b1)
        AffineMap {
            alpha: self.alpha + other.alpha * self.beta,
            beta: other.beta * self.beta,
            source: self.source,
            target: other.target,
        }
    }

    /// Extreme eigenvalues of `QQᵀ` for this map.
    pub fn stretch_spectrum(&self) -> (f64, f64) {
        qqt_spectrum(self.alpha, self.beta).expect("affine maps have β > 0")
    }
}

/// The map taking `T^θ` onto `T^θ̃`.
pub fn map_between(theta: f64, theta_tilde: f64) -> Result<AffineMap> {
    let source = TriangleShape::from_angle(theta)?;
    let target = TriangleShape::from_angle(theta_tilde)?;
    Ok(map_between_shapes(&source, &target))
}

/// The map fixing `O`, `A` and sending the apex of `source` to that of `target`.
pub fn map_between_shapes(source: &TriangleShape, target: &TriangleShape) -> AffineMap {
    let [x, y] = source.apex;
    let [xt, yt] = target.apex;
    AffineMap {
        alpha: (xt - x) / y,
        beta: yt / y,
        source: *source,
        target: *target,
    }
}

/// Eigenvalues `(λ_min, λ_max)` of `QQᵀ` for `Q = (1, α; 0, β)`.
pub fn qqt_spectrum(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta.is_finite() && alpha.is_finite()) {
        return Err(Error::domain(format!("need β > 0, got α = {alpha}, β = {beta}")));
    }
    let gamma = alpha * alpha + beta * beta + 1.0;
    let disc = ((gamma - 2.0 * beta) * (gamma + 2.0 * beta)).max(0.0).sqrt();
    let max = 0.5 * (gamma + disc);
    // det(QQᵀ) = β² avoids the cancellation in (γ − disc)/2
    Ok((beta * beta / max, max))
}

// (cos θ − 1)/(cos θ̃ − 1) and (cos θ + 1)/(cos θ̃ + 1) in half-angle form.
fn ratio_down(theta: f64, theta_tilde: f64) -> f64 {
    let (s, st) = ((0.5 * theta).sin(), (0.5 * theta_tilde).sin());
    (s * s) / (st * st)
}

fn ratio_up(theta: f64, theta_tilde: f64) -> f64 {
    let (c, ct) = ((0.5 * theta).cos(), (0.5 * theta_tilde).cos());
    (c * c) / (ct * ct)
}

/// Factors `(low, high)` with `low·λ_k(T^θ) ≤ λ_k(T^θ̃) ≤ high·λ_k(T^θ)` for
/// every `k`, for the exact eigenvalues as well as for the discrete ones on a
/// mesh of `T^θ` and its image.
///
/// The factors are the reciprocals of the eigenvalues of `SSᵀ` for the map
/// `S` taking `T^θ` to `T^θ̃`:
/// `min/max { (cos θ − 1)/(cos θ̃ − 1), (cos θ + 1)/(cos θ̃ + 1) }`.
pub fn perturbation_factors(theta: f64, theta_tilde: f64) -> Result<(f64, f64)> {
    check_angle(theta)?;
    check_angle(theta_tilde)?;
    let g1 = ratio_down(theta, theta_tilde);
    let g2 = ratio_up(theta, theta_tilde);
    Ok((g1.min(g2), g1.max(g2)))
}

/// Outward-rounded factors valid for every `θ̃` in `[lo, hi]`.
///
/// `lo` may be `0`, read as the open end of `(0, hi]`. The first ratio is
/// decreasing and the second increasing in `θ̃` on `(0, π)`, so the extremes
/// sit at the interval ends; [`ratio_monotonicity_certified`] checks the sign
/// of both derivatives over the interval before the endpoints are used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorRange {
    pub low: f64,
    pub high: f64,
}

pub fn perturbation_factors_over(theta: f64, lo: f64, hi: f64) -> Result<FactorRange> {
    check_angle(theta)?;
    if !(lo >= 0.0 && lo <= hi && hi < PI) {
        return Err(Error::domain(format!("angle range [{lo}, {hi}] outside [0, π)")));
    }
    if !ratio_monotonicity_certified(lo, hi) {
        return Err(Error::domain(format!(
            "could not certify ratio monotonicity on [{lo}, {hi}]"
        )));
    }
    let g1_hi = ratio_down(theta, hi);
    let g2_lo = ratio_up(theta, lo);
    let g1_lo = if lo == 0.0 { f64::INFINITY } else { ratio_down(theta, lo) };
    let g2_hi = ratio_up(theta, hi);
    // half-angle sin/cos, a square and a quotient: LIBM_ULPS plus 3
    let ulps = LIBM_ULPS + 3;
    Ok(FactorRange {
        low: interval::down(g1_hi.min(g2_lo), ulps),
        high: interval::up(g1_lo.max(g2_hi), ulps),
    })
}

/// Certifies `d/dθ̃ (cos θ − 1)/(cos θ̃ − 1) ≤ 0` and
/// `d/dθ̃ (cos θ + 1)/(cos θ̃ + 1) ≥ 0` for all `θ̃` in `[lo, hi]`.
///
/// Both derivatives equal a positive factor times `∓ sin(θ̃/2) cos(θ̃/2)`,
/// so it suffices that both factors are enclosed in `[0, ∞)` over the
/// half-angle range.
pub fn ratio_monotonicity_certified(lo: f64, hi: f64) -> bool {
    if !(lo >= 0.0 && hi < PI && lo <= hi) {
        return false;
    }
    let half = Interval::new(0.5 * lo, 0.5 * hi);
    let s = half.sin_on_half_turn();
    let c = half.cos_on_half_turn();
    s.lo >= 0.0 && c.lo >= 0.0
}

/// Gram triple `(‖u_x‖², (u_x, u_y), ‖u_y‖²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramTriple {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl GramTriple {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Result<Self> {
        let g = GramTriple { xx, xy, yy };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.xx >= 0.0
            && self.yy >= 0.0
            && self.xy * self.xy <= self.xx * self.yy * (1.0 + 1e-12) + 1e-300;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("not a Gram triple: {self:?}")))
        }
    }

    /// `‖∇u‖²`.
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scaled(&self, s: f64) -> GramTriple {
        GramTriple {
            xx: s * self.xx,
            xy: s * self.xy,
            yy: s * self.yy,
        }
    }
}

/// Gram triple of `ũ = u ∘ Q⁻¹` on `Q(T)` from that of `u` on `T`.
pub fn map_derivative_gram(g: GramTriple, alpha: f64, beta: f64) -> Result<GramTriple> {
    g.validate()?;
    if !(beta > 0.0) {
        return Err(Error::domain(format!("need β > 0, got {beta}")));
    }
    let xx = beta * g.xx;
    let xy = -alpha * g.xx + g.xy;
    let yy = (alpha * alpha * g.xx - 2.0 * alpha * g.xy + g.yy) / beta;
    Ok(GramTriple { xx, xy, yy })
}

/// Enclosure of a Gram triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramEnclosure {
    pub xx: Interval,
    pub xy: Interval,
    pub yy: Interval,
}

impl GramEnclosure {
    pub fn point(g: GramTriple, ulps: u32) -> Self {
        GramEnclosure {
            xx: Interval::approx(g.xx, ulps),
            xy: Interval::approx(g.xy, ulps),
            yy: Interval::approx(g.yy, ulps),
        }
    }
}

/// Interval version of [`map_derivative_gram`] for `α`, `β` ranging over boxes.
pub fn map_gram_enclosure(g: GramEnclosure, alpha: Interval, beta: Interval) -> GramEnclosure {
    let xx = beta * g.xx;
    let xy = g.xy - alpha * g.xx;
    // α²‖u_x‖² − 2α(u_x,u_y) + ‖u_y‖² = ‖u_y − α u_x‖² ≥ 0
    let mut num = alpha.sqr() * g.xx - 2.0 * alpha * g.xy + g.yy;
    num.lo = num.lo.max(0.0);
    GramEnclosure {
        xx,
        xy,
        yy: num / beta,
    }
}

/// Enclosures of `α(θ̃)` and `β(θ̃)` for the map `T^θ → T^θ̃`, `θ̃ ∈ [lo, hi]`.
pub fn map_parameter_enclosure(theta: f64, lo: f64, hi: f64) -> Result<(Interval, Interval)> {
    check_angle(theta)?;
    check_angle(lo)?;
    check_angle(hi)?;
    let t = Interval::approx(theta, 0);
    let range = Interval::new(lo, hi);
    let cos_t = t.cos_on_half_turn();
    let sin_t = t.sin_on_half_turn();
    let alpha = (range.cos_on_half_turn() - cos_t) / sin_t;
    let beta = range.sin_on_half_turn() / sin_t;
    Ok((alpha, beta))
}
