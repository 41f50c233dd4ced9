//! Certified scalar bounds built on the discrete eigenpairs: the two-sided
//! eigenvalue bracket, the eigenfunction distance `η`, the derivative
//! functional `F` and its error envelope `Err`.
//!
//! Every function that feeds certification evaluates in [`Interval`]
//! arithmetic and returns the outward end that the caller needs.

use serde::{Deserialize, Serialize};

use crate::eigsolve::EigenEnclosure;
use crate::geometry::{GramEnclosure, GramTriple};
use crate::interval::{Interval, LIBM_ULPS};
use crate::{Error, Result};

/// Constant in `C_h = 0.1893·h` of the Crouzeix–Raviart lower bound.
pub const CR_CONSTANT: f64 = 0.1893;

/// `[λ̲_k, λ̄_k]` enclosing the exact `λ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigBracket {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    /// `C_h` of the CR mesh.
    pub c_h: f64,
}

impl EigBracket {
    pub fn interval(&self) -> Interval {
        Interval::new(self.lower, self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Enclosure of `C_h = 0.1893·h`.
pub fn cr_mesh_constant(h: f64) -> Interval {
    Interval::point(CR_CONSTANT) * Interval::point(h)
}

/// `λ/(1 + C_h²λ)`, the lower end of the enclosure (increasing in `λ`).
pub fn cr_lower_bound(lambda_cr_lower: f64, h: f64) -> f64 {
    let l = Interval::point(lambda_cr_lower);
    let c2 = cr_mesh_constant(h).sqr();
    (l / (1.0 + c2 * l)).lo
}

/// Brackets `λ^CR_{k,h}/(1 + C_h²λ^CR_{k,h}) ≤ λ_k ≤ λ^CG_{k,h}` for the
/// indices present in both lists; `h` is the CR mesh size.
pub fn bracket(cr: &[EigenEnclosure], cg: &[EigenEnclosure], h: f64) -> Result<Vec<EigBracket>> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("mesh size must be positive, got {h}")));
    }
    let c_h = cr_mesh_constant(h).hi;
    cr.iter()
        .zip(cg)
        .map(|(lo, hi)| {
            if lo.k != hi.k {
                return Err(Error::domain(format!("index mismatch {} vs {}", lo.k, hi.k)));
            }
            if !lo.index_verified {
                return Err(Error::domain(format!(
                    "CR lower bound for λ_{} lacks an index certificate",
                    lo.k
                )));
            }
            let lower = cr_lower_bound(lo.lower, h);
            let upper = hi.upper;
            if !(lower > 0.0) || lower > upper {
                return Err(Error::InconsistentBracket { k: lo.k, lower, upper });
            }
            Ok(EigBracket {
                k: lo.k,
                lower,
                upper,
                c_h,
            })
        })
        .collect()
}

/// Inputs and value of the eigenfunction distance bound
/// `δ̄(E, Ê) ≤ η(λ₁, λ_{1,h}, ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionErrorBound {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub eta: f64,
}

impl EigenfunctionErrorBound {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        Ok(EigenfunctionErrorBound {
            a,
            b,
            c,
            eta: eta(a, b, c)?,
        })
    }
}

fn check_eta_args(a: f64, b: f64, c: f64) -> Result<()> {
    if !(a > 0.0 && a <= b && b < c) || !c.is_finite() {
        return Err(Error::domain(format!(
            "η needs 0 < a ≤ b < c, got ({a}, {b}, {c})"
        )));
    }
    Ok(())
}

/// `η(a,b,c) = {a + b − 2a√((c−b)/(c−a))}^{1/2}`, rounded upward.
pub fn eta(a: f64, b: f64, c: f64) -> Result<f64> {
    check_eta_args(a, b, c)?;
    if a == b {
        return Ok(0.0);
    }
    let (a, b, c) = (Interval::point(a), Interval::point(b), Interval::point(c));
    Ok(eta_interval(a, b, c).hi)
}

/// Interval extension of `η` over a box (no monotonicity used).
fn eta_interval(a: Interval, b: Interval, c: Interval) -> Interval {
    let s = ((c - b) / (c - a)).sqrt();
    let mut sq = a + b - 2.0 * a * s;
    sq.lo = sq.lo.max(0.0);
    sq.hi = sq.hi.max(0.0);
    sq.sqrt()
}

/// Upper bound of `η` over a box, with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBound {
    pub value: f64,
    /// `true`: the corner value `η(a_lo, b_hi, c_lo)`, with the monotonicity
    /// in `a` certified on the box. `false`: the (wider) interval extension.
    pub monotone: bool,
}

/// Certifies `∂η²/∂a ≤ 0` on the box.
///
/// With `s = √((c−b)/(c−a))`, `∂η²/∂a = 1 − 2s − a·s/(c−a)`; the right
/// side is decreasing in `s` and in `a/(c−a)`, so the worst case uses the
/// smallest `s` and the smallest `a/(c−a)`. `η` is always increasing in `b`
/// and decreasing in `c`.
pub fn eta_monotone_in_a(a: Interval, b: Interval, c: Interval) -> bool {
    if !(c.lo > b.hi && c.lo > a.hi) {
        return false;
    }
    let s = ((Interval::point(c.lo) - b.hi) / (Interval::point(c.hi) - a.lo)).sqrt();
    let ratio = Interval::point(a.lo) / (Interval::point(c.hi) - a.lo);
    let d = 1.0 - 2.0 * Interval::point(s.lo) - ratio * s.lo;
    d.hi <= 0.0
}

/// Upper bound of `η(a, b, c)` over `a ∈ a_box`, `b ∈ b_box`, `c ∈ c_box`,
/// requiring `a_lo ≤ b_hi < c_lo`.
///
/// Uses the corner `η(a_lo, b_hi, c_lo)` when the monotonicity in `a` is
/// certified on the box, and the interval extension otherwise.
pub fn eta_range(a: Interval, b: Interval, c: Interval) -> Result<EtaBound> {
    check_eta_args(a.lo, b.hi, c.lo)?;
    if eta_monotone_in_a(a, b, c) {
        return Ok(EtaBound {
            value: eta(a.lo, b.hi, c.lo)?,
            monotone: true,
        });
    }
    let v = eta_interval(a, b, c).hi;
    if !v.is_finite() {
        return Err(Error::domain("η is unbounded on the box"));
    }
    Ok(EtaBound {
        value: v,
        monotone: false,
    })
}

/// `F(u) = −2 cot θ·‖u_y‖²/‖u‖² + 2(u_x, u_y)/‖u‖²` (plain evaluation).
pub fn f_of(g: GramTriple, theta: f64, mass_norm_sq: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::domain(format!("θ = {theta} outside (0, π)")));
    }
    if !(mass_norm_sq > 0.0) {
        return Err(Error::domain("F needs a nonzero function"));
    }
    let cot = theta.cos() / theta.sin();
    Ok((-2.0 * cot * g.yy + 2.0 * g.xy) / mass_norm_sq)
}

/// Enclosure of `F` for a Gram enclosure, `θ` range and `‖u‖²` range.
pub fn f_enclosure(g: GramEnclosure, theta: Interval, mass_norm_sq: Interval) -> Result<Interval> {
    if !(theta.lo > 0.0 && theta.hi < std::f64::consts::PI) || !(mass_norm_sq.lo > 0.0) {
        return Err(Error::domain("F enclosure outside its domain"));
    }
    let cot = theta.cot_on_half_turn();
    Ok((-2.0 * cot * g.yy + 2.0 * g.xy) / mass_norm_sq)
}

/// Factor `2√b(2 cot θ + √2)` multiplying `η` in `Err`.
fn err_factor(b: Interval, theta: Interval) -> Interval {
    let sqrt2 = Interval::point(2.0).sqrt();
    let mut cot = theta.cot_on_half_turn();
    // Err is stated for the cot-weighted term with its absolute value
    cot = Interval::new(cot.lo.abs().min(cot.hi.abs()), cot.lo.abs().max(cot.hi.abs()));
    2.0 * b.sqrt() * (2.0 * cot + sqrt2)
}

/// `Err(a, b, c, θ) = 2√b(2|cot θ| + √2)·η(a, b, c)`, rounded upward.
pub fn err_bound(a: f64, b: f64, c: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::domain(format!("θ = {theta} outside (0, π)")));
    }
    let e = eta(a, b, c)?;
    if e == 0.0 {
        return Ok(0.0);
    }
    let t = Interval::approx(theta, 0);
    Ok((err_factor(Interval::point(b), t) * e).hi)
}

/// `Err` over a box of parameters and an angle range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrEnvelope {
    pub eta: EtaBound,
    pub err: f64,
}

pub fn err_range(a: Interval, b: Interval, c: Interval, theta: Interval) -> Result<ErrEnvelope> {
    if !(theta.lo > 0.0 && theta.hi < std::f64::consts::PI) {
        return Err(Error::domain("θ range outside (0, π)"));
    }
    let eta = eta_range(a, b, c)?;
    let err = if eta.value == 0.0 {
        0.0
    } else {
        (err_factor(Interval::point(b.hi), theta) * eta.value).hi
    };
    Ok(ErrEnvelope { eta, err })
}

/// `F(u_h)` and its envelope at one angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativePoint {
    pub theta: f64,
    pub f_value: f64,
    pub eta: f64,
    pub err: f64,
    pub gram: GramTriple,
}

impl DerivativePoint {
    /// `a`: lower bound of `λ₁`; `b`: `λ_{1,h} = R(u_h)`; `c`: `ρ ≤ λ₂`.
    pub fn new(theta: f64, gram: GramTriple, mass_norm_sq: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        Ok(DerivativePoint {
            theta,
            f_value: f_of(gram, theta, mass_norm_sq)?,
            eta: eta(a, b, c)?,
            err: err_bound(a, b, c, theta)?,
            gram,
        })
    }

    /// `[F − Err, F + Err]` with the `F` evaluation widened for rounding.
    pub fn range(&self) -> Interval {
        let f = Interval::approx(self.f_value, LIBM_ULPS + 4);
        Interval::new(f.lo - self.err, f.hi + self.err).widen(1)
    }
}
