//! Lowest eigenpairs of `A u = λ M u` (optionally on `{u : Cu = 0}`) with
//! residual-based enclosures.
//!
//! The solver is block subspace iteration with the shift-invert operator
//! `(A + σM)⁻¹M`, a profile `LDLᵀ` factorization and Rayleigh–Ritz on an
//! M-orthonormal block. Linear constraints are handled by a bordered solve:
//! with `K` factored, the `m × m` Schur complement `C K⁻¹ Cᵀ` is formed
//! densely, so a constrained solve costs `m + 1` triangular solves' worth of
//! precomputation and one solve per application.
//!
//! Enclosure model: Ritz values are upper bounds (Poincaré), inflated by
//! [`REDUCTION_ULPS`]. Lower bounds are `ρ − δ` with `δ` the residual in the
//! `M⁻¹` norm, with the index confirmed by an inertia count (Sylvester's
//! law) of `A − sM` on the constrained space, and sharpened by the
//! Kato–Temple bound when the next eigenvalue is certified to lie above the
//! Rayleigh quotient.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::fem::{Constraint, DiscreteOperators};
use crate::interval::{down, up, REDUCTION_ULPS};
use crate::sparse::{dot_compensated, ProfileLdl, SymCsr};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual `δ/ρ` at which a pair counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Block size beyond the wanted pairs.
    pub extra: usize,
    pub seed: u64,
    /// Confirm the index of each lower bound by an inertia count.
    pub verify_index: bool,
    /// Relative distance kept between an inertia shift and the Rayleigh
    /// quotient it certifies.
    pub inertia_margin: f64,
    /// Relative residual accepted once the iteration stops improving; the
    /// enclosure then carries the residual actually reached.
    pub stall_tol: f64,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 500,
            extra: 4,
            seed: 0x7269_6365_7274,
            verify_index: true,
            inertia_margin: 1e-9,
            stall_tol: 1e-6,
            execution: Execution::default(),
        }
    }
}

/// `[lower, upper]` around the discrete eigenvalue `λ_{k,h}` (1-based `k`).
#[derive(Clone, Debug, Serialize)]
pub struct EigenEnclosure {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    #[serde(skip)]
    pub vector: Vec<f64>,
    pub rayleigh: f64,
    /// Rounding-error bound of `rayleigh` as the Rayleigh quotient of `vector`.
    pub rayleigh_error: f64,
    /// `‖Ax − ρMx‖` in the dual M-norm, including its rounding-error bound.
    pub residual_norm: f64,
    /// Kato–Temple refinement applied.
    pub gap_refined: bool,
    /// `lower` confirmed to bound the k-th eigenvalue (not a later one).
    pub index_verified: bool,
}

impl EigenEnclosure {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Symmetric pencil `(A, M)` restricted to `{u : Cu = 0}`.
#[derive(Clone, Copy, Debug)]
pub struct Pencil<'a> {
    pub a: &'a SymCsr,
    pub m: &'a SymCsr,
    pub constraints: &'a [Constraint],
}

impl<'a> Pencil<'a> {
    pub fn new(a: &'a SymCsr, m: &'a SymCsr) -> Self {
        Pencil {
            a,
            m,
            constraints: &[],
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim() - self.constraints.len()
    }

    /// Euclidean projection onto `{u : Cu = 0}`.
    pub fn project(&self, u: &mut [f64]) {
        let m = self.constraints.len();
        if m == 0 {
            return;
        }
        let mut g = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        for (i, ci) in self.constraints.iter().enumerate() {
            rhs[i] = ci.apply(u);
            for (j, cj) in self.constraints.iter().enumerate() {
                g[(i, j)] = sparse_dot(&ci.entries, &cj.entries);
            }
        }
        let Some(mu) = g.lu().solve(&rhs) else { return };
        for (i, c) in self.constraints.iter().enumerate() {
            for &(k, v) in &c.entries {
                u[k] -= mu[i] * v;
            }
        }
    }
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    // entries are sorted by index
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

impl DiscreteOperators {
    pub fn pencil(&self) -> Pencil<'_> {
        Pencil {
            a: &self.stiffness,
            m: &self.mass,
            constraints: &self.constraints,
        }
    }
}

/// `K⁻¹` on the constrained space: `x = argmin` of the bordered system
/// `[K Cᵀ; C 0][x; μ] = [b; 0]`.
struct ConstrainedSolver<'a> {
    ldl: ProfileLdl,
    constraints: &'a [Constraint],
    /// Columns `K⁻¹ c_i`.
    kc: Vec<Vec<f64>>,
    /// `C K⁻¹ Cᵀ`.
    schur: DMatrix<f64>,
    schur_inv: DMatrix<f64>,
}

impl<'a> ConstrainedSolver<'a> {
    fn new(k: &SymCsr, constraints: &'a [Constraint]) -> Result<Self> {
        let ldl = ProfileLdl::factor(k)?;
        let n = k.dim();
        let kc: Vec<Vec<f64>> = constraints
            .iter()
            .map(|c| {
                let mut e = vec![0.0; n];
                for &(i, v) in &c.entries {
                    e[i] = v;
                }
                ldl.solve(&e)
            })
            .collect();
        let m = constraints.len();
        let schur = DMatrix::from_fn(m, m, |i, j| constraints[i].apply(&kc[j]));
        let schur_inv = if m == 0 {
            schur.clone()
        } else {
            schur
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::domain("singular constraint Schur complement"))?
        };
        Ok(ConstrainedSolver {
            ldl,
            constraints,
            kc,
            schur,
            schur_inv,
        })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.ldl.solve(b);
        // one refinement pass: on needles `C K⁻¹ Cᵀ` is ill-conditioned and
        // a single correction leaves `Cx` far above rounding level, which
        // the residual then amplifies through the stiff constraint direction
        self.correct(&mut x);
        self.correct(&mut x);
        x
    }

    /// `x ← x − K⁻¹Cᵀ (C K⁻¹ Cᵀ)⁻¹ C x`: the K-energy-minimal correction
    /// onto `ker C`.
    fn correct(&self, x: &mut [f64]) {
        let m = self.constraints.len();
        if m == 0 {
            return;
        }
        let cx = DVector::from_iterator(m, self.constraints.iter().map(|c| c.apply(x)));
        let mu = &self.schur_inv * cx;
        for (j, kc) in self.kc.iter().enumerate() {
            for (xi, v) in x.iter_mut().zip(kc) {
                *xi -= mu[j] * v;
            }
        }
    }

    /// Negative eigenvalues of `K` on `{u : Cu = 0}` (Haynsworth inertia
    /// additivity applied to the bordered matrix), and whether the sign
    /// count of `C K⁻¹ Cᵀ` is resolved.
    ///
    /// When an unconstrained eigenvalue nearly coincides with a constrained
    /// one near the shift, `K⁻¹` is dominated by a direction almost in
    /// `ker C`; the Schur complement then has one huge eigenvalue and the
    /// small ones drown in cancellation.
    fn negative_count(&self) -> (usize, bool) {
        let neg = self.ldl.inertia().0;
        let m = self.constraints.len();
        if m == 0 {
            return (neg, true);
        }
        let eig = SymmetricEigen::new(self.schur.clone()).eigenvalues;
        let big = eig.amax();
        let resolved = eig.iter().all(|v| v.abs() > SCHUR_RESOLUTION * big);
        (neg + eig.iter().filter(|&&v| v > 0.0).count() - m, resolved)
    }
}

/// Relative size below which a Schur-complement eigenvalue has no
/// trustworthy sign.
const SCHUR_RESOLUTION: f64 = 1e-10;

/// Number of eigenvalues of the pencil strictly below `shift`.
pub fn count_below(pencil: &Pencil, shift: f64) -> Result<usize> {
    let k = pencil.a.add_scaled(-shift, pencil.m);
    Ok(ConstrainedSolver::new(&k, pencil.constraints)?.negative_count().0)
}

/// Flips `v` so that its largest-magnitude component is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Flips `v` so that `(v, reference)_M ≥ 0`.
pub fn align_sign(m: &SymCsr, v: &mut [f64], reference: &[f64]) {
    if m.bilinear(v, reference) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lowest `count` eigenpairs with verified enclosures.
pub fn solve_lowest(pencil: &Pencil, count: usize, opts: &SolverOptions) -> Result<Vec<EigenEnclosure>> {
    solve_lowest_from(pencil, count, opts, &[])
}

/// As [`solve_lowest`], seeding the block with `start` vectors (e.g. the
/// eigenvectors at a nearby angle on the same mesh topology).
pub fn solve_lowest_from(
    pencil: &Pencil,
    count: usize,
    opts: &SolverOptions,
    start: &[Vec<f64>],
) -> Result<Vec<EigenEnclosure>> {
    let dim = pencil.dim();
    if count == 0 || count > dim {
        return Err(Error::domain(format!(
            "requested {count} eigenpairs of a {dim}-dimensional space"
        )));
    }
    let vectors = iterate(pencil, count, opts, start)?;
    verify_enclosures(pencil, vectors, count, opts)
}

/// Tracked pairs: one beyond `count`, so that the last wanted pair has a
/// neighbour for the gap refinement.
fn tracked(count: usize, dim: usize) -> usize {
    (count + 1).min(dim)
}

fn iterate(pencil: &Pencil, count: usize, opts: &SolverOptions, start: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = pencil.a.dim();
    let dim = pencil.dim();
    let q = tracked(count, dim);
    let p = (q + opts.extra).min(dim);
    // A + σM is definite for both boundary conditions
    let sigma = if pencil.constraints.is_empty() { 0.0 } else { 1.0 };
    let k = if sigma == 0.0 {
        pencil.a.clone()
    } else {
        pencil.a.add_scaled(sigma, pencil.m)
    };
    let ksolve = ConstrainedSolver::new(&k, pencil.constraints)?;
    let msolve = ConstrainedSolver::new(pencil.m, pencil.constraints)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|j| match start.get(j) {
            Some(s) if s.len() == n => s.clone(),
            _ => (0..n).map(|_| rng.random::<f64>() - 0.5).collect(),
        })
        .collect();

    let mut worst = f64::INFINITY;
    let (mut best, mut improved_at) = (f64::INFINITY, 0);
    for it in 1..=opts.max_iter {
        let mut y = opts.execution.map(&x, |xj| ksolve.solve(&pencil.m.mul_vec(xj)));
        m_orthonormalize(pencil.m, &mut y)?;
        let (_, vecs) = ritz(pencil, &y)?;
        x = vecs;
        worst = 0.0f64;
        let res = opts
            .execution
            .map(&x[..q], |xi| relative_residual(pencil, &msolve, xi));
        for r in res {
            worst = worst.max(r);
        }
        if worst <= opts.tol {
            return Ok(x);
        }
        // a rounding floor above `tol` (needle triangles) shows as stagnation
        if worst < 0.5 * best {
            best = worst;
            improved_at = it;
        } else if it - improved_at >= STALL_WINDOW && worst <= opts.stall_tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: worst,
    })
}

/// Iterations without halving the worst residual before it counts as stalled.
const STALL_WINDOW: usize = 25;

fn relative_residual(pencil: &Pencil, msolve: &ConstrainedSolver, x: &[f64]) -> f64 {
    let r = residual(pencil, msolve, x);
    r.delta / r.rho.abs().max(f64::MIN_POSITIVE)
}

/// `γ_k = k u / (1 − k u)`.
fn gamma(k: usize) -> f64 {
    let ku = k as f64 * f64::EPSILON / 2.0;
    ku / (1.0 - ku)
}

struct Residual {
    rho: f64,
    /// Rounding bound of `rho` against the exact Rayleigh quotient.
    rho_err: f64,
    delta: f64,
}

/// Rayleigh quotient `ρ` of `x` and `δ = ‖Ax − ρMx‖_* / ‖x‖_M`, the dual
/// M-norm on the constrained space.
///
/// `δ` includes the standard bound `γ (|A||x| + |ρ||M||x|)` on the rounding
/// error of the computed residual vector, measured with `M ≥ diag(M)/2`
/// (P1 element mass matrices satisfy it, the CR mass matrix is diagonal).
fn residual(pencil: &Pencil, msolve: &ConstrainedSolver, x: &[f64]) -> Residual {
    let ax = pencil.a.mul_vec(x);
    let mx = pencil.m.mul_vec(x);
    let xmx = dot_compensated(x, &mx);
    let rho = dot_compensated(x, &ax) / xmx;
    let mut r: Vec<f64> = ax.iter().zip(&mx).map(|(a, m)| a - rho * m).collect();

    let g = gamma(pencil.a.max_row_len().max(pencil.m.max_row_len()) + 2);
    let abs_x: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let aax = pencil.a.abs_mul_vec(&abs_x);
    let amx = pencil.m.abs_mul_vec(&abs_x);
    let diag = pencil.m.diagonal();
    let mut err2 = 0.0;
    for i in 0..r.len() {
        let e = g * (aax[i] + rho.abs() * amx[i]);
        err2 += e * e / diag[i];
    }
    let err = (2.0 * err2).sqrt();
    let rho_err = g * (dot_compensated(&abs_x, &aax) + rho.abs() * dot_compensated(&abs_x, &amx)) / xmx;

    // drop the Lagrange-multiplier part `Cᵀμ` first: it does not change the
    // dual norm on ker C but would cancel catastrophically inside the solve
    pencil.project(&mut r);
    let z = msolve.solve(&r);
    let d2 = dot_compensated(&r, &z).max(0.0);
    Residual {
        rho,
        rho_err: up(rho_err, 2),
        delta: up((d2.sqrt() + err) / xmx.sqrt(), 2),
    }
}

/// Modified Gram–Schmidt in the M inner product, two passes.
fn m_orthonormalize(m: &SymCsr, y: &mut [Vec<f64>]) -> Result<()> {
    for _pass in 0..2 {
        for j in 0..y.len() {
            let (done, rest) = y.split_at_mut(j);
            let w = &mut rest[0];
            for yi in done.iter() {
                let c = m.bilinear(yi, w);
                for (a, b) in w.iter_mut().zip(yi) {
                    *a -= c * b;
                }
            }
            let nrm = m.quad_form(w).sqrt();
            if !(nrm > 0.0) || !nrm.is_finite() {
                return Err(Error::domain("block lost rank during orthonormalization"));
            }
            w.iter_mut().for_each(|v| *v /= nrm);
        }
    }
    Ok(())
}

/// Rayleigh–Ritz on an M-orthonormal block: ascending Ritz values and vectors.
fn ritz(pencil: &Pencil, y: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = y.len();
    let ay: Vec<Vec<f64>> = y.iter().map(|v| pencil.a.mul_vec(v)).collect();
    let my: Vec<Vec<f64>> = y.iter().map(|v| pencil.m.mul_vec(v)).collect();
    let h = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot_compensated(&y[i], &ay[j]) + dot_compensated(&y[j], &ay[i])));
    let g = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot_compensated(&y[i], &my[j]) + dot_compensated(&y[j], &my[i])));
    // G ≈ I; solving the generalized problem absorbs the residual non-orthogonality
    let l = g
        .cholesky()
        .ok_or_else(|| Error::domain("Ritz Gram matrix not positive definite"))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::domain("singular Ritz Gram factor"))?;
    let c = &linv * h * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let coeff = linv.transpose() * &eig.eigenvectors;
    let n = pencil.a.dim();
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&col| {
            let mut v = vec![0.0; n];
            for (j, yj) in y.iter().enumerate() {
                let c = coeff[(j, col)];
                for (a, b) in v.iter_mut().zip(yj) {
                    *a += c * b;
                }
            }
            v
        })
        .collect();
    Ok((values, vectors))
}

/// Turns approximate eigenvectors into enclosures of the lowest `count`
/// eigenvalues.
///
/// The vectors are projected onto the constraint set, M-orthonormalized and
/// rotated to Ritz vectors of their span; vectors beyond `count` supply the
/// neighbour bound for the gap refinement.
///
/// For each pair, the shift `s = ρ − max(δ, τρ)` (`τ` =
/// [`SolverOptions::inertia_margin`], keeping the shift clear of the
/// spectrum so the pivot signs are trustworthy) is checked to have at most
/// `k − 1` eigenvalues below it; then `λ_k ≥ s`. If exactly `k − 1` lie
/// below `s` and the next pair's verified bound `b` exceeds `ρ`, only `λ_k`
/// lies in `(s, b)` and the Kato–Temple bound `ρ − δ²/(b − ρ)` applies.
/// Without the inertia check (`verify_index = false`) the plain `ρ − δ` is
/// reported and never refined.
pub fn verify_enclosures(
    pencil: &Pencil,
    mut vectors: Vec<Vec<f64>>,
    count: usize,
    opts: &SolverOptions,
) -> Result<Vec<EigenEnclosure>> {
    if vectors.len() < count {
        return Err(Error::domain("fewer vectors than requested eigenpairs"));
    }
    let q = tracked(count, pencil.dim()).min(vectors.len());
    vectors.truncate(q.max(count));
    for v in vectors.iter_mut() {
        pencil.project(v);
    }
    m_orthonormalize(pencil.m, &mut vectors)?;
    let (ritz_values, mut vectors) = ritz(pencil, &vectors)?;
    let msolve = ConstrainedSolver::new(pencil.m, pencil.constraints)?;

    let pairs = opts.execution.map(&vectors, |v| residual(pencil, &msolve, v));
    let mut out: Vec<EigenEnclosure> = Vec::with_capacity(vectors.len());
    let mut exact_index = Vec::with_capacity(vectors.len());
    for (i, (res, v)) in pairs.iter().zip(vectors.iter_mut()).enumerate() {
        let (rho, delta) = (res.rho, res.delta);
        let k = i + 1;
        let nrm = pencil.m.quad_form(v).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        normalize_sign(v);
        let delta = up(delta, REDUCTION_ULPS);
        let upper = up(ritz_values[i].max(rho) + res.rho_err, REDUCTION_ULPS);
        let mut lower = down(down(rho, REDUCTION_ULPS) - delta, 1).min(rho);
        let mut verified = false;
        let mut exact = false;
        if opts.verify_index {
            // unresolved counts are retried further from ρ
            for widen in [1.0, 1e3, 1e6] {
                let s = lower.min(down(rho - widen * opts.inertia_margin * rho.abs(), 1));
                if let Some((s, below)) = inertia_at(pencil, s)? {
                    lower = s;
                    verified = below < k;
                    exact = below + 1 == k;
                    break;
                }
            }
        }
        exact_index.push(exact);
        out.push(EigenEnclosure {
            k,
            lower,
            upper,
            vector: std::mem::take(v),
            rayleigh: rho,
            rayleigh_error: res.rho_err,
            residual_norm: delta,
            gap_refined: false,
            index_verified: verified,
        });
    }

    if opts.verify_index {
        for i in 0..count.min(out.len()) {
            let Some(next) = out.get(i + 1) else { break };
            let b = next.lower;
            let e = &out[i];
            // ρ − δ²/(b − ρ) increases with ρ, so the lower end of the exact
            // Rayleigh quotient may stand in for it
            let rho_hi = up(e.rayleigh + e.rayleigh_error, 1);
            let rho_lo = down(down(e.rayleigh, REDUCTION_ULPS) - e.rayleigh_error, 1);
            if next.index_verified && exact_index[i] && b > rho_hi {
                let gap = down(b - rho_lo, 1);
                let kt = down(rho_lo - up(e.residual_norm * e.residual_norm / gap, 2), 1);
                let e = &mut out[i];
                if kt > e.lower {
                    e.lower = kt.min(e.rayleigh);
                    e.gap_refined = true;
                }
            }
        }
    }
    out.truncate(count);
    Ok(out)
}

/// Eigenvalue count below `s`; a singular shift is nudged downward, which
/// only weakens the bound being checked. `None` if the count is unresolved.
fn inertia_at(pencil: &Pencil, mut s: f64) -> Result<Option<(f64, usize)>> {
    for _ in 0..4 {
        let k = pencil.a.add_scaled(-s, pencil.m);
        match ConstrainedSolver::new(&k, pencil.constraints) {
            Ok(c) => {
                let (count, resolved) = c.negative_count();
                return Ok(resolved.then_some((s, count)));
            }
            Err(Error::Factorization { .. }) => s = down(s, 64),
            Err(err) => return Err(err),
        }
    }
    Ok(None)
}

/// All eigenvalues of the pencil by a dense solve (small problems only).
pub fn dense_spectrum(ops: &DiscreteOperators) -> Result<Vec<f64>> {
    let (a, m) = ops.reduced_dense()?;
    dense_generalized(a, m)
}

pub fn dense_generalized(a: DMatrix<f64>, m: DMatrix<f64>) -> Result<Vec<f64>> {
    let l = m
        .cholesky()
        .ok_or_else(|| Error::domain("mass matrix not positive definite"))?
        .l();
    let linv = l.try_inverse().ok_or_else(|| Error::domain("singular mass factor"))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}
