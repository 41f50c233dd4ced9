//! The proof drivers.
//!
//! - Step 1 (monotonicity in the apex height) is analytic and only recorded.
//! - Step 2: [`algorithm1`] bounds `λ₁` from below on `I = (0, π/3 − ε]`
//!   and compares with an upper bound of `λ₁` at the equilateral triangle.
//! - Step 3: on `J = [π/3 − ε, π/3]`, [`simplicity_check`] separates `λ₁`
//!   from `λ₂` and [`algorithm2`] encloses `dλ₁/dθ`, which must be negative.
//!
//! [`run_proof`] chains the steps into a [`Certificate`].

mod certificate;
mod schedule;

use std::f64::consts::FRAC_PI_3;

use serde::{Deserialize, Serialize};

pub use certificate::{
    write_ledger_csv, write_sweep_csv, Certificate, DofCounts, Environment, EquilateralPoint, Ledger,
    LedgerRow, SimplicityEvidence, Step2Summary, Step3Summary, SweepRow, Verdict, SCHEMA_VERSION,
};
pub use schedule::{j_nodes, Schedule};

use crate::bounds::{self, cr_lower_bound, EigBracket, EigenfunctionErrorBound};
use crate::eigsolve::{solve_lowest, EigenEnclosure, SolverOptions};
use crate::exec::Execution;
use crate::fem::{assemble_with, build_space, BoundaryCondition, Family};
use crate::geometry::{
    map_gram_enclosure, map_parameter_enclosure, perturbation_factors_over, GramEnclosure, GramTriple,
    TriangleShape,
};
use crate::interval::{Interval, REDUCTION_ULPS};
use crate::mesh::uniform_subdivide;
use crate::{Error, Result};

/// Which eigenvalue problem is certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Homogeneous Dirichlet condition.
    Dirichlet,
    /// Zero mean on each edge; `λ₁^{-1/2}` is the Crouzeix–Raviart
    /// interpolation constant.
    CrConstant,
}

impl ProblemKind {
    pub fn boundary_condition(self) -> BoundaryCondition {
        match self {
            ProblemKind::Dirichlet => BoundaryCondition::Dirichlet,
            ProblemKind::CrConstant => BoundaryCondition::EdgeMean,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Dirichlet => "dirichlet",
            ProblemKind::CrConstant => "cr-constant",
        }
    }

    pub fn paper_schedule(self) -> Schedule {
        match self {
            ProblemKind::Dirichlet => Schedule::paper_dirichlet(),
            ProblemKind::CrConstant => Schedule::paper_cr_constant(),
        }
    }

    pub fn paper_n2(self) -> usize {
        match self {
            ProblemKind::Dirichlet => 200,
            ProblemKind::CrConstant => 100,
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(ProblemKind::Dirichlet),
            "cr-constant" | "crconstant" | "edge-mean" => Ok(ProblemKind::CrConstant),
            _ => Err(Error::domain(format!("unknown problem {s:?}"))),
        }
    }
}

/// Subdivision numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    /// Conforming mesh (upper bounds, approximate eigenfunctions).
    pub cg_n: usize,
    /// Crouzeix–Raviart mesh (lower bounds).
    pub cr_n: usize,
    /// Conforming mesh for the single upper bound of `λ₁` at the
    /// equilateral triangle that Step 2 compares against.
    pub equilateral_cg_n: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            cg_n: 96,
            cr_n: 64,
            equilateral_cg_n: 256,
        }
    }
}

impl MeshConfig {
    pub fn quick() -> Self {
        MeshConfig {
            cg_n: 32,
            cr_n: 32,
            equilateral_cg_n: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // CR Dirichlet needs an interior edge, CG Dirichlet an interior node
        for (name, n) in [
            ("cg_n", self.cg_n),
            ("cr_n", self.cr_n),
            ("equilateral_cg_n", self.equilateral_cg_n),
        ] {
            if n < 3 {
                return Err(Error::domain(format!("{name} must be at least 3, got {n}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProofConfig {
    pub problem: ProblemKind,
    pub mesh: MeshConfig,
    pub schedule: Schedule,
    pub n2: usize,
    pub solver: SolverOptions,
    pub execution: Execution,
}

impl ProofConfig {
    /// Schedules, meshes and `N₂` of the published computation.
    pub fn paper(problem: ProblemKind) -> Self {
        ProofConfig {
            problem,
            mesh: MeshConfig::default(),
            schedule: problem.paper_schedule(),
            n2: problem.paper_n2(),
            solver: SolverOptions::default(),
            execution: Execution::default(),
        }
    }

    /// Desk-scale preset: coarse meshes, every tenth breakpoint, `N₂ = 20`.
    pub fn quick(problem: ProblemKind) -> Self {
        ProofConfig {
            mesh: MeshConfig::quick(),
            schedule: problem.paper_schedule().coarsened(10),
            n2: 20,
            ..ProofConfig::paper(problem)
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.schedule.epsilon()
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.schedule.validate()?;
        if self.n2 == 0 {
            return Err(Error::Schedule("N₂ must be positive".into()));
        }
        if !(self.solver.tol > 0.0 && self.solver.max_iter > 0) {
            return Err(Error::domain("solver tolerance and iteration cap must be positive"));
        }
        Ok(())
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            execution: Execution::Sequential,
            ..self.solver.clone()
        }
    }
}

/// Both discretizations solved at one angle.
#[derive(Clone, Debug)]
pub struct PointSolution {
    pub theta: f64,
    pub lambda1: EigBracket,
    /// Lower bound of `λ₂`.
    pub lambda2_lower: f64,
    /// CR enclosures of `λ₁, λ₂` (vectors dropped).
    pub cr: Vec<EigenEnclosure>,
    /// CG enclosure of `λ₁` with its M-normalized eigenvector.
    pub cg: EigenEnclosure,
    /// `(‖u_x‖², (u_x,u_y), ‖u_y‖²)` of the CG eigenvector.
    pub gram: GramTriple,
    pub mass_norm_sq: f64,
}

fn solve_family(
    shape: &TriangleShape,
    n: usize,
    family: Family,
    bc: BoundaryCondition,
    count: usize,
    opts: &SolverOptions,
) -> Result<(Vec<EigenEnclosure>, crate::fem::DiscreteOperators)> {
    let mesh = uniform_subdivide(shape, n)?;
    let space = build_space(&mesh, family, bc)?;
    let ops = assemble_with(&space, Execution::Sequential)?;
    let e = solve_lowest(&ops.pencil(), count, opts)?;
    Ok((e, ops))
}

/// Upper bound of `λ₁` from a conforming mesh alone.
pub fn cg_upper(problem: ProblemKind, shape: &TriangleShape, n: usize, opts: &SolverOptions) -> Result<f64> {
    let opts = SolverOptions {
        verify_index: false,
        ..opts.clone()
    };
    let (e, _) = solve_family(shape, n, Family::Cg, problem.boundary_condition(), 1, &opts)?;
    Ok(e[0].upper)
}

/// Brackets `λ₁` and bounds `λ₂` from below at one triangle.
pub fn solve_point(
    problem: ProblemKind,
    shape: &TriangleShape,
    cg_n: usize,
    cr_n: usize,
    opts: &SolverOptions,
) -> Result<PointSolution> {
    let bc = problem.boundary_condition();
    let (mut cr, cr_ops) = solve_family(shape, cr_n, Family::Cr, bc, 2, opts)?;
    cr.iter_mut().for_each(|e| e.vector = Vec::new());
    // Ritz values are upper bounds whatever their index
    let cg_opts = SolverOptions {
        verify_index: false,
        ..opts.clone()
    };
    let (cg, cg_ops) = solve_family(shape, cg_n, Family::Cg, bc, 1, &cg_opts)?;
    let cg = cg.into_iter().next().expect("one pair requested");
    let lambda1 = bounds::bracket(&cr[..1], std::slice::from_ref(&cg), cr_ops.h)?[0];
    if !cr[1].index_verified {
        return Err(Error::domain("CR lower bound for λ₂ lacks an index certificate"));
    }
    let lambda2_lower = cr_lower_bound(cr[1].lower, cr_ops.h);
    let gram = cg_ops.gram(&cg.vector);
    let mass_norm_sq = cg_ops.mass_norm_sq(&cg.vector);
    Ok(PointSolution {
        theta: shape.theta(),
        lambda1,
        lambda2_lower,
        cr,
        cg,
        gram,
        mass_norm_sq,
    })
}

fn solve_points(problem: ProblemKind, thetas: &[f64], cfg: &ProofConfig, offset: usize) -> Result<Vec<PointSolution>> {
    let opts = cfg.solver();
    cfg.execution
        .map_range(thetas.len(), |i| {
            let shape = TriangleShape::from_angle(thetas[i])?;
            solve_point(problem, &shape, cfg.mesh.cg_n, cfg.mesh.cr_n, &opts)
                .map_err(|e| Error::at(i + offset, e))
        })
        .into_iter()
        .collect()
}

fn scale_down(factor: f64, value: f64) -> f64 {
    (Interval::point(factor) * value).lo
}

fn scale_up(factor: f64, value: f64) -> f64 {
    (Interval::point(factor) * value).hi
}

/// Output of Algorithm 1.
#[derive(Clone, Debug)]
pub struct Step2Result {
    /// `min_i λ̲₁^{I_i}`.
    pub lower_min: f64,
    /// 1-based index of the interval attaining it.
    pub argmin: usize,
    pub rows: Vec<LedgerRow>,
    /// Point lower bounds at `θ_i`, before the extension over `I_i`.
    pub point_lowers: Vec<f64>,
}

/// Lower bound of `λ₁^θ` over `I = (0, θ_N]`.
///
/// For `I_i = (θ_{i−1}, θ_i]` the bracket at `θ_i` is extended to the whole
/// subinterval by the perturbation factors from `θ_i` over `[θ_{i−1}, θ_i]`.
pub fn algorithm1(cfg: &ProofConfig) -> Result<Step2Result> {
    cfg.validate()?;
    let pts = solve_points(cfg.problem, &cfg.schedule.breakpoints[1..], cfg, 1)?;
    let mut rows = Vec::with_capacity(pts.len());
    let mut point_lowers = Vec::with_capacity(pts.len());
    for (k, ((lo, hi), p)) in cfg.schedule.intervals().zip(&pts).enumerate() {
        let i = k + 1;
        let f = perturbation_factors_over(hi, lo, hi).map_err(|e| Error::at(i, e))?;
        rows.push(LedgerRow {
            i,
            theta_lo: lo,
            theta_hi: hi,
            lambda1_lo: scale_down(f.low, p.lambda1.lower),
            lambda1_hi: p.lambda1.upper,
            lambda2_lo: scale_down(f.low, p.lambda2_lower),
            f_lo: None,
            f_hi: None,
            err: None,
        });
        point_lowers.push(p.lambda1.lower);
    }
    let (argmin, lower_min) = rows
        .iter()
        .map(|r| (r.i, r.lambda1_lo))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("schedule has at least one interval");
    Ok(Step2Result {
        lower_min,
        argmin,
        rows,
        point_lowers,
    })
}

/// Bounds valid on `[θ_l, θ_r]` from the solutions at both ends.
struct SubintervalBounds {
    lambda1_lo: f64,
    lambda1_hi: f64,
    lambda2_lo: f64,
}

fn extend(left: &PointSolution, right: &PointSolution) -> Result<SubintervalBounds> {
    let (lo, hi) = (left.theta, right.theta);
    let fl = perturbation_factors_over(lo, lo, hi)?;
    let fr = perturbation_factors_over(hi, lo, hi)?;
    Ok(SubintervalBounds {
        lambda1_lo: scale_down(fl.low, left.lambda1.lower).max(scale_down(fr.low, right.lambda1.lower)),
        lambda1_hi: scale_up(fl.high, left.lambda1.upper).min(scale_up(fr.high, right.lambda1.upper)),
        lambda2_lo: scale_down(fl.low, left.lambda2_lower).max(scale_down(fr.low, right.lambda2_lower)),
    })
}

/// `λ₁ ≤ upper < lower ≤ λ₂` on all of `J` from the node solutions.
pub fn simplicity_from_points(points: &[PointSolution]) -> Result<SimplicityEvidence> {
    let mut l1: f64 = f64::NEG_INFINITY;
    let mut l2: f64 = f64::INFINITY;
    if points.len() == 1 {
        l1 = points[0].lambda1.upper;
        l2 = points[0].lambda2_lower;
    }
    for (i, w) in points.windows(2).enumerate() {
        let b = extend(&w[0], &w[1]).map_err(|e| Error::at(i + 1, e))?;
        l1 = l1.max(b.lambda1_hi);
        l2 = l2.min(b.lambda2_lo);
    }
    Ok(SimplicityEvidence {
        lambda1_upper: l1,
        lambda2_lower: l2,
        holds: l1 < l2,
    })
}

/// Simplicity of `λ₁` on `J = [π/3 − ε, π/3]`, subdivided into `n2` parts.
pub fn simplicity_check(epsilon: f64, n2: usize, cfg: &ProofConfig) -> Result<SimplicityEvidence> {
    let nodes = j_nodes(FRAC_PI_3 - epsilon, n2)?;
    let pts = solve_points(cfg.problem, &nodes, cfg, 0)?;
    simplicity_from_points(&pts)
}

/// Output of Algorithm 2.
#[derive(Clone, Debug)]
pub struct DerivativeRange {
    pub f_lo: f64,
    pub f_hi: f64,
    pub rows: Vec<LedgerRow>,
    /// Every `η` bound came from the certified-monotone corner.
    pub eta_monotone: bool,
    /// Largest `η` bound over the subintervals.
    pub eta_max: f64,
}

impl DerivativeRange {
    pub fn interval(&self) -> Interval {
        Interval::new(self.f_lo, self.f_hi)
    }
}

/// Range of `F(u^θ) = dλ₁/dθ` over each `J_i = [θ_i, θ_{i+1}]`.
///
/// The reference pair is the CG eigenpair at `θ_i`, transported to `T^θ` by
/// the affine map; its Gram triple is enclosed for all `θ ∈ J_i` and the
/// envelope `Err` is added with `λ₁` and `ρ = λ̲₂` bounded below and
/// `λ_{1,h}^θ = R(ũ)` bounded above over `J_i`.
pub fn algorithm2_from_points(points: &[PointSolution]) -> Result<DerivativeRange> {
    let pairs: Vec<(&PointSolution, &PointSolution)> = if points.len() == 1 {
        vec![(&points[0], &points[0])]
    } else {
        points.windows(2).map(|w| (&w[0], &w[1])).collect()
    };
    let mut rows = Vec::with_capacity(pairs.len());
    let mut eta_monotone = true;
    let mut eta_max: f64 = 0.0;
    for (k, (left, right)) in pairs.into_iter().enumerate() {
        let i = k + 1;
        let row = derivative_row(i, left, right).map_err(|e| Error::at(i, e))?;
        eta_monotone &= row.1;
        eta_max = eta_max.max(row.2);
        rows.push(row.0);
    }
    let f_lo = rows.iter().filter_map(|r| r.f_lo).fold(f64::INFINITY, f64::min);
    let f_hi = rows.iter().filter_map(|r| r.f_hi).fold(f64::NEG_INFINITY, f64::max);
    Ok(DerivativeRange {
        f_lo,
        f_hi,
        rows,
        eta_monotone,
        eta_max,
    })
}

fn derivative_row(i: usize, left: &PointSolution, right: &PointSolution) -> Result<(LedgerRow, bool, f64)> {
    let (lo, hi) = (left.theta, right.theta);
    let b = extend(left, right)?;
    let theta = Interval::new(lo, hi);

    // ũ = u_h^{θ_i} ∘ Φ on T^θ, θ ∈ J_i
    let (alpha, beta) = map_parameter_enclosure(lo, lo, hi)?;
    let g = map_gram_enclosure(GramEnclosure::point(left.gram, REDUCTION_ULPS), alpha, beta);
    let mass = beta * Interval::approx(left.mass_norm_sq, REDUCTION_ULPS);
    let f = bounds::f_enclosure(g, theta, mass)?;

    // λ_{1,h}^θ = R(ũ): interval Gram bound, or the factor bound on R(u_h)
    let rq = (g.xx + g.yy) / mass;
    let fl = perturbation_factors_over(lo, lo, hi)?;
    let rq_ref = Interval::approx(left.cg.rayleigh, REDUCTION_ULPS);
    let b_hi = rq.hi.min((Interval::point(fl.high) * rq_ref).hi);
    let b_lo = rq.lo.max((Interval::point(fl.low) * rq_ref).lo).min(b_hi);
    let a_box = Interval::new(b.lambda1_lo, b_hi.max(b.lambda1_lo));
    let b_box = Interval::new(b_lo.max(b.lambda1_lo).min(b_hi), b_hi);
    let c_box = Interval::point(b.lambda2_lo);
    if !(b_hi < b.lambda2_lo) {
        return Err(Error::domain(format!(
            "λ_(1,h) bound {b_hi} does not stay below ρ = {}",
            b.lambda2_lo
        )));
    }
    let env = bounds::err_range(a_box, b_box, c_box, theta)?;
    let range = Interval::new(f.lo - env.err, f.hi + env.err).widen(1);
    Ok((
        LedgerRow {
            i,
            theta_lo: lo,
            theta_hi: hi,
            lambda1_lo: b.lambda1_lo,
            lambda1_hi: b.lambda1_hi,
            lambda2_lo: b.lambda2_lo,
            f_lo: Some(range.lo),
            f_hi: Some(range.hi),
            err: Some(env.err),
        },
        env.eta.monotone,
        env.eta.value,
    ))
}

/// Algorithm 2 on `J = [π/3 − ε, π/3]` with `n2` equal parts (`ε = 0`
/// gives the single point `π/3`).
pub fn algorithm2(epsilon: f64, n2: usize, cfg: &ProofConfig) -> Result<DerivativeRange> {
    let nodes = if epsilon == 0.0 {
        vec![FRAC_PI_3]
    } else {
        j_nodes(FRAC_PI_3 - epsilon, n2)?
    };
    let pts = solve_points(cfg.problem, &nodes, cfg, 0)?;
    let s = simplicity_from_points(&pts)?;
    if !s.holds {
        return Err(Error::domain(format!(
            "simplicity not certified on J: λ₁ ≤ {} vs λ₂ ≥ {}",
            s.lambda1_upper, s.lambda2_lower
        )));
    }
    algorithm2_from_points(&pts)
}

/// Table quantities at `θ = π/3` from its node solution.
pub fn equilateral_point(p: &PointSolution) -> Result<EquilateralPoint> {
    let a = p.lambda1.lower;
    let b = p.cg.rayleigh;
    let c = p.lambda2_lower;
    let d = bounds::DerivativePoint::new(p.theta, p.gram, p.mass_norm_sq, a, b, c)?;
    Ok(EquilateralPoint {
        theta: p.theta,
        f_value: d.f_value,
        err: d.err,
        eta: EigenfunctionErrorBound::new(a, b, c)?.eta,
        gram: p.gram,
        lambda1_h: b,
        rho: c,
        lambda1_lower: a,
        lambda1_upper: p.lambda1.upper,
    })
}

/// Runs Steps 1–3. Configuration errors are returned as `Err`; numerical
/// failures produce a certificate with verdict `failed`.
pub fn run_proof(cfg: &ProofConfig) -> Result<Certificate> {
    run_proof_with(cfg, |_| {})
}

/// As [`run_proof`], reporting progress messages to `log`.
pub fn run_proof_with(cfg: &ProofConfig, log: impl Fn(&str)) -> Result<Certificate> {
    cfg.validate()?;
    let environment = Environment::from_config(cfg)?;
    let mut cert = Certificate::new(cfg.problem, environment);

    log(&format!(
        "step 2: algorithm 1 over {} intervals (CG N={}, CR N={})",
        cfg.schedule.len(),
        cfg.mesh.cg_n,
        cfg.mesh.cr_n
    ));
    let step2 = match algorithm1(cfg) {
        Ok(s) => s,
        Err(e) => return Ok(cert.fail(format!("step 2: {e}"))),
    };
    log(&format!(
        "step 2: λ₁ ≥ {} on I; upper bound at π/3 (CG N={})",
        step2.lower_min, cfg.mesh.equilateral_cg_n
    ));
    let equilateral_upper = match cg_upper(
        cfg.problem,
        &TriangleShape::equilateral(),
        cfg.mesh.equilateral_cg_n,
        &cfg.solver(),
    ) {
        Ok(u) => u,
        Err(e) => return Ok(cert.fail(format!("step 2 (equilateral upper bound): {e}"))),
    };
    cert.ledger.step2 = step2.rows.clone();
    cert.step2 = Some(Step2Summary {
        lower_min: step2.lower_min,
        argmin_interval: step2.argmin,
        equilateral_upper,
        equilateral_cg_n: cfg.mesh.equilateral_cg_n,
        margin: step2.lower_min - equilateral_upper,
    });

    let nodes = j_nodes(cfg.schedule.breakpoints[cfg.schedule.len()], cfg.n2)?;
    log(&format!("step 3: {} nodes on J", nodes.len()));
    let pts = match solve_points(cfg.problem, &nodes, cfg, 0) {
        Ok(p) => p,
        Err(e) => return Ok(cert.fail(format!("step 3: {e}"))),
    };
    let simplicity = match simplicity_from_points(&pts) {
        Ok(s) => s,
        Err(e) => return Ok(cert.fail(format!("step 3 (simplicity): {e}"))),
    };
    let at_pi_3 = match equilateral_point(pts.last().expect("J has nodes")) {
        Ok(p) => p,
        Err(e) => return Ok(cert.fail(format!("step 3 (values at π/3): {e}"))),
    };
    let mut step3 = Step3Summary {
        f_lo: None,
        f_hi: None,
        eta_max: None,
        eta_monotone: None,
        simplicity,
        at_pi_3,
    };
    if !simplicity.holds {
        cert.step3 = Some(step3);
        return Ok(cert.fail(format!(
            "step 3: simplicity not certified (λ₁ ≤ {} vs λ₂ ≥ {})",
            simplicity.lambda1_upper, simplicity.lambda2_lower
        )));
    }
    log("step 3: algorithm 2");
    match algorithm2_from_points(&pts) {
        Ok(r) => {
            step3.f_lo = Some(r.f_lo);
            step3.f_hi = Some(r.f_hi);
            step3.eta_max = Some(r.eta_max);
            step3.eta_monotone = Some(r.eta_monotone);
            cert.ledger.step3 = r.rows;
            cert.step3 = Some(step3);
        }
        Err(e) => {
            cert.step3 = Some(step3);
            return Ok(cert.fail(format!("step 3 (algorithm 2): {e}")));
        }
    }
    cert.finalize();
    Ok(cert)
}

/// `λ₁` brackets at the given angles.
pub fn sweep(problem: ProblemKind, thetas: &[f64], mesh: &MeshConfig, opts: &SolverOptions, exec: Execution) -> Result<Vec<SweepRow>> {
    let opts = SolverOptions {
        execution: Execution::Sequential,
        ..opts.clone()
    };
    if let Some(t) = thetas.iter().find(|&&t| !(t > 0.0 && t <= FRAC_PI_3)) {
        return Err(Error::domain(format!("sweep angle {t} outside (0, π/3]")));
    }
    exec.map(thetas, |&t| {
        let shape = TriangleShape::from_angle(t)?;
        let p = solve_point(problem, &shape, mesh.cg_n, mesh.cr_n, &opts)?;
        Ok(SweepRow {
            theta: t,
            lambda1_lo: p.lambda1.lower,
            lambda1_hi: p.lambda1.upper,
        })
    })
    .into_iter()
    .collect()
}

/// Enclosure of the interpolation constant `C(T) = λ₁(T)^{-1/2}` of the
/// edge-mean problem on `T = scale · OAB`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantBracket {
    pub apex: [f64; 2],
    pub scale: f64,
    pub diameter: f64,
    /// `λ₁` of the unscaled triangle `OAB`.
    pub lambda1: EigBracket,
    pub c_lo: f64,
    pub c_hi: f64,
    /// Upper bound of `C(T)/diam(T)`, the constant of `C(T) ≤ c·h_T`.
    pub c_over_diameter_hi: f64,
}

/// `C(T)` scales linearly: `C(sT) = s·C(T)`. The apex must lie in the
/// reduced region `Ω₀`.
pub fn cr_constant(shape: &TriangleShape, scale: f64, mesh: &MeshConfig, opts: &SolverOptions) -> Result<ConstantBracket> {
    if !shape.in_reduced_region() {
        let [x, y] = shape.apex();
        return Err(Error::domain(format!("apex ({x}, {y}) outside the reduced region")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(format!("scale must be positive, got {scale}")));
    }
    let p = solve_point(ProblemKind::CrConstant, shape, mesh.cg_n, mesh.cr_n, opts)?;
    let s = Interval::point(scale);
    let c_lo = (s / Interval::point(p.lambda1.upper).sqrt()).lo;
    let c_hi = (s / Interval::point(p.lambda1.lower).sqrt()).hi;
    let diameter = Interval::approx(shape.diameter(), 2) * scale;
    Ok(ConstantBracket {
        apex: shape.apex(),
        scale,
        diameter: diameter.mid(),
        lambda1: p.lambda1,
        c_lo,
        c_hi,
        c_over_diameter_hi: (Interval::point(c_hi) / diameter).hi,
    })
}
