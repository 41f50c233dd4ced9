//! Certificate, ledgers and their file formats.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ProblemKind, ProofConfig};
use crate::bounds::CR_CONSTANT;
use crate::fem::{build_space, Family};
use crate::geometry::{GramTriple, TriangleShape};
use crate::interval::{LIBM_ULPS, REDUCTION_ULPS};
use crate::mesh::uniform_subdivide;
use crate::Result;

/// Bumped on any incompatible change of the JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Proven,
    Failed,
}

/// One subinterval of either step. Step 2 rows leave the derivative
/// columns empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub i: usize,
    #[serde(rename = "θ_lo")]
    pub theta_lo: f64,
    #[serde(rename = "θ_hi")]
    pub theta_hi: f64,
    #[serde(rename = "λ₁_lo")]
    pub lambda1_lo: f64,
    #[serde(rename = "λ₁_hi")]
    pub lambda1_hi: f64,
    #[serde(rename = "λ₂_lo")]
    pub lambda2_lo: f64,
    #[serde(rename = "F_lo")]
    pub f_lo: Option<f64>,
    #[serde(rename = "F_hi")]
    pub f_hi: Option<f64>,
    #[serde(rename = "Err")]
    pub err: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub step2: Vec<LedgerRow>,
    pub step3: Vec<LedgerRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2Summary {
    pub lower_min: f64,
    pub argmin_interval: usize,
    pub equilateral_upper: f64,
    pub equilateral_cg_n: usize,
    /// `lower_min − equilateral_upper`; positive when Step 2 holds.
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplicityEvidence {
    /// Upper bound of `λ₁` over `J`.
    pub lambda1_upper: f64,
    /// Lower bound of `λ₂` over `J`.
    pub lambda2_lower: f64,
    pub holds: bool,
}

/// Point values at `θ = π/3` for the derivative table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilateralPoint {
    pub theta: f64,
    pub f_value: f64,
    pub err: f64,
    pub eta: f64,
    pub gram: GramTriple,
    pub lambda1_h: f64,
    pub rho: f64,
    pub lambda1_lower: f64,
    pub lambda1_upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step3Summary {
    pub f_lo: Option<f64>,
    pub f_hi: Option<f64>,
    pub eta_max: Option<f64>,
    pub eta_monotone: Option<bool>,
    pub simplicity: SimplicityEvidence,
    pub at_pi_3: EquilateralPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DofCounts {
    pub full: usize,
    /// After Dirichlet elimination and edge-mean constraints.
    pub constrained: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub tol: f64,
    pub max_iter: usize,
    pub extra: usize,
    pub seed: u64,
    pub inertia_margin: f64,
    pub stall_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub cg_n: usize,
    pub cr_n: usize,
    pub equilateral_cg_n: usize,
    pub cg_dofs: DofCounts,
    pub cr_dofs: DofCounts,
    pub cr_constant: f64,
    pub epsilon: f64,
    pub n1: usize,
    pub n2: usize,
    pub schedule_provenance: String,
    pub breakpoints: Vec<f64>,
    pub solver: SolverRecord,
    pub libm_ulps: u32,
    pub reduction_ulps: u32,
}

impl Environment {
    pub fn from_config(cfg: &ProofConfig) -> Result<Self> {
        let bc = cfg.problem.boundary_condition();
        let shape = TriangleShape::equilateral();
        let dofs = |n, family| -> Result<DofCounts> {
            let mesh = uniform_subdivide(&shape, n)?;
            let s = build_space(&mesh, family, bc)?;
            Ok(DofCounts {
                full: s.global_count,
                constrained: s.dof_count(),
            })
        };
        Ok(Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            cg_n: cfg.mesh.cg_n,
            cr_n: cfg.mesh.cr_n,
            equilateral_cg_n: cfg.mesh.equilateral_cg_n,
            cg_dofs: dofs(cfg.mesh.cg_n, Family::Cg)?,
            cr_dofs: dofs(cfg.mesh.cr_n, Family::Cr)?,
            cr_constant: CR_CONSTANT,
            epsilon: cfg.epsilon(),
            n1: cfg.schedule.len(),
            n2: cfg.n2,
            schedule_provenance: cfg.schedule.provenance.clone(),
            breakpoints: cfg.schedule.breakpoints.clone(),
            solver: SolverRecord {
                tol: cfg.solver.tol,
                max_iter: cfg.solver.max_iter,
                extra: cfg.solver.extra,
                seed: cfg.solver.seed,
                inertia_margin: cfg.solver.inertia_margin,
                stall_tol: cfg.solver.stall_tol,
            },
            libm_ulps: LIBM_ULPS,
            reduction_ulps: REDUCTION_ULPS,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub problem: ProblemKind,
    pub verdict: Verdict,
    pub failure: Option<String>,
    pub step1: String,
    pub step2: Option<Step2Summary>,
    pub step3: Option<Step3Summary>,
    pub ledger: Ledger,
    pub environment: Environment,
}

const STEP1: &str = "λ₁ of the triangle with base OA and apex (x, y) is decreasing in y \
    for 0 < x ≤ 1/2; it suffices to consider apexes on the unit circle about O, \
    i.e. the triangles T^θ, 0 < θ ≤ π/3";

impl Certificate {
    pub(super) fn new(problem: ProblemKind, environment: Environment) -> Self {
        Certificate {
            schema_version: SCHEMA_VERSION,
            problem,
            verdict: Verdict::Failed,
            failure: None,
            step1: STEP1.to_string(),
            step2: None,
            step3: None,
            ledger: Ledger::default(),
            environment,
        }
    }

    pub(super) fn fail(mut self, reason: String) -> Self {
        self.failure = Some(reason);
        self.verdict = Verdict::Failed;
        self
    }

    /// Sets the verdict from the ledger, recording the first failed step.
    pub(super) fn finalize(&mut self) {
        self.verdict = self.derive_verdict();
        if self.verdict == Verdict::Failed && self.failure.is_none() {
            self.failure = Some(self.diagnose());
        }
    }

    fn diagnose(&self) -> String {
        match (&self.step2, &self.step3) {
            (Some(s2), _) if s2.lower_min <= s2.equilateral_upper => format!(
                "step 2: min lower bound {} on interval {} does not exceed the equilateral upper bound {}",
                s2.lower_min, s2.argmin_interval, s2.equilateral_upper
            ),
            (_, Some(s3)) if !s3.simplicity.holds => "step 3: simplicity not certified".into(),
            (_, Some(s3)) => format!("step 3: derivative range reaches {:?}", s3.f_hi),
            _ => "incomplete".into(),
        }
    }

    /// `proven` iff every step passes, recomputed from the ledger rows and the
    /// equilateral upper bound alone.
    pub fn derive_verdict(&self) -> Verdict {
        let (Some(s2), Some(s3)) = (&self.step2, &self.step3) else {
            return Verdict::Failed;
        };
        let rows2 = &self.ledger.step2;
        let rows3 = &self.ledger.step3;
        if self.failure.is_some() || rows2.is_empty() || rows3.is_empty() {
            return Verdict::Failed;
        }
        let lower_min = rows2.iter().map(|r| r.lambda1_lo).fold(f64::INFINITY, f64::min);
        let step2 = lower_min > s2.equilateral_upper;
        let l1 = rows3.iter().map(|r| r.lambda1_hi).fold(f64::NEG_INFINITY, f64::max);
        let l2 = rows3.iter().map(|r| r.lambda2_lo).fold(f64::INFINITY, f64::min);
        let simple = l1 < l2 && s3.simplicity.holds;
        let derivative = rows3.iter().all(|r| matches!(r.f_hi, Some(f) if f < 0.0));
        if step2 && simple && derivative {
            Verdict::Proven
        } else {
            Verdict::Failed
        }
    }

    pub fn is_proven(&self) -> bool {
        self.verdict == Verdict::Proven
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `<problem>-certificate.json`, `<problem>-ledger-step2.csv` and
    /// `<problem>-ledger-step3.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let name = self.problem.name();
        let json = dir.join(format!("{name}-certificate.json"));
        let mut f = std::fs::File::create(&json)?;
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        let mut out = vec![json];
        for (step, rows) in [("step2", &self.ledger.step2), ("step3", &self.ledger.step3)] {
            let p = dir.join(format!("{name}-ledger-{step}.csv"));
            write_ledger_csv(std::fs::File::create(&p)?, rows)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// CSV with header `i,θ_lo,θ_hi,λ₁_lo,λ₁_hi,λ₂_lo,F_lo,F_hi,Err`; floats
/// in shortest round-trip form, missing values empty.
pub fn write_ledger_csv<W: Write>(w: W, rows: &[LedgerRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(["i", "θ_lo", "θ_hi", "λ₁_lo", "λ₁_hi", "λ₂_lo", "F_lo", "F_hi", "Err"])?;
    }
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "θ")]
    pub theta: f64,
    #[serde(rename = "λ₁_lo")]
    pub lambda1_lo: f64,
    #[serde(rename = "λ₁_hi")]
    pub lambda1_hi: f64,
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(["θ", "λ₁_lo", "λ₁_hi"])?;
    }
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
