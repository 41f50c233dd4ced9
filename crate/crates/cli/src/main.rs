//! `tricert`: run the certification proofs, sweep `λ₁(θ)`, and bracket the
//! Crouzeix–Raviart interpolation constant.
//!
//! Exit status: 0 proven (or command succeeded), 1 proof failed or numerical
//! abort, 2 invalid configuration.

use std::f64::consts::{FRAC_PI_3, PI};
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tricert::certify::{self, MeshConfig, ProblemKind, ProofConfig, Schedule};
use tricert::eigsolve::SolverOptions;
use tricert::fem::{assemble, build_space, Family};
use tricert::geometry::TriangleShape;
use tricert::mesh::uniform_subdivide;

#[derive(Parser)]
#[command(name = "tricert", version, about = "Certified eigenvalue bounds on triangles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the three-step proof and write certificate + ledgers.
    Prove(ProveArgs),
    /// Bracket λ₁(T^θ) at a list or range of angles.
    Sweep(SweepArgs),
    /// Bracket the interpolation constant C(T) of one triangle.
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct MeshArgs {
    /// Conforming subdivision number (default 96; 32 with --quick).
    #[arg(long)]
    cg_n: Option<usize>,
    /// Crouzeix–Raviart subdivision number (default 64; 32 with --quick).
    #[arg(long)]
    cr_n: Option<usize>,
    /// Desk-scale preset.
    #[arg(long)]
    quick: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for the iterative solver's start vectors.
    #[arg(long)]
    seed: Option<u64>,
}

impl MeshArgs {
    fn mesh(&self) -> MeshConfig {
        let mut m = if self.quick { MeshConfig::quick() } else { MeshConfig::default() };
        if let Some(n) = self.cg_n {
            m.cg_n = n;
        }
        if let Some(n) = self.cr_n {
            m.cr_n = n;
        }
        m
    }

    fn solver(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(s) = self.seed {
            o.seed = s;
        }
        o
    }
}

#[derive(Args)]
struct ProveArgs {
    #[arg(long, value_parser = parse_problem)]
    problem: ProblemKind,
    #[command(flatten)]
    mesh: MeshArgs,
    /// Conforming subdivision for the upper bound at π/3 (default 256; 64 with --quick).
    #[arg(long)]
    equilateral_cg_n: Option<usize>,
    /// Width of J = [π/3 − ε, π/3]; cuts the schedule accordingly.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of subintervals of J.
    #[arg(long)]
    n2: Option<usize>,
    /// `paper` or a file of breakpoints.
    #[arg(long, default_value = "paper")]
    schedule: String,
    /// Published meshes, schedules and N₂ (the default unless --quick).
    #[arg(long, conflicts_with = "quick")]
    paper_config: bool,
    /// Output directory.
    #[arg(long, default_value = "tricert-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_problem)]
    problem: ProblemKind,
    #[command(flatten)]
    mesh: MeshArgs,
    /// Comma-separated angles (radians; `pi/3`-style accepted).
    #[arg(long, value_delimiter = ',', value_parser = parse_angle, conflicts_with_all = ["from", "to"])]
    thetas: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_angle, requires = "to")]
    from: Option<f64>,
    #[arg(long, value_parser = parse_angle, requires = "from")]
    to: Option<f64>,
    /// Number of equally spaced angles in [from, to].
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Output directory; CSV to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    /// Angle of T^θ.
    #[arg(long, value_parser = parse_angle, conflicts_with = "apex", required_unless_present = "apex")]
    theta: Option<f64>,
    /// Apex `x,y` in the reduced region.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    apex: Option<Vec<f64>>,
    /// Homothety factor applied to the triangle.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Output directory; JSON to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write both meshes as JSON into this directory.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    /// Also write the assembled matrices (coordinate format) into this directory.
    #[arg(long)]
    dump_matrices: Option<PathBuf>,
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    s.parse().map_err(|e: tricert::Error| e.to_string())
}

/// Radians, or `[a*]pi[/b]`.
fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let Some((pre, post)) = t.split_once("pi") else {
        return Err(format!("cannot parse angle {s:?}"));
    };
    let num = match pre.trim_end_matches('*') {
        "" => 1.0,
        a => a.parse::<f64>().map_err(|_| format!("bad factor in {s:?}"))?,
    };
    let den = match post.strip_prefix('/') {
        None if post.is_empty() => 1.0,
        Some(b) => b.parse::<f64>().map_err(|_| format!("bad divisor in {s:?}"))?,
        None => return Err(format!("cannot parse angle {s:?}")),
    };
    Ok(num * PI / den)
}

/// Invalid configuration: exit 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: impl std::fmt::Display) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

fn set_jobs(jobs: Option<usize>) -> anyhow::Result<()> {
    let Some(j) = jobs else { return Ok(()) };
    if j == 0 {
        return Err(config_err("--jobs must be positive"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(j)
        .build_global()
        .map_err(|e| anyhow::anyhow!("configuring the thread pool: {e}"))?;
    Ok(())
}

fn proof_config(a: &ProveArgs) -> anyhow::Result<ProofConfig> {
    let mut cfg = if a.mesh.quick {
        ProofConfig::quick(a.problem)
    } else {
        ProofConfig::paper(a.problem)
    };
    cfg.mesh = a.mesh.mesh();
    if let Some(n) = a.equilateral_cg_n {
        cfg.mesh.equilateral_cg_n = n;
    }
    cfg.solver = a.mesh.solver();
    if a.schedule != "paper" {
        cfg.schedule = Schedule::from_file(Path::new(&a.schedule)).map_err(config_err)?;
    }
    if let Some(eps) = a.epsilon {
        cfg.schedule = cfg.schedule.with_epsilon(eps).map_err(config_err)?;
    }
    if let Some(n2) = a.n2 {
        cfg.n2 = n2;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn prove(a: ProveArgs) -> anyhow::Result<ExitCode> {
    let cfg = proof_config(&a)?;
    set_jobs(a.mesh.jobs)?;
    let cert = certify::run_proof_with(&cfg, |msg| eprintln!("{msg}")).map_err(config_err)?;
    let files = cert.write_files(&a.out)?;
    if let Some(s2) = &cert.step2 {
        println!(
            "step 2: λ₁ ≥ {:.6} on I (interval {}), λ₁(π/3) ≤ {:.6}, margin {:.6}",
            s2.lower_min, s2.argmin_interval, s2.equilateral_upper, s2.margin
        );
    }
    if let Some(s3) = &cert.step3 {
        println!(
            "step 3: λ₁ ≤ {:.6} < {:.6} ≤ λ₂ on J; dλ₁/dθ ∈ [{}, {}]",
            s3.simplicity.lambda1_upper,
            s3.simplicity.lambda2_lower,
            fmt_opt(s3.f_lo),
            fmt_opt(s3.f_hi)
        );
    }
    for f in &files {
        println!("wrote {}", f.display());
    }
    if cert.is_proven() {
        println!("verdict: proven");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verdict: failed ({})", cert.failure.as_deref().unwrap_or("unknown"));
        Ok(ExitCode::from(1))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let thetas = match (&a.thetas, a.from, a.to) {
        (Some(t), _, _) => t.clone(),
        (None, Some(lo), Some(hi)) => {
            if a.points < 2 || !(lo < hi) {
                return Err(config_err("need --points ≥ 2 and --from < --to"));
            }
            let h = (hi - lo) / (a.points - 1) as f64;
            (0..a.points)
                .map(|i| if i + 1 == a.points { hi } else { lo + i as f64 * h })
                .collect()
        }
        _ => Vec::new(),
    };
    if let Some(t) = thetas.iter().find(|&&t| !(t > 0.0 && t <= FRAC_PI_3 * (1.0 + 1e-15))) {
        return Err(config_err(format!("angle {t} outside (0, π/3]")));
    }
    // `pi/3` parses to the nearest double either way; clamp the slack
    let thetas: Vec<f64> = thetas.into_iter().map(|t| t.min(FRAC_PI_3)).collect();
    let mesh = a.mesh.mesh();
    mesh.validate().map_err(config_err)?;
    set_jobs(a.mesh.jobs)?;
    let rows = certify::sweep(a.problem, &thetas, &mesh, &a.mesh.solver(), Default::default())?;
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let p = dir.join(format!("{}-sweep.csv", a.problem.name()));
            certify::write_sweep_csv(BufWriter::new(File::create(&p)?), &rows)?;
            println!("wrote {}", p.display());
        }
        None => certify::write_sweep_csv(io::stdout().lock(), &rows)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn constants(a: ConstantsArgs) -> anyhow::Result<ExitCode> {
    let shape = match (a.theta, &a.apex) {
        (Some(t), _) => TriangleShape::from_angle(t),
        (None, Some(p)) => TriangleShape::from_apex([p[0], p[1]]),
        _ => unreachable!("clap requires one of --theta, --apex"),
    }
    .map_err(config_err)?;
    if !shape.in_reduced_region() {
        return Err(config_err(format!(
            "apex ({}, {}) outside the reduced region",
            shape.apex()[0],
            shape.apex()[1]
        )));
    }
    if !(a.scale.is_finite() && a.scale > 0.0) {
        return Err(config_err("--scale must be positive"));
    }
    let mesh = a.mesh.mesh();
    mesh.validate().map_err(config_err)?;
    set_jobs(a.mesh.jobs)?;
    dump(&shape, &mesh, a.dump_mesh.as_deref(), a.dump_matrices.as_deref())?;
    let c = certify::cr_constant(&shape, a.scale, &mesh, &a.mesh.solver())?;
    let json = serde_json::to_string_pretty(&c)?;
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let p = dir.join("constants.json");
            std::fs::write(&p, json + "\n")?;
            println!("wrote {}", p.display());
        }
        None => println!("{json}"),
    }
    eprintln!("C(T) ∈ [{:.8}, {:.8}]", c.c_lo, c.c_hi);
    Ok(ExitCode::SUCCESS)
}

fn dump(shape: &TriangleShape, mesh: &MeshConfig, meshes: Option<&Path>, matrices: Option<&Path>) -> anyhow::Result<()> {
    if meshes.is_none() && matrices.is_none() {
        return Ok(());
    }
    let bc = ProblemKind::CrConstant.boundary_condition();
    for (family, n, name) in [(Family::Cg, mesh.cg_n, "cg"), (Family::Cr, mesh.cr_n, "cr")] {
        let m = uniform_subdivide(shape, n)?;
        if let Some(dir) = meshes {
            std::fs::create_dir_all(dir)?;
            m.write_json(BufWriter::new(File::create(dir.join(format!("{name}-mesh.json")))?))?;
        }
        if let Some(dir) = matrices {
            std::fs::create_dir_all(dir)?;
            assemble(&build_space(&m, family, bc)?)?.write_coordinate(dir, name)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prove(a) => prove(a),
        Command::Sweep(a) => sweep(a),
        Command::Constants(a) => constants(a),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.is::<ConfigError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
