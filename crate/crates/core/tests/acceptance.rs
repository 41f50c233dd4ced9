//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria marked `known` are out of reach of this discretization (see the
//! README); they are still evaluated with their stated tolerance and
//! reported as FAIL, but do not abort the run. Any other failure does.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::time::{Duration, Instant};

use tricert::bounds::{self, eta, f_of, EigBracket};
use tricert::certify::{run_proof, solve_point, Certificate, ProblemKind, ProofConfig};
use tricert::eigsolve::{dense_spectrum, solve_lowest, SolverOptions};
use tricert::fem::{assemble, build_space, BoundaryCondition, Family};
use tricert::geometry::{map_between, map_derivative_gram, GramTriple, TriangleShape};
use tricert::mesh::uniform_subdivide;

const KNOWN: &[&str] = &["1a", "2a", "2b"];

#[derive(Default)]
struct Report {
    unexpected: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, what: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let known = if !pass && KNOWN.contains(&id) { " (known)" } else { "" };
        println!("{tag} [{id}] {what}: {detail}{known}");
        if !pass && !KNOWN.contains(&id) {
            self.unexpected.push(id.to_string());
        }
    }
}

fn equilateral_bracket(problem: ProblemKind) -> (EigBracket, Duration) {
    let t = Instant::now();
    let p = solve_point(problem, &TriangleShape::equilateral(), 96, 64, &SolverOptions::default()).unwrap();
    (p.lambda1, t.elapsed())
}

fn criterion_1(r: &mut Report) {
    let (b, dt) = equilateral_bracket(ProblemKind::Dirichlet);
    let exact = 16.0 * PI * PI / 3.0;
    let s = format!("[{:.5}, {:.5}]", b.lower, b.upper);
    r.check("1a", "Dirichlet λ₁(π/3) upper ≤ 52.641", b.upper <= 52.641, s.clone());
    r.check("1b", "Dirichlet bracket contains 16π²/3", b.contains(exact), format!("{s} ∋ {exact:.5}"));
    r.check("1c", "Dirichlet bracket width ≤ 0.1", b.width() <= 0.1, format!("{:.5}", b.width()));
    r.check("1d", "Dirichlet bracket runtime ≤ 2 min", dt.as_secs_f64() <= 120.0, format!("{dt:.1?}"));
}

fn criterion_2(r: &mut Report) {
    let (b, dt) = equilateral_bracket(ProblemKind::CrConstant);
    let (c_lo, c_hi) = (1.0 / b.upper.sqrt(), 1.0 / b.lower.sqrt());
    let s = format!("[{:.5}, {:.5}]", b.lower, b.upper);
    let c = format!("C ∈ [{c_lo:.6}, {c_hi:.6}]");
    r.check("2a", "V_e λ₁(π/3) upper ≤ 27.945", b.upper <= 27.945, s.clone());
    r.check("2b", "C(T) bracket contains 0.18926", c_lo <= 0.18926 && 0.18926 <= c_hi, c.clone());
    r.check("2c", "C(T) bracket below 0.1893", c_hi < 0.1893, c);
    r.check("2d", "V_e bracket width ≤ 0.1", b.width() <= 0.1, format!("{:.5}", b.width()));
    r.check("2e", "V_e bracket runtime ≤ 2 min", dt.as_secs_f64() <= 120.0, format!("{dt:.1?}"));
}

fn run(cfg: &ProofConfig) -> (Certificate, Duration) {
    let t = Instant::now();
    let c = run_proof(cfg).unwrap();
    let dt = t.elapsed();
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let sub = if cfg.mesh.cg_n == 96 { "paper" } else { "quick" };
    c.write_files(&dir.join(sub)).unwrap();
    (c, dt)
}

fn ledger_consistent(c: &Certificate) -> bool {
    let rows = &c.ledger.step2;
    rows.len() == c.environment.n1
        && rows.iter().enumerate().all(|(k, r)| r.i == k + 1 && r.lambda1_lo <= r.lambda1_hi && r.theta_lo < r.theta_hi)
        && c.verdict == c.derive_verdict()
}

fn criterion_3(r: &mut Report, paper: &[(ProblemKind, Certificate, Duration)]) {
    for (p, c, dt) in paper {
        let (id, quoted) = match p {
            ProblemKind::Dirichlet => ("3a", 52.654),
            ProblemKind::CrConstant => ("3b", 27.949),
        };
        let Some(s2) = c.step2 else {
            r.check(id, &format!("{} Algorithm 1", p.name()), false, format!("{:?}", c.failure));
            continue;
        };
        r.check(
            id,
            &format!("{} min λ̲₁ ≥ {quoted} − 0.01 and > λ₁(π/3) upper", p.name()),
            s2.lower_min >= quoted - 0.01 && s2.lower_min > s2.equilateral_upper,
            format!(
                "{:.5} (interval {}) vs upper {:.5} [CG N={}], {dt:.0?}",
                s2.lower_min, s2.argmin_interval, s2.equilateral_upper, s2.equilateral_cg_n
            ),
        );
    }
    for (problem, id) in [(ProblemKind::Dirichlet, "3c"), (ProblemKind::CrConstant, "3d")] {
        let (c, dt) = run(&ProofConfig::quick(problem));
        r.check(
            id,
            &format!("{} --quick ≤ 5 min with consistent ledger", problem.name()),
            dt.as_secs_f64() <= 300.0 && ledger_consistent(&c),
            format!("{dt:.1?}, {} rows, verdict {:?}", c.ledger.step2.len(), c.verdict),
        );
    }
}

fn within_pct(x: f64, target: f64, pct: f64) -> bool {
    (x - target).abs() <= pct * target.abs()
}

fn criterion_4(r: &mut Report, paper: &[(ProblemKind, Certificate, Duration)]) {
    for (p, c, _) in paper {
        let (id, lo, hi, f0, g0) = match p {
            ProblemKind::Dirichlet => ("4a", -42.461, -18.610, -30.401, 26.328),
            ProblemKind::CrConstant => ("4b", -20.536, -11.711, -16.134, 13.973),
        };
        let Some(s3) = c.step3 else {
            r.check(id, &format!("{} Algorithm 2", p.name()), false, format!("{:?}", c.failure));
            continue;
        };
        let (f_lo, f_hi) = (s3.f_lo.unwrap_or(f64::NAN), s3.f_hi.unwrap_or(f64::NAN));
        r.check(
            id,
            &format!("{} F hull within ±5% of [{lo}, {hi}], F_hi < 0", p.name()),
            within_pct(f_lo, lo, 0.05) && within_pct(f_hi, hi, 0.05) && f_hi < 0.0,
            format!("[{f_lo:.3}, {f_hi:.3}]"),
        );
        let e = s3.at_pi_3;
        r.check(
            &format!("{id}.1"),
            &format!("{} F(u_h^(π/3)) = {f0} ± 0.05", p.name()),
            (e.f_value - f0).abs() <= 0.05,
            format!("{:.4} (Err {:.3}, η {:.4})", e.f_value, e.err, e.eta),
        );
        r.check(
            &format!("{id}.2"),
            &format!("{} gram diagonals {g0} ± 0.05, |cross| ≤ 1e-8", p.name()),
            (e.gram.xx - g0).abs() <= 0.05 && (e.gram.yy - g0).abs() <= 0.05 && e.gram.xy.abs() <= 1e-8,
            format!("({:.4}, {:.2e}, {:.4})", e.gram.xx, e.gram.xy, e.gram.yy),
        );
    }
}

fn criterion_5(r: &mut Report, paper: &[(ProblemKind, Certificate, Duration)]) {
    let Some((_, c, _)) = paper.iter().find(|(p, _, _)| *p == ProblemKind::CrConstant) else { return };
    let Some(s3) = c.step3 else {
        r.check("5", "V_e simplicity over J", false, format!("{:?}", c.failure));
        return;
    };
    let s = s3.simplicity;
    r.check(
        "5",
        "V_e over J: λ₁ ≤ 28.069 + 0.01, λ₂ ≥ 45.011 − 0.05, disjoint",
        s.lambda1_upper <= 28.079 && s.lambda2_lower >= 44.961 && s.holds,
        format!("λ₁ ≤ {:.4}, λ₂ ≥ {:.4}", s.lambda1_upper, s.lambda2_lower),
    );
}

fn ops(apex: [f64; 2], n: usize, family: Family, bc: BoundaryCondition) -> tricert::fem::DiscreteOperators {
    let shape = TriangleShape::from_apex(apex).unwrap();
    assemble(&build_space(&uniform_subdivide(&shape, n).unwrap(), family, bc).unwrap()).unwrap()
}

const APEXES: [[f64; 2]; 4] = [[0.5, 0.866], [0.6, 0.3], [0.9, 0.4], [0.75, 0.6]];

fn criterion_6(r: &mut Report) {
    let cases = || {
        APEXES.into_iter().flat_map(|a| {
            [Family::Cg, Family::Cr].into_iter().flat_map(move |f| {
                [BoundaryCondition::Dirichlet, BoundaryCondition::EdgeMean]
                    .into_iter()
                    .map(move |b| (a, f, b))
            })
        })
    };

    let mut worst: f64 = 0.0;
    for (a, f, b) in cases() {
        for n in 3..=6 {
            let o = ops(a, n, f, b);
            let d = dense_spectrum(&o).unwrap();
            let e = solve_lowest(&o.pencil(), 2.min(o.pencil().dim()), &SolverOptions::default()).unwrap();
            for (x, y) in e.iter().zip(&d) {
                worst = worst.max((x.rayleigh - y).abs() / y.abs());
            }
        }
    }
    r.check("6a", "dense vs sparse eigenvalues, N ≤ 6, ≤ 1e-10 relative", worst <= 1e-10, format!("{worst:.2e}"));

    let mut worst: f64 = 0.0;
    for (a, f, b) in cases() {
        let o = ops(a, 5, f, b);
        let diff = o.stiffness.to_dense() - o.kxx.to_dense() - o.kyy.to_dense();
        worst = worst.max(diff.amax() / o.stiffness.to_dense().amax());
    }
    r.check("6b", "A = Kxx + Kyy, ≤ 1e-13 relative", worst <= 1e-13, format!("{worst:.2e}"));

    let mut worst: f64 = 0.0;
    for f in [Family::Cg, Family::Cr] {
        for (t, tt) in [(0.4, 1.0), (1.0, 0.7), (FRAC_PI_3, 0.9)] {
            let (ta, tb) = (TriangleShape::from_angle(t).unwrap(), TriangleShape::from_angle(tt).unwrap());
            let a = ops(ta.apex(), 4, f, BoundaryCondition::EdgeMean);
            let b = ops(tb.apex(), 4, f, BoundaryCondition::EdgeMean);
            let m = map_between(t, tt).unwrap();
            let u: Vec<f64> = (0..a.unknown_count()).map(|i| ((i * 7919) % 97) as f64 / 97.0 - 0.5).collect();
            let want = map_derivative_gram(a.gram(&u), m.alpha, m.beta).unwrap();
            let got = b.gram(&u);
            let scale = got.trace().max(1.0);
            worst = worst
                .max((want.xx - got.xx).abs() / scale)
                .max((want.xy - got.xy).abs() / scale)
                .max((want.yy - got.yy).abs() / scale)
                .max((b.mass_norm_sq(&u) - m.beta * a.mass_norm_sq(&u)).abs() / b.mass_norm_sq(&u));
        }
    }
    r.check("6c", "affine equivariance of assembly, ≤ 1e-12", worst <= 1e-12, format!("{worst:.2e}"));

    let (theta, d) = (FRAC_PI_3 - 0.05, 1e-4);
    for problem in [ProblemKind::Dirichlet, ProblemKind::CrConstant] {
        let at = |t: f64| {
            let o = ops(TriangleShape::from_angle(t).unwrap().apex(), 64, Family::Cg, problem.boundary_condition());
            let e = solve_lowest(&o.pencil(), 1, &SolverOptions { verify_index: false, ..Default::default() }).unwrap();
            (e[0].rayleigh, f_of(o.gram(&e[0].vector), t, o.mass_norm_sq(&e[0].vector)).unwrap())
        };
        let (_, f) = at(theta);
        let fd = (at(theta + d).0 - at(theta - d).0) / (2.0 * d);
        let rel = (fd - f).abs() / f.abs();
        r.check(
            "6d",
            &format!("{} finite difference vs F(u_h), ≤ 1e-2 relative", problem.name()),
            rel <= 1e-2,
            format!("fd {fd:.4}, F {f:.4}, rel {rel:.1e}"),
        );
    }

    let g = GramTriple::new(3.0, 0.0, 0.0).unwrap();
    let trivial = eta(52.0, 52.0, 121.0).unwrap() == 0.0
        && bounds::err_bound(52.0, 52.0, 121.0, FRAC_PI_3).unwrap() == 0.0
        && f_of(g, 1.0, 1.0).unwrap() == 0.0;
    let dir_eta = eta(52.5996, 52.656, 122.613).unwrap();
    let dir_box = bounds::eta_range(
        tricert::Interval::new(52.0, 55.0),
        tricert::Interval::new(52.0, 55.0),
        tricert::Interval::new(121.0, 123.0),
    )
    .unwrap();
    let mut sampled: f64 = 0.0;
    for i in 0..=20 {
        for j in i..=20 {
            for c in [121.0, 122.0, 123.0] {
                let (a, b) = (52.0 + 0.15 * i as f64, 52.0 + 0.15 * j as f64);
                sampled = sampled.max(eta(a, b, c).unwrap());
            }
        }
    }
    r.check(
        "6e",
        "η/F/Err trivial cases and box monotonicity",
        trivial && dir_eta < 0.3163 && dir_box.monotone && sampled <= dir_box.value,
        format!("η(π/3) {dir_eta:.4}, box {:.4} ≥ sampled {sampled:.4}", dir_box.value),
    );

    let p = solve_point(
        ProblemKind::Dirichlet,
        &TriangleShape::from_angle(FRAC_PI_2).unwrap(),
        64,
        64,
        &SolverOptions::default(),
    )
    .unwrap();
    r.check(
        "6f",
        "right isosceles 5π² inside Dirichlet bracket, N = 64",
        p.lambda1.contains(5.0 * PI * PI),
        format!("[{:.5}, {:.5}] ∋ {:.5}", p.lambda1.lower, p.lambda1.upper, 5.0 * PI * PI),
    );
}

fn main() {
    let mut r = Report::default();
    criterion_1(&mut r);
    criterion_2(&mut r);
    let paper: Vec<_> = [ProblemKind::Dirichlet, ProblemKind::CrConstant]
        .into_iter()
        .map(|p| {
            let (c, dt) = run(&ProofConfig::paper(p));
            println!("     {} paper run: verdict {:?} in {dt:.0?}", p.name(), c.verdict);
            (p, c, dt)
        })
        .collect();
    criterion_3(&mut r, &paper);
    criterion_4(&mut r, &paper);
    criterion_5(&mut r, &paper);
    criterion_6(&mut r);
    if !r.unexpected.is_empty() {
        eprintln!("failed criteria: {:?}", r.unexpected);
        std::process::exit(1);
    }
}
