//! Randomized structural properties of assembly, solver and bound formulas.

use proptest::prelude::*;
use tricert::bounds::{eta, eta_range, f_of};
use tricert::eigsolve::{dense_spectrum, solve_lowest, SolverOptions};
use tricert::fem::{assemble, build_space, BoundaryCondition, DiscreteOperators, Family};
use tricert::geometry::{
    map_between_shapes, map_derivative_gram, perturbation_factors_over, GramTriple, TriangleShape,
};
use tricert::mesh::uniform_subdivide;
use tricert::Interval;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Cg), Just(Family::Cr)]
}

fn bc() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![Just(BoundaryCondition::Dirichlet), Just(BoundaryCondition::EdgeMean)]
}

/// Apex in the reduced region.
fn apex() -> impl Strategy<Value = [f64; 2]> {
    (0.5f64..0.98, 0.05f64..1.0).prop_map(|(x, t)| {
        let ymax = (1.0 - x * x).sqrt();
        [x, 0.05 + t * (ymax - 0.05).max(0.0)]
    })
}

fn ops(apex: [f64; 2], n: usize, family: Family, bc: BoundaryCondition) -> Option<DiscreteOperators> {
    let shape = TriangleShape::from_apex(apex).ok()?;
    let mesh = uniform_subdivide(&shape, n).ok()?;
    let space = build_space(&mesh, family, bc).ok()?;
    assemble(&space).ok()
}

fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stiffness_is_sum_of_derivative_parts(a in apex(), n in 1usize..9, f in family(), b in bc()) {
        let Some(o) = ops(a, n, f, b) else { return Ok(()) };
        let diff = o.stiffness.to_dense() - (o.kxx.to_dense() + o.kyy.to_dense());
        prop_assert!(max_abs(&diff) <= 1e-13 * max_abs(&o.stiffness.to_dense()));
    }

    #[test]
    fn assembly_is_affine_equivariant(a in apex(), t in apex(), n in 1usize..6, f in family(),
                                      seed in any::<u64>()) {
        let (Some(src), Some(dst)) = (ops(a, n, f, BoundaryCondition::EdgeMean),
                                      ops(t, n, f, BoundaryCondition::EdgeMean)) else { return Ok(()) };
        let map = map_between_shapes(&TriangleShape::from_apex(a).unwrap(), &TriangleShape::from_apex(t).unwrap());
        let mut s = seed;
        let u: Vec<f64> = (0..src.unknown_count()).map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }).collect();
        let g = src.gram(&u);
        let want = map_derivative_gram(g, map.alpha, map.beta).unwrap();
        let got = dst.gram(&u);
        let scale = 1.0 + g.trace() * (1.0 + map.alpha.abs()).powi(2) / map.beta.min(1.0);
        prop_assert!((want.xx - got.xx).abs() <= 1e-12 * scale);
        prop_assert!((want.xy - got.xy).abs() <= 1e-12 * scale);
        prop_assert!((want.yy - got.yy).abs() <= 1e-12 * scale);
        // L² norms scale with the Jacobian
        let m0 = src.mass_norm_sq(&u);
        prop_assert!((dst.mass_norm_sq(&u) - map.beta * m0).abs() <= 1e-12 * (1.0 + map.beta) * m0.max(1.0));
    }

    #[test]
    fn sparse_solver_matches_dense(a in apex(), n in 2usize..7, f in family(), b in bc()) {
        let Some(o) = ops(a, n, f, b) else { return Ok(()) };
        let dense = dense_spectrum(&o).unwrap();
        let count = dense.len().min(2);
        if count == 0 { return Ok(()) }
        let e = solve_lowest(&o.pencil(), count, &SolverOptions { verify_index: false, ..Default::default() }).unwrap();
        for (x, d) in e.iter().zip(&dense) {
            prop_assert!((x.rayleigh - d).abs() <= 1e-10 * d.abs(), "{} vs {}", x.rayleigh, d);
        }
    }

    #[test]
    fn discrete_eigenvalue_follows_perturbation_factors(theta in 0.3f64..1.0, d in 0.0f64..0.04) {
        // CG eigenvalues on mapped meshes obey the same Rayleigh-quotient
        // comparison as the continuous ones
        let (lo, hi) = (theta, (theta + d).min(std::f64::consts::FRAC_PI_3));
        let f = perturbation_factors_over(theta, lo, hi).unwrap();
        let at = |t: f64| {
            let shape = TriangleShape::from_angle(t).unwrap();
            let o = assemble(&build_space(&uniform_subdivide(&shape, 6).unwrap(), Family::Cg,
                                          BoundaryCondition::Dirichlet).unwrap()).unwrap();
            dense_spectrum(&o).unwrap()[0]
        };
        let l0 = at(theta);
        for t in [lo, hi, 0.5 * (lo + hi)] {
            let l = at(t);
            prop_assert!(f.low * l0 <= l * (1.0 + 1e-12) && l <= f.high * l0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn f_is_sign_and_scale_invariant(xx in 0.1f64..50.0, yy in 0.1f64..50.0, r in -0.9f64..0.9,
                                     mass in 0.5f64..2.0, s in 0.1f64..10.0, theta in 0.2f64..1.0) {
        let xy = r * (xx * yy).sqrt();
        let g = GramTriple::new(xx, xy, yy).unwrap();
        let f0 = f_of(g, theta, mass).unwrap();
        // u ↦ s·u scales every quadratic quantity by s²; u ↦ −u leaves them
        let f1 = f_of(g.scaled(s * s), theta, s * s * mass).unwrap();
        prop_assert!((f0 - f1).abs() <= 1e-12 * (1.0 + f0.abs()));
    }

    #[test]
    fn eta_range_dominates_interior_samples(a0 in 50.0f64..54.0, wa in 0.0f64..1.0, wb in 0.0f64..1.0,
                                            c0 in 120.0f64..123.0, ta in 0.0f64..1.0, tb in 0.0f64..1.0) {
        let a = Interval::new(a0, a0 + wa);
        let b = Interval::new(a.hi, a.hi + wb);
        let c = Interval::new(c0, c0 + 1.0);
        let r = eta_range(a, b, c).unwrap();
        let (sa, sb) = (a.lo + ta * a.width(), b.lo + tb * b.width());
        let sb = sb.max(sa);
        for sc in [c.lo, c.mid(), c.hi] {
            prop_assert!(eta(sa, sb, sc).unwrap() <= r.value * (1.0 + 1e-12));
        }
    }
}
