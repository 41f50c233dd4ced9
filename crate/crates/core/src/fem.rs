//! Conforming P1 (`CG`) and Crouzeix–Raviart (`CR`) spaces on a uniform mesh
//! and the assembly of their stiffness, mass and first-derivative matrices.
//!
//! Two boundary conditions are supported:
//!
//! - `Dirichlet`: CG drops the boundary nodes, CR drops the boundary edges
//!   (a CR function has zero mean on an edge iff its midpoint value is zero).
//! - `EdgeMean`: every function has zero mean on each of the three parent
//!   edges. These are three linear constraints on the full space; they are
//!   kept as explicit rows and, where a reduced basis is needed, eliminated
//!   through an explicit null-space basis `Z` (`ZᵀKZ`).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::geometry::GramTriple;
use crate::mesh::{Mesh, ParentEdge};
use crate::sparse::{dot_compensated, SymCsr};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Cg,
    Cr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Dirichlet,
    EdgeMean,
}

/// `Σ_k c_k u_k = 0` over unknown indices: the integral of `u` over a parent edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constraint {
    pub parent: ParentEdge,
    pub entries: Vec<(usize, f64)>,
}

impl Constraint {
    pub fn apply(&self, u: &[f64]) -> f64 {
        self.entries.iter().map(|&(k, c)| c * u[k]).sum()
    }
}

#[derive(Clone, Debug)]
pub struct FemSpace<'m> {
    pub mesh: &'m Mesh,
    pub family: Family,
    pub bc: BoundaryCondition,
    /// Nodes (CG) or edges (CR) of the mesh.
    pub global_count: usize,
    /// Unknown index → global degree of freedom.
    pub free: Vec<usize>,
    pub constraints: Vec<Constraint>,
}

impl FemSpace<'_> {
    /// Number of unknowns before the edge-mean constraints.
    pub fn unknown_count(&self) -> usize {
        self.free.len()
    }

    /// Dimension of the discrete space.
    pub fn dof_count(&self) -> usize {
        self.free.len() - self.constraints.len()
    }
}

pub fn build_space(mesh: &Mesh, family: Family, bc: BoundaryCondition) -> Result<FemSpace<'_>> {
    let global_count = match family {
        Family::Cg => mesh.node_count(),
        Family::Cr => mesh.edge_count(),
    };
    let free: Vec<usize> = match (family, bc) {
        (_, BoundaryCondition::EdgeMean) => (0..global_count).collect(),
        (Family::Cg, BoundaryCondition::Dirichlet) => (0..global_count)
            .filter(|&v| !mesh.is_boundary_node(v))
            .collect(),
        (Family::Cr, BoundaryCondition::Dirichlet) => (0..global_count)
            .filter(|&e| mesh.edges[e].boundary.is_none())
            .collect(),
    };

    let constraints = match bc {
        BoundaryCondition::Dirichlet => Vec::new(),
        BoundaryCondition::EdgeMean => ParentEdge::ALL
            .iter()
            .map(|&parent| {
                let mut coeff: BTreeMap<usize, f64> = BTreeMap::new();
                for e in mesh.boundary_edges(parent) {
                    let len = mesh.edge_length(e);
                    match family {
                        // trapezoid rule, exact on linear traces
                        Family::Cg => {
                            for v in mesh.edges[e].nodes {
                                *coeff.entry(v).or_default() += 0.5 * len;
                            }
                        }
                        // midpoint value times length, exact on linear traces
                        Family::Cr => *coeff.entry(e).or_default() += len,
                    }
                }
                Constraint {
                    parent,
                    entries: coeff.into_iter().collect(),
                }
            })
            .collect(),
    };

    let space = FemSpace {
        mesh,
        family,
        bc,
        global_count,
        free,
        constraints,
    };
    if space.free.len() <= space.constraints.len() {
        return Err(Error::EmptySpace(format!(
            "{family:?}/{bc:?} on an N = {} mesh has no degrees of freedom",
            mesh.n
        )));
    }
    Ok(space)
}

/// Stiffness, mass and the three first-derivative Gram matrices of a space.
///
/// `kxy` holds the symmetric part of `(u_x, v_y)`; only its quadratic form
/// `(u_x, u_y)` is ever used.
#[derive(Clone, Debug)]
pub struct DiscreteOperators {
    pub family: Family,
    pub bc: BoundaryCondition,
    /// Longest element edge.
    pub h: f64,
    pub global_count: usize,
    pub free: Vec<usize>,
    pub constraints: Vec<Constraint>,
    pub stiffness: SymCsr,
    pub mass: SymCsr,
    pub kxx: SymCsr,
    pub kxy: SymCsr,
    pub kyy: SymCsr,
}

struct ElementMatrices {
    dofs: [usize; 3],
    stiffness: [[f64; 3]; 3],
    mass: [[f64; 3]; 3],
    kxx: [[f64; 3]; 3],
    kxy: [[f64; 3]; 3],
    kyy: [[f64; 3]; 3],
}

fn element_matrices(mesh: &Mesh, family: Family, e: usize) -> Result<ElementMatrices> {
    let area = mesh.signed_area(e);
    if !(area > 0.0) {
        return Err(Error::DegenerateElement { element: e, area });
    }
    let p = mesh.elements[e].map(|v| mesh.nodes[v]);
    // ∇φ_k = (y_{k+1} − y_{k+2}, x_{k+2} − x_{k+1}) / 2|K|
    let grad: [[f64; 2]; 3] = std::array::from_fn(|k| {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)]
    });
    // CR basis ψ_k = 1 − 2φ_k lives on the edge opposite vertex k
    let (scale, dofs) = match family {
        Family::Cg => (1.0, mesh.elements[e]),
        Family::Cr => (4.0, mesh.element_edges[e]),
    };
    let f = scale * area;
    let mut out = ElementMatrices {
        dofs,
        stiffness: [[0.0; 3]; 3],
        mass: [[0.0; 3]; 3],
        kxx: [[0.0; 3]; 3],
        kxy: [[0.0; 3]; 3],
        kyy: [[0.0; 3]; 3],
    };
    for i in 0..3 {
        for j in 0..3 {
            let (gi, gj) = (grad[i], grad[j]);
            out.kxx[i][j] = f * gi[0] * gj[0];
            out.kyy[i][j] = f * gi[1] * gj[1];
            out.kxy[i][j] = 0.5 * f * (gi[0] * gj[1] + gi[1] * gj[0]);
            out.stiffness[i][j] = out.kxx[i][j] + out.kyy[i][j];
            out.mass[i][j] = match family {
                Family::Cg => area / 12.0 * if i == j { 2.0 } else { 1.0 },
                Family::Cr => {
                    if i == j {
                        area / 3.0
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    Ok(out)
}

pub fn assemble(space: &FemSpace) -> Result<DiscreteOperators> {
    assemble_with(space, Execution::default())
}

pub fn assemble_with(space: &FemSpace, exec: Execution) -> Result<DiscreteOperators> {
    let mesh = space.mesh;
    let mut pos = vec![usize::MAX; space.global_count];
    for (k, &g) in space.free.iter().enumerate() {
        pos[g] = k;
    }
    let locals = exec.map_range(mesh.element_count(), |e| {
        element_matrices(mesh, space.family, e)
    });

    let cap = 9 * locals.len();
    let mut t: [Vec<(usize, usize, f64)>; 5] = std::array::from_fn(|_| Vec::with_capacity(cap));
    for local in locals {
        let local = local?;
        let idx = local.dofs.map(|g| pos[g]);
        for i in 0..3 {
            for j in 0..=i {
                let (a, b) = (idx[i], idx[j]);
                if a == usize::MAX || b == usize::MAX {
                    continue;
                }
                // lower-triangle entries only; the diagonal once
                let entries = [
                    local.stiffness[i][j],
                    local.mass[i][j],
                    local.kxx[i][j],
                    local.kxy[i][j],
                    local.kyy[i][j],
                ];
                for (list, v) in t.iter_mut().zip(entries) {
                    list.push((a, b, v));
                }
            }
        }
    }
    let n = space.free.len();
    let [stiffness, mass, kxx, kxy, kyy] = t.map(|trip| SymCsr::from_triplets(n, &trip));

    let constraints = space
        .constraints
        .iter()
        .map(|c| Constraint {
            parent: c.parent,
            entries: c.entries.iter().map(|&(g, v)| (pos[g], v)).collect(),
        })
        .collect();

    Ok(DiscreteOperators {
        family: space.family,
        bc: space.bc,
        h: mesh.h,
        global_count: space.global_count,
        free: space.free.clone(),
        constraints,
        stiffness,
        mass,
        kxx,
        kxy,
        kyy,
    })
}

impl DiscreteOperators {
    pub fn unknown_count(&self) -> usize {
        self.free.len()
    }

    pub fn dof_count(&self) -> usize {
        self.free.len() - self.constraints.len()
    }

    pub fn gram(&self, u: &[f64]) -> GramTriple {
        GramTriple {
            xx: self.kxx.quad_form(u),
            xy: self.kxy.quad_form(u),
            yy: self.kyy.quad_form(u),
        }
    }

    pub fn mass_norm_sq(&self, u: &[f64]) -> f64 {
        self.mass.quad_form(u)
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.stiffness.quad_form(u)
    }

    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        self.energy(u) / self.mass_norm_sq(u)
    }

    pub fn constraint_values(&self, u: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.apply(u)).collect()
    }

    /// `(u, v)_M`.
    pub fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.bilinear(u, v)
    }

    /// Scatter unknowns into a vector over all nodes (CG) or edges (CR).
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.global_count];
        for (k, &g) in self.free.iter().enumerate() {
            out[g] = u[k];
        }
        out
    }

    pub fn null_space_basis(&self) -> Result<NullSpaceBasis> {
        NullSpaceBasis::new(self.free.len(), &self.constraints)
    }

    /// Dense `(ZᵀAZ, ZᵀMZ)` on the constrained space. Intended for small
    /// meshes (oracles, debugging).
    pub fn reduced_dense(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let z = self.null_space_basis()?.to_dense();
        let a = z.transpose() * self.stiffness.to_dense() * &z;
        let m = z.transpose() * self.mass.to_dense() * &z;
        Ok((a, m))
    }

    /// Writes the five matrices in coordinate format, `<prefix>_<name>.mtx`.
    pub fn write_coordinate(&self, dir: &std::path::Path, prefix: &str) -> Result<()> {
        for (name, m) in [
            ("stiffness", &self.stiffness),
            ("mass", &self.mass),
            ("kxx", &self.kxx),
            ("kxy", &self.kxy),
            ("kyy", &self.kyy),
        ] {
            let f = std::fs::File::create(dir.join(format!("{prefix}_{name}.mtx")))?;
            m.write_coordinate(std::io::BufWriter::new(f))?;
        }
        Ok(())
    }
}

/// Explicit basis of `{u : Cu = 0}` obtained by eliminating one pivot unknown
/// per constraint.
#[derive(Clone, Debug)]
pub struct NullSpaceBasis {
    unknowns: usize,
    /// Unknowns that remain coordinates of the reduced space.
    pub kept: Vec<usize>,
    /// `(pivot, [(unknown, coefficient)])`: `u_pivot = Σ coefficient·u_unknown`.
    pub eliminated: Vec<(usize, Vec<(usize, f64)>)>,
}

impl NullSpaceBasis {
    pub fn new(unknowns: usize, constraints: &[Constraint]) -> Result<Self> {
        let mut uses = vec![0usize; unknowns];
        for c in constraints {
            for &(k, _) in &c.entries {
                uses[k] += 1;
            }
        }
        let mut eliminated = Vec::with_capacity(constraints.len());
        for c in constraints {
            let &(pivot, cp) = c
                .entries
                .iter()
                .filter(|&&(k, _)| uses[k] == 1)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .ok_or_else(|| Error::EmptySpace("constraint without a private unknown".into()))?;
            let rest = c
                .entries
                .iter()
                .filter(|&&(k, _)| k != pivot)
                .map(|&(k, v)| (k, -v / cp))
                .collect();
            eliminated.push((pivot, rest));
        }
        let mut is_pivot = vec![false; unknowns];
        for (p, _) in &eliminated {
            is_pivot[*p] = true;
        }
        let kept = (0..unknowns).filter(|&k| !is_pivot[k]).collect();
        Ok(NullSpaceBasis {
            unknowns,
            kept,
            eliminated,
        })
    }

    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    /// `u = Z y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.unknowns];
        for (i, &k) in self.kept.iter().enumerate() {
            u[k] = y[i];
        }
        for (p, rest) in &self.eliminated {
            u[*p] = rest.iter().map(|&(k, c)| c * u[k]).sum();
        }
        u
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut col = vec![usize::MAX; self.unknowns];
        for (i, &k) in self.kept.iter().enumerate() {
            col[k] = i;
        }
        let mut z = DMatrix::zeros(self.unknowns, self.kept.len());
        for (i, &k) in self.kept.iter().enumerate() {
            z[(k, i)] = 1.0;
        }
        for (p, rest) in &self.eliminated {
            for &(k, c) in rest {
                z[(*p, col[k])] += c;
            }
        }
        z
    }
}

/// `uᵀ v` over unknowns with compensated accumulation.
pub fn euclidean_dot(u: &[f64], v: &[f64]) -> f64 {
    dot_compensated(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{map_between, map_derivative_gram, triangle_from_angle, TriangleShape};
    use crate::mesh::uniform_subdivide;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(theta: f64, n: usize, family: Family, bc: BoundaryCondition) -> DiscreteOperators {
        let mesh = uniform_subdivide(&triangle_from_angle(theta).unwrap(), n).unwrap();
        assemble(&build_space(&mesh, family, bc).unwrap()).unwrap()
    }

    #[test]
    fn reference_right_triangle_p1() {
        // O, A, B = (0,1): the unit right triangle
        let shape = TriangleShape::from_apex([0.0, 1.0]).unwrap();
        let mesh = uniform_subdivide(&shape, 1).unwrap();
        let o = element_matrices(&mesh, Family::Cg, 0).unwrap();
        let expect_k = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(o.stiffness[i][j], expect_k[i][j], epsilon = 1e-15);
                let m = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert_relative_eq!(o.mass[i][j], m, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn dof_counts() {
        let eq = TriangleShape::equilateral();
        let m4 = uniform_subdivide(&eq, 4).unwrap();
        assert_eq!(build_space(&m4, Family::Cg, BoundaryCondition::Dirichlet).unwrap().dof_count(), 3);
        let m96 = uniform_subdivide(&eq, 96).unwrap();
        let s = build_space(&m96, Family::Cg, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!((s.dof_count(), s.global_count), (4465, 4753));
        let s = build_space(&m96, Family::Cg, BoundaryCondition::EdgeMean).unwrap();
        assert_eq!((s.dof_count(), s.unknown_count()), (4750, 4753));
        let m64 = uniform_subdivide(&eq, 64).unwrap();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::EdgeMean] {
            assert_eq!(build_space(&m64, Family::Cr, bc).unwrap().global_count, 6240);
        }
        assert_eq!(
            build_space(&m64, Family::Cr, BoundaryCondition::Dirichlet).unwrap().dof_count(),
            6240 - 192
        );
    }

    #[test]
    fn empty_spaces_are_errors() {
        let eq = TriangleShape::equilateral();
        for n in [1, 2] {
            let m = uniform_subdivide(&eq, n).unwrap();
            assert!(matches!(
                build_space(&m, Family::Cg, BoundaryCondition::Dirichlet),
                Err(Error::EmptySpace(_))
            ));
        }
        let m1 = uniform_subdivide(&eq, 1).unwrap();
        assert!(build_space(&m1, Family::Cr, BoundaryCondition::EdgeMean).is_err());
        assert!(build_space(&m1, Family::Cr, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn constants_in_unconstrained_kernel() {
        for family in [Family::Cg, Family::Cr] {
            let o = ops(0.9, 6, family, BoundaryCondition::EdgeMean);
            let sums = o.stiffness.row_sums();
            assert!(sums.iter().all(|s| s.abs() < 1e-12));
            // integral of the constant 1 over each parent edge is its length
            let ones = vec![1.0; o.unknown_count()];
            let lens = TriangleShape::from_angle(0.9).unwrap().edge_lengths();
            for (c, l) in o.constraint_values(&ones).iter().zip(lens) {
                assert_relative_eq!(*c, l, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn stiffness_splits_into_derivative_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for family in [Family::Cg, Family::Cr] {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::EdgeMean] {
                let theta = rng.random_range(0.2..2.5);
                let o = ops(theta, rng.random_range(3..9), family, bc);
                let sum = o.kxx.add_scaled(1.0, &o.kyy);
                for i in 0..o.unknown_count() {
                    for j in 0..=i {
                        let a = o.stiffness.get(i, j);
                        assert!((a - sum.get(i, j)).abs() <= 1e-13 * a.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn null_space_basis_satisfies_constraints() {
        for family in [Family::Cg, Family::Cr] {
            let o = ops(1.0, 5, family, BoundaryCondition::EdgeMean);
            let z = o.null_space_basis().unwrap();
            assert_eq!(z.dim(), o.dof_count());
            let zd = z.to_dense();
            for col in 0..zd.ncols() {
                let u: Vec<f64> = zd.column(col).iter().copied().collect();
                for c in o.constraint_values(&u) {
                    assert!(c.abs() < 1e-14);
                }
            }
            let (a, m) = o.reduced_dense().unwrap();
            assert!(a.clone().cholesky().is_some(), "A positive definite on V_e");
            assert!(m.cholesky().is_some());
        }
    }

    #[test]
    fn affine_equivariance_of_assembly() {
        // oracle: reassemble on the mapped mesh
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for family in [Family::Cg, Family::Cr] {
            let (t, tt) = (0.7, 1.2);
            let a = ops(t, 2, family, BoundaryCondition::EdgeMean);
            let b = ops(tt, 2, family, BoundaryCondition::EdgeMean);
            let map = map_between(t, tt).unwrap();
            for _ in 0..5 {
                let u: Vec<f64> = (0..a.unknown_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let g = a.gram(&u);
                let mapped = map_derivative_gram(g, map.alpha, map.beta).unwrap();
                let direct = b.gram(&u);
                assert!((mapped.xx - direct.xx).abs() < 1e-12);
                assert!((mapped.xy - direct.xy).abs() < 1e-12);
                assert!((mapped.yy - direct.yy).abs() < 1e-12);
                assert!((b.mass_norm_sq(&u) - map.beta * a.mass_norm_sq(&u)).abs() < 1e-12);
            }
        }
    }
}
