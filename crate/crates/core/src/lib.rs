//! Certified eigenvalue bounds for the Laplacian on triangles.
//!
//! The crate assembles conforming (P1) and Crouzeix–Raviart finite element
//! discretizations on uniformly refined triangles, encloses their lowest
//! eigenvalues, turns them into two-sided bounds for the continuous
//! eigenvalues, and drives the two interval algorithms that certify the
//! equilateral triangle as the minimizer of the first eigenvalue among
//! triangles of unit diameter (homogeneous Dirichlet and edge-mean
//! boundary conditions).
//!
//! Module map:
//!
//! - [`geometry`]: triangle parametrization, affine maps, perturbation factors.
//! - [`mesh`]: uniform subdivision with edge incidence.
//! - [`fem`]: spaces and operator assembly.
//! - [`eigsolve`]: sparse generalized eigensolver with enclosures.
//! - [`bounds`]: eigenvalue brackets, eigenfunction distance, derivative envelope.
//! - [`certify`]: schedules, both algorithms, certificates.

pub mod bounds;
pub mod certify;
pub mod eigsolve;
pub mod error;
pub mod exec;
pub mod fem;
pub mod geometry;
pub mod interval;
pub mod mesh;
pub mod sparse;

pub use error::{Error, Result};
pub use exec::Execution;
pub use interval::Interval;
