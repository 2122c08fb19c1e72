//! Subdomain-local explicit semi-Lagrangian transport on spectral-element grids.
//!
//! Particles are seeded at the Chebyshev-Gauss nodes of every subdomain,
//! advanced explicitly along characteristics with a time step that keeps
//! them inside their subdomain, and remapped back to the nodes by a
//! least-squares fit constrained by upwinded interface values and,
//! optionally, local mass and energy budgets.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which the drivers use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod densela;
pub mod diagnostics;
pub mod error;
pub mod mesh;
pub mod problems;
pub mod remap1d;
pub mod remap2d;
pub mod scalar;
pub mod scheme;
pub mod spectral;
pub mod transport;

pub use diagnostics::NormReport;
pub use error::{Error, Result};
pub use mesh::{init_field, Axis, BoundaryCondition, Field, Mesh};
pub use problems::{make_problem, ProblemId, ProblemSpec};
pub use scalar::{Point, Real};
pub use scheme::{BoundaryMethod, Constraints, SchemeSpec};
pub use spectral::{NodeBasis, NodeRule};
pub use transport::{DtMode, DtRule, StepControl, TimeOrder, VelocityModel};

pub type NodeBasis64 = spectral::NodeBasis<f64>;
pub type Mesh64 = mesh::Mesh<f64>;
pub type Field64 = mesh::Field<f64>;
pub type VelocityModel64 = transport::VelocityModel<f64>;
pub type AdvectedState64 = transport::AdvectedState<f64>;
pub type DenseMatrix64 = densela::DenseMatrix<f64>;
pub type ProblemSpec64 = problems::ProblemSpec<f64>;
pub type NormReport64 = diagnostics::NormReport<f64>;

pub type NodeBasis32 = spectral::NodeBasis<f32>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type Field32 = mesh::Field<f32>;
