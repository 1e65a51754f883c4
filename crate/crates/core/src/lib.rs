//! A-posteriori error estimation for the P1 Poisson problem with
//! homogeneous Dirichlet data and loads in H⁻¹, using error-dominated
//! oscillation.
//!
//! The building blocks are conforming triangulations refined by newest
//! vertex bisection ([`mesh`]), exactly integrable loads ([`load`]), the P1
//! Galerkin solver ([`fem`]), a biorthogonal system of element and face
//! functionals ([`biorth`]), the projection onto discretized residuals
//! ([`projection`]), local dual norms ([`dualnorm`]), four estimator
//! families ([`estimators`]) and an experiment driver ([`driver`]).

// Small fixed-size loops over local vertex indices read best with indices.
#![allow(clippy::needless_range_loop)]

pub mod biorth;
pub mod driver;
pub mod dualnorm;
pub mod error;
pub mod estimators;
pub mod fem;
pub mod linalg;
pub mod load;
pub mod mesh;
mod parallel;
pub mod poly;
pub mod projection;
pub mod quadrature;

pub use biorth::{Index, TestFunction};
pub use dualnorm::{Bracket, OracleResult, Region};
pub use error::{Error, LoadError, MeshError, Result, SolveError};
pub use estimators::{EstimatorFamily, EstimatorReport};
pub use fem::{LinearSystem, P1Function};
pub use load::{Load, LoadTerm, PiecewisePoly};
pub use mesh::{build_mesh, Mesh};
pub use poly::{BaryPoly, SegmentPoly};
pub use projection::DiscretizedResidual;
