//! Pointwise spectral values (eigenvalues, resonance poles and branch points)
//! of linearizations at traveling waves, located by an inverse power method
//! on the nonlinear intersection pencil `ι(λ)`.
//!
//! The numerics are generic over the real scalar type; the aliases below fix
//! it to `f64`.

pub mod assembly;
pub mod error;
pub mod ipm;
pub mod linalg;
pub mod newton;
pub mod pencil;
pub mod problems;
pub mod scalar;
pub mod subspace;

pub use error::{Error, Result};
pub use ipm::{run_with_restarts, spreading_speed, Classification, IpmOptions};
pub use problems::{make_problem, Params};

pub type Pencil = pencil::MatrixPencil<f64>;
pub type Poly = pencil::ScalarPoly<f64>;
pub type Problem = assembly::ProblemSpec<f64>;
pub type Assembled = assembly::AssembledPencil<f64>;
pub type Jet = subspace::SubspaceJet<f64>;
pub type Record = ipm::IterationRecord<f64>;
pub type Solution = ipm::SpectralResult<f64>;
pub type Branch = newton::BranchPoint<f64>;
