//! Semidefinite approximations of the matrix logarithm, the operator and
//! quantum relative entropies, and mean iterations, together with a small
//! interior-point solver to optimize over them.

pub mod cone_factory;
pub mod error;
pub mod experiments;
pub mod funceq;
pub mod hermitian;
pub mod quadrature;
pub mod quantum;
pub mod scalar_approx;
pub mod sdp;

pub use cone_factory::{AffineExpr, Assignment, LinearMatrixSystem, LmiBlock, VarId, VarRole};
pub use error::{Error, Result};
pub use hermitian::{CMatrix, HermitianMatrix};
pub use quadrature::QuadratureRule;
pub use scalar_approx::RationalApproximant;
