//! Incompatible two-well problems under curl, div and curlcurl constraints.
//!
//! The crate computes compatibility projections and quantifiers, the relaxed
//! excess energy with its optimal volume fraction, explicit branching
//! microstructures with an exact energy ledger, independent grid and Fourier
//! energy evaluations, and log-log scaling sweeps.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`). The `*64`
//! aliases below fix the scalar to `f64`, which is what the CLI uses.

pub mod compatibility;
pub mod construction;
mod dd;
pub mod eigen;
pub mod fit;
pub mod energy_eval;
pub mod error;
pub mod mat2;
pub mod operator_kernel;
pub mod quadrature;
pub mod random;
pub mod relaxation;
pub mod scalar;
pub mod scaling_cli;

pub use error::{Result, TwoWellError};
pub use scalar::Real;

/// Dense `d×d` state in `f64`.
pub type Matrix64 = operator_kernel::Matrix<f64>;
/// Symmetric state in `f64`.
pub type SymMatrix64 = operator_kernel::SymMatrix<f64>;
/// Unit direction in `f64`.
pub type Direction64 = operator_kernel::Direction<f64>;
/// Two-well problem data in `f64`.
pub type ProblemData64 = relaxation::ProblemData<f64>;
/// Relaxation report in `f64`.
pub type RelaxReport64 = relaxation::RelaxReport<f64>;
/// Compatibility quantifiers in `f64`.
pub type CompatQuantifiers64 = compatibility::CompatQuantifiers<f64>;
/// Fixed `2×2` matrix in `f64`.
pub type Mat2_64 = mat2::Mat2<f64>;
/// Branching field in `f64`.
pub type BranchField64 = construction::BranchField<f64>;
