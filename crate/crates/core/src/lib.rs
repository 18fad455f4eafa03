//! Quantum Fisher information analysis of scarred eigenstates and revivals in
//! the PXP model of Rydberg-blockaded chains.

pub mod dynamics;
pub mod error;
pub mod fsa;
pub mod hilbert;
pub mod linalg;
pub mod mps_scars;
pub mod operators;
pub mod qfi;
pub mod scalar;
pub mod selftest;
pub mod spectral;
pub mod su2tower;
pub mod symsub;

pub use error::{Error, Result};
pub use hilbert::{Boundary, ConstrainedBasis, SymmetrySector};
pub use linalg::{DenseMatrix, LinearOperator};
pub use operators::SparseOperator;
pub use scalar::{Field, Real};

/// Double-precision dense matrix.
pub type Matrix = DenseMatrix<f64>;
/// Double-precision sparse operator.
pub type Operator = SparseOperator<f64>;
/// Exact rational scalar for the closed-form tower and MPS expressions.
pub type Rational = num_rational::BigRational;
