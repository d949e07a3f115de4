//! Pseudo-Hermitian quantum mechanics on a truncated basis.
//!
//! Given a diagonalizable Hamiltonian with real spectrum and its biorthonormal
//! eigenvectors, the crate builds the positive metric operator, the equivalent
//! Hermitian Hamiltonian, dressed observables, position wave functions and
//! time evolution. The PT-symmetric square well is implemented in full in
//! [`squarewell`].

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod metric;
pub mod observables;
pub mod pseudodiff;
pub mod quad;
pub mod squarewell;
pub mod trig;

pub use error::{Error, Result};
