//! Multiphoton qubit-oscillator models.
//!
//! * [`fockspace`]: tensor-product layouts, sparse operators, ladder and Pauli operators.
//! * [`combinatorics`]: Stirling numbers and normal-ordered commutator coefficients.
//! * [`models`]: system specifications and Hamiltonian builders.
//! * [`analytic`]: closed-form dispersive levels, doublets and derived quantities.
//! * [`eigensolve`]: blockwise dense and Lanczos eigensolvers, labeling and level tracking.
//! * [`dynamics`]: state preparation, time evolution, partial traces and fidelities.

pub mod analytic;
pub mod combinatorics;
pub mod dynamics;
pub mod eigensolve;
pub mod error;
pub mod fockspace;
pub mod models;

pub use error::{Error, Result};
pub use fockspace::{HilbertLayout, SparseOperator, C64};
