//! Homotopy-continuation variational eigensolvers on a dense statevector simulator.
//!
//! The crate walks the ground state of `H(t) = H0 + s(t)(H1 - H0)` from an easy
//! initial Hamiltonian to a molecular one, using Pauli-algebra observables,
//! parameter-shift derivatives and a family of predictor/corrector schemes.

pub mod ansatz;
pub mod chemistry;
pub mod continuation;
pub mod derivatives;
pub mod error;
pub mod exact;
pub mod optimizers;
pub mod pauli;
pub mod runner;
pub mod statevector;

pub use error::{Error, Result};
