//! Reconstruction algorithms for quantum state tomography on the cone of
//! positive semi-definite matrices with fixed trace.
//!
//! The crate is organised bottom-up:
//!
//! - [`herm`]: dense complex Hermitian matrices, spectral decomposition,
//!   trace norm, projection onto the set of trace-`c` PSD matrices and random
//!   state generation.
//! - [`operators`]: linear measurement maps stored as effect matrices (six-state
//!   qubit tomography and binned homodyne detection).
//! - [`objectives`]: negative log-likelihood and least-squares data fits with
//!   exact gradients.
//! - [`solvers`]: the sandwich fixed-point iteration, Gradient Multiplication,
//!   factorized gradient descent and a projected-gradient reference solver.
//! - [`diagnostics`]: the first-order validity certificate that separates true
//!   minimizers from spurious fixed points, and constructors for such points.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod herm;
pub mod objectives;
pub mod operators;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use num_complex::Complex64;
