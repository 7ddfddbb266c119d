//! Quantum dynamics on finite-dimensional indefinite-metric state spaces.
//!
//! States carry a forward (metric `+1`) and a backward (metric `-1`) block.
//! Pseudo-Hermitian Hamiltonians generate pseudounitary transfer operators;
//! [`io_map`] turns those into unitary input/output maps, [`scattering`]
//! builds resolvent-based S-matrices with closed channels, and [`models`]
//! holds the closed-form two-channel vacuum problem and coupling algebra.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod io_map;
pub mod krein;
pub mod linalg;
pub mod models;
pub mod random;
pub mod scattering;

pub use faer::c64;

pub use error::{Error, Result};
pub use krein::{eta_product, BlockOperator, BlockVector, KreinSignature};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
