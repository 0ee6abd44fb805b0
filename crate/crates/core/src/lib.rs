//! Kicked Ising chain quasi-energy spectra and their statistics.
//!
//! The crate builds the Floquet operator of a periodically kicked Ising ring,
//! splits it into momentum sectors with a basis in which each block is
//! complex symmetric, diagonalizes the blocks, and compares spacing,
//! form-factor and number-variance statistics with the Circular Orthogonal
//! Ensemble.

pub mod analysis;
pub mod cli;
pub mod combinatorics;
pub mod diag;
pub mod error;
pub mod floquet;
pub mod rmt;
pub mod spectrum;
pub mod stats;

pub use error::{KicError, Result};
