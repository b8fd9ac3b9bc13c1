//! Frequency-resolved energy dissipation in open quantum systems.
//!
//! The crate computes population-transfer rates and per-frequency
//! dissipation densities from Markovian rate theory, averages them over
//! static disorder, and cross-checks them against a hierarchical
//! equations-of-motion propagator with a weakly coupled probe oscillator.

// `!(x > 0.0)` guards are written that way so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the matrix notation of the kernels.
#![allow(clippy::needless_range_loop)]

pub mod bath;
pub mod dissipation;
pub mod error;
pub mod heom;
pub mod mqme;
pub mod numeric;
pub mod tss;

pub use error::{Error, Result};
