//! Exact-arithmetic laboratory for best simultaneous approximations.
//!
//! The crate is organised bottom-up: [`lattice`] holds the integer linear
//! algebra over `Z^4`, [`exponents`] the scalar parameter calculus, [`engine`]
//! computes best approximation sequences, [`pattern`] classifies them,
//! [`synth`] builds vectors with a prescribed exponent ratio and [`report`]
//! serializes everything for the command line tool.

pub mod engine;
pub mod error;
pub mod exponents;
pub mod interval;
pub mod lab;
pub mod lattice;
pub mod pattern;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
pub use lattice::{IntVec, RatPoint};

/// Crate version, embedded in every report manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
