//! Thermodynamics of pseudo-hermitian quantum systems.
//!
//! `linalg` holds the biorthogonal eigensolver and metric construction,
//! `models` the concrete Hamiltonians, `dynamics` the metric-corrected
//! propagator and `thermo` the Gibbs states, work statistics and cycles.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod thermo;
pub mod tolerance;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use tolerance::Tolerances;
