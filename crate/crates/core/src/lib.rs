//! Coherent states built from regularized, non-normalizable fiducial vectors
//! for the free particle and the inverted harmonic oscillator, with numeric
//! checks of the coherent-state axioms (normalization, continuity, resolution
//! of the identity, temporal stability, action identity).

pub mod cli;
pub mod error;
pub mod free_particle;
pub mod hilbert;
pub mod iho;
pub mod verify;
pub mod numerics;
pub mod weber;

pub use error::{Error, Result};
pub use num_complex::Complex64;
