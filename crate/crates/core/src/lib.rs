//! Finite-volume simulation of infinite systems of interacting Brownian
//! motions: configuration primitives, equilibrium point fields, drift
//! fields with cut-offs, reflecting/absorbing integrators and diagnostics.

pub mod cutoff;
pub mod diagnostics;
pub mod drift;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod pointfields;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Configuration, LabeledConfig, Point, Window};
pub use rng::SeedSpec;
