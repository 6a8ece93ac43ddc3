//! Finite-volume solver for compressible viscous flow with a transported
//! magnetic field, stabilized by artificial diffusion and pressure.

pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod fields;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod momentum;
pub mod params;
pub mod solver;
pub mod transport;

pub use error::{Error, Result};
