//! Immersed-boundary finite-element solver for incompressible hyperelastic
//! structures immersed in a viscous fluid.

pub mod error;
pub mod bench;
pub mod coupling;
pub mod diagnostics;
pub mod eulerian;
pub mod fem;
pub mod linalg;
pub mod materials;
pub mod solidforce;
pub mod timeloop;
pub mod verify;

pub use error::{Error, Result};
