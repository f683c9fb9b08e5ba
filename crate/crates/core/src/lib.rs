//! Boundary-driven spin-1/2 XXZ lattices: Lindblad steady states, spin
//! currents and rectification.

pub mod error;
pub mod lattice;
pub mod liouville;
pub mod operators;
pub mod krylov;
pub mod sparse;
pub mod steady;
pub mod transport;

pub use error::{Error, Result};
