//! Noncommutative Ricci flow on the fuzzy torus.
//!
//! The crate builds the matrix geometry (clock and shift generators, position
//! matrices, derivations and Laplacian), integrates `dc/dt = −Δ log c` from
//! any strictly positive initial metric, and tracks scalar curvature, von
//! Neumann entropy and the monotone quantities of the flow.

pub mod error;
pub mod cli;
pub mod flow;
pub mod io;
pub mod matcore;
pub mod metric;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
