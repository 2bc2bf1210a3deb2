//! Simulation, decoding and training for logical Clifford circuits on rotated
//! surface codes.

pub mod bench;
pub mod bits;
pub mod circuit;
pub mod compiler;
pub mod dataset;
pub mod dem;
pub mod error;
pub mod geometry;
pub mod logical;
pub mod model;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
