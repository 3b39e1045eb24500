//! Random-embedding global optimization.

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod problems;
pub mod rng;
pub mod special;
pub mod stats;
pub mod subsolve;
pub mod verify;
pub mod xrego;

pub use error::{Error, Result};
pub use rng::RngState;
