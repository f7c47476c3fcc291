//! Simulation and verification toolkit for Kob–Andersen kinetically
//! constrained lattice gases.

pub mod comparison;
pub mod digest;
pub mod dynamics;
pub mod error;
pub mod frame;
pub mod lattice;
pub mod renorm;
pub mod rng;
pub mod stats;
pub mod tracer;

pub use error::Error;
