//! Simulation and learning workbench for quasi-probability error mitigation
//! on layered circuits.
//!
//! The crate is organised bottom-up:
//! - [`pauli`]: Pauli algebra, Clifford conjugation tables, transfer matrices;
//! - [`circuit`]: the layered frame/computing/mitigation circuit model;
//! - [`stabilizer`]: tableau simulation of Clifford assignments, exact and
//!   sampled expectations under Pauli noise, training-set sampling;
//! - [`dense`]: density-matrix and trajectory simulation with the full noise
//!   model (arbitrary gates, damping, measurement flips);
//! - [`sige`]: significant-error enumeration and local channel inversion;
//! - [`learn`]: loss functions, least-squares and product-form learning;
//! - [`mitigate`]: applying a learned quasi-probability distribution to new
//!   circuits, exactly or by sampling.

pub mod error;
pub mod linalg;
pub mod rng;

pub mod circuit;
pub mod dense;
pub mod learn;
pub mod mitigate;
pub mod sige;
pub mod pauli;
pub mod stabilizer;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
