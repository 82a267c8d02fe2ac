//! Lower bounds on the feedback bitrate required for LQG control, and the
//! machinery to validate them: Riccati solutions, a determinant-maximization
//! solver for the rate-distortion program, exact directed-information
//! accounting for linear-Gaussian policies, dithered-quantizer prefix coding,
//! exhaustive finite-alphabet verification, and a closed-loop simulator.

pub mod cli;
pub mod coding;
pub mod config;
pub mod error;
pub mod finite;
pub mod gaussdi;
pub mod maxdet;
pub mod plant;
pub mod ratedist;
pub mod report;
pub mod riccati;
pub mod sim;

pub use error::{Error, Result};
