//! Universal Wyner-Ziv rate-distortion bounds for side-information channels
//! known only through a distortion budget, together with method-of-types
//! utilities and a small-blocklength random-binning code simulator.
//!
//! Rates are reported in bits.

pub mod binary;
pub mod error;
pub mod geometry;
pub mod optim;
pub mod prob;
pub mod sim;
pub mod solvers;
pub mod types;

pub use error::{Error, Result};
