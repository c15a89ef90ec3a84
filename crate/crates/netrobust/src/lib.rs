//! Robustness analysis for large linear discrete-time networks.
//!
//! The crate quantifies how Gramian-based energy measures, tail risk of
//! aggregate output, and platoon controller performance scale with network
//! dimension, and provides the spectral balancing transform together with
//! its stability and energy bounds.

pub mod balancing;
pub mod controllers;
pub mod economic;
pub mod energy;
pub mod error;
pub mod matrix;
pub mod scaling;
pub mod stream;
pub mod tailrisk;
pub mod topology;

pub use error::{Error, Result};
pub use matrix::NetworkMatrix;
