//! Noise-fingerprint laboratory.
//!
//! Simulates a family of noisy 4-qubit devices running a transport testbed
//! circuit, records time-stamped datasets of measured outcome distributions,
//! and trains kernel SVMs that tell devices (and time windows) apart.

pub mod acquisition;
pub mod error;
pub mod experiments;
pub mod rng;
pub mod simulator;
pub mod svm;
pub mod testbed;
pub mod verify;

pub use error::{Error, Result};
