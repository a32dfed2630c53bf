//! Channel estimation for IRS-aided multiuser uplink SIMO systems.
//!
//! The crate covers the channel model, the two-phase (2PCE) and three-phase
//! (3PCE) training schedules and their least-squares estimators, closed-form
//! and asymptotic MSE expressions, and a seeded Monte Carlo harness.

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod channel;
pub mod linalg;
pub mod schedule;
pub mod validation;

pub use error::{Error, Result};
