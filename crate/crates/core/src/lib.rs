//! Bit-error analysis and exact Monte Carlo simulation of BPSK time-hopping
//! impulse-radio UWB links with pulse-based polarity randomization.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: system constants, received pulse shapes and their
//!   autocorrelation, random code generation.
//! * [`channel`]: tapped-delay-line channel realizations and user delays.
//! * [`rake`]: Rake combining weights and the `u`/`v` cross-correlation that
//!   both the analysis and the simulator are built on.
//! * [`analytic`]: closed-form interference variances and Gaussian
//!   approximations of the bit error probability.
//! * [`simulator`]: chip-grid Monte Carlo simulation of the Rake decision
//!   statistic.
//!
//! All times are expressed in chip units unless a pulse is built with an
//! explicit chip time.

pub mod analytic;
pub mod channel;
mod error;
pub mod model;
pub mod quadrature;
pub mod rake;
pub mod simulator;

pub use error::{Error, Result};
