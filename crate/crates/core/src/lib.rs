//! Robust path selection for traffic engineering.
//!
//! The crate selects a set of forwarding paths to hold fixed over a look-ahead
//! window of `w` intervals. It provides the linear programs (per-interval
//! MLU-optimal routing, windowed robust rates, scenario-robust oblivious
//! routing, an exhaustive oracle), the classical baselines, a policy-gradient
//! path selector and the experiment harness that compares them.

pub mod agent;
pub mod baselines;
pub mod dataio;
pub mod error;
pub mod harness;
pub mod lp;
pub mod netmodel;

pub use error::{Error, ErrorKind, Result};
