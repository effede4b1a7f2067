//! Progress rate density (PRD) of cooperative multihop relaying in Poisson
//! networks with slotted ALOHA and Rayleigh fading.
//!
//! * [`geometry`]: point processes, windows and per-slot ALOHA roles.
//! * [`channel`]: path loss, fading and SIR evaluation.
//! * [`protocol`]: decoding rules, relay selection, the bit-contention scheme
//!   and the Monte Carlo PRD estimator.
//! * [`analytic`]: the decoding-cell approximation and its surrogate PRD.
//! * [`optimizer`]: `(R, p)` maximization and parameter sweeps.
//! * [`config`] and [`run`]: configuration files and the command-line
//!   experiments.

pub mod analytic;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod protocol;
pub mod quad;
pub mod rng;
pub mod run;

pub use error::{Error, Result};
