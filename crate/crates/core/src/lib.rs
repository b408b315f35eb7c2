//! Simulation and analysis engine for the three-group herding model of
//! financial markets.
//!
//! The crate is organised bottom-up:
//!
//! - [`kinetics`]: transition rates, drift/diffusion terms, variable
//!   transforms and power-law exponent predictions.
//! - [`abm`]: exact event-driven simulation of the two- and three-state
//!   agent populations.
//! - [`sde`]: adaptive Euler-Maruyama integration of the macroscopic SDEs
//!   with reflecting boundaries.
//! - [`market`]: log-price, returns and the double-stochastic return model
//!   with q-Gaussian exogenous noise.
//! - [`stats`]: log-binned PDFs, segment-averaged PSDs, power-law and Hill
//!   tail fits, Kolmogorov-Smirnov distances.
//! - [`cli`]: JSON configuration, run orchestration and CSV/JSON output for
//!   the `herdsim` binary.
//!
//! All simulated time is the scaled time `t_s = h t` unless stated otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abm;
pub mod cli;
pub mod error;
pub mod kinetics;
pub mod market;
pub mod rng;
pub mod sde;
pub mod series;
pub mod stats;

pub use error::{HerdError, Result};
pub use series::TimeSeries;
