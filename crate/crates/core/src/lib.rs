//! Worst-case CVaR bounds for counterparty credit risk.
//!
//! Market exposure scenarios and a discretized systematic credit factor have
//! known marginals but unknown dependence. [`wcc`] finds the coupling that
//! maximizes CVaR of the systematic loss; [`copula_stress`] measures how far
//! a Gaussian-copula stress test falls short of that bound; [`sim_engine`]
//! simulates full losses under any coupling.

pub mod copula_stress;
pub mod credit_model;
pub mod error;
pub mod numeric;
pub mod portfolio_data;
pub mod report;
pub mod risk_measures;
pub mod sim_engine;
pub mod synthetic;
pub mod wcc;

pub use error::{CoreError, Result};
