//! Optimal investment and consumption for a log-utility investor in a
//! Black–Scholes market with deterministic coefficients, under a uniform in
//! time cap on Value-at-Risk or Expected Shortfall.
//!
//! The crate is organised around a [`MarketModel`]:
//!
//! - [`functionals`] evaluates the cost and constraint functionals of a
//!   deterministic control,
//! - [`riskmeasures`] gives closed-form quantiles, VaR and ES,
//! - [`var_solver`] and [`es_solver`] compute the constrained optimum,
//! - [`montecarlo`] checks a solution against exact-law simulation.

pub mod cli;
pub mod control;
pub mod error;
pub mod functionals;
pub mod market;
pub mod quadrature;
pub mod es_solver;
pub mod montecarlo;
pub mod riskmeasures;
pub mod roots;
pub mod shrinkage;
pub mod solution;
pub mod var_solver;

pub use control::{Consumption, DeterministicControl, Interp, Investment, Table, WeightFn};
pub use error::{Error, Result};
pub use market::{CoefficientPiece, MarketConfig, MarketModel};
pub use quadrature::QuadratureSpec;
pub use riskmeasures::{RiskKind, RiskSpec};
pub use solution::{ConstrainedSolution, Regime};
