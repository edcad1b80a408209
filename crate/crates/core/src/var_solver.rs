//! Value-at-Risk capped problem.
//!
//! The optimal investment is θ_t τ_λ(t) with the weight
//! `τ_λ = ρ(ω+λ) / (λ|q_α| + ρ(ω+λ))`, and the optimal consumption is v^γ.

use crate::error::{domain, Result};
use crate::market::MarketModel;
use crate::riskmeasures::{RiskKind, RiskSpec};
use crate::shrinkage::{ConditionCheck, GammaPoint, WeightFamily};
use crate::solution::{self, ConstrainedSolution};

pub use crate::solution::solve_unconstrained;

pub type VarSolution = ConstrainedSolution;

fn family(m: &MarketModel, alpha: f64) -> Result<WeightFamily<'_>> {
    WeightFamily::new(m, alpha, RiskKind::Var)
}

/// G(u, λ).
pub fn g(u: f64, lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.g(u, lambda)
}

/// λ_max, the root of G(0, λ) = 1.
pub fn lambda_max(m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.lambda_cap()
}

/// ρ(λ).
pub fn rho(lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.rho(lambda)
}

/// τ_λ(t).
pub fn tau(t: f64, lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    if !(0.0..=m.horizon()).contains(&t) {
        return Err(domain(format!("time {t} outside [0, {}]", m.horizon())));
    }
    Ok(family(m, alpha)?.weight(lambda)?.at_omega(m.omega(t)))
}

/// Φ(λ) = |q_α| ‖τθ‖ + ½‖τθ‖² - ‖√τ θ‖².
pub fn phi(lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.phi(lambda)
}

/// Checked inverse of Φ on [0, -ln(1-ζ)].
pub fn phi_inverse(a: f64, m: &MarketModel, alpha: f64, zeta: f64) -> Result<f64> {
    family(m, alpha)?.phi_inverse_checked(a, zeta)
}

/// Γ(κ).
pub fn gamma(kappa: f64, m: &MarketModel, alpha: f64, zeta: f64) -> Result<f64> {
    family(m, alpha)?.gamma(kappa, zeta)
}

/// γ = argmax Γ over (0, ζ], with Γ(γ).
pub fn maximize_gamma(m: &MarketModel, alpha: f64, zeta: f64) -> Result<GammaPoint> {
    family(m, alpha)?.maximize_gamma(zeta)
}

/// Regime conditions with their thresholds.
pub fn conditions(m: &MarketModel, alpha: f64, zeta: f64) -> Result<Vec<ConditionCheck>> {
    Ok(solution::conditions(&family(m, alpha)?, zeta))
}

pub fn solve_var(x: f64, m: &MarketModel, spec: &RiskSpec) -> Result<VarSolution> {
    if spec.kind != RiskKind::Var {
        return Err(domain("solve_var needs a VaR spec"));
    }
    solution::solve(x, m, spec)
}
