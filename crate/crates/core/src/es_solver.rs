//! Expected-Shortfall capped problem.
//!
//! The optimal investment is θ_t ς_λ(t) with the weight
//! `ς_λ = ρ₁(ω+λ) / (λ ι_α(ρ₁) + ρ₁(ω+λ))`, and the optimal consumption is v^γ.

use crate::error::{domain, Result};
use crate::market::MarketModel;
use crate::riskmeasures::{RiskKind, RiskSpec};
use crate::shrinkage::{ConditionCheck, GammaPoint, WeightFamily};
use crate::solution::{self, ConstrainedSolution};

pub use crate::solution::solve_unconstrained;

pub type EsSolution = ConstrainedSolution;

fn family(m: &MarketModel, alpha: f64) -> Result<WeightFamily<'_>> {
    WeightFamily::new(m, alpha, RiskKind::Es)
}

/// G₁(u, λ).
pub fn g1(u: f64, lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.g(u, lambda)
}

/// λ'_max, the root of G₁(0, λ) = 1.
pub fn lambda_prime_max(m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.lambda_cap()
}

/// ρ₁(λ).
pub fn rho1(lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.rho(lambda)
}

/// ς_λ(t).
pub fn varsigma(t: f64, lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    if !(0.0..=m.horizon()).contains(&t) {
        return Err(domain(format!("time {t} outside [0, {}]", m.horizon())));
    }
    Ok(family(m, alpha)?.weight(lambda)?.at_omega(m.omega(t)))
}

/// Φ₁(λ) = -‖√ς θ‖² - ln F_α(|q_α| + ‖ςθ‖).
pub fn phi1(lambda: f64, m: &MarketModel, alpha: f64) -> Result<f64> {
    family(m, alpha)?.phi(lambda)
}

/// Checked inverse of Φ₁ on [0, -ln(1-ζ)].
pub fn phi1_inverse(a: f64, m: &MarketModel, alpha: f64, zeta: f64) -> Result<f64> {
    family(m, alpha)?.phi_inverse_checked(a, zeta)
}

/// Γ₁(κ).
pub fn gamma1(kappa: f64, m: &MarketModel, alpha: f64, zeta: f64) -> Result<f64> {
    family(m, alpha)?.gamma(kappa, zeta)
}

/// γ₁ = argmax Γ₁ over (0, ζ], with Γ₁(γ₁).
pub fn maximize_gamma1(m: &MarketModel, alpha: f64, zeta: f64) -> Result<GammaPoint> {
    family(m, alpha)?.maximize_gamma(zeta)
}

/// Regime conditions with their thresholds.
pub fn conditions(m: &MarketModel, alpha: f64, zeta: f64) -> Result<Vec<ConditionCheck>> {
    Ok(solution::conditions(&family(m, alpha)?, zeta))
}

pub fn solve_es(x: f64, m: &MarketModel, spec: &RiskSpec) -> Result<EsSolution> {
    if spec.kind != RiskKind::Es {
        return Err(domain("solve_es needs an ES spec"));
    }
    solution::solve(x, m, spec)
}
