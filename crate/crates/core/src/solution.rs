//! Assembly of the constrained optimum and its regime.

use std::fmt;

use serde::Serialize;

use crate::control::{Consumption, DeterministicControl, Investment, WeightFn};
use crate::error::{domain, Error, Result};
use crate::market::MarketModel;
use crate::riskmeasures::{feasibility_grid, feasibility_sup_check, FeasibilityReport, RiskKind, RiskSpec};
use crate::shrinkage::{ConditionCheck, WeightFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// No excess return: invest nothing, consume at v^{min(κ₀, ζ)}.
    ThetaZero,
    /// The cap is slack at the unconstrained optimum.
    Unconstrained,
    /// Investing nothing and consuming at v^ζ is optimal.
    Riskless,
    /// Binding cap with a shrunk strategy.
    Interior,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ThetaZero => "THETA_ZERO",
            Regime::Unconstrained => "UNCONSTRAINED",
            Regime::Riskless => "RISKLESS",
            Regime::Interior => "INTERIOR",
        })
    }
}

/// Optimal strategy under a VaR or ES cap.
#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub spec: RiskSpec,
    pub x: f64,
    pub regime: Regime,
    /// Optimal κ.
    pub gamma: f64,
    /// Multiplier φ(γ).
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    /// Multiplier at which the weight vanishes.
    pub lambda_cap: Option<f64>,
    pub weight: Option<WeightFn>,
    pub control: DeterministicControl,
    /// J = A(x) + Γ(γ).
    pub cost: f64,
    /// A(x) = (T+1) ln x + ∫ ω r dt - T ln T.
    pub base_value: f64,
    /// Γ(γ).
    pub gamma_value: f64,
    pub conditions: Vec<ConditionCheck>,
    pub feasibility: FeasibilityReport,
}

/// Serializable summary of a solution.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub measure: String,
    pub regime: String,
    pub alpha: f64,
    pub q_alpha_abs: f64,
    pub zeta: f64,
    pub x: f64,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub lambda_cap: Option<f64>,
    #[serde(rename = "J")]
    pub cost: f64,
    #[serde(rename = "A")]
    pub base_value: f64,
    #[serde(rename = "Gamma")]
    pub gamma_value: f64,
    pub conditions: Vec<ConditionCheck>,
    pub feasibility: Option<FeasibilityReport>,
}

impl ConstrainedSolution {
    pub fn kind(&self) -> RiskKind {
        self.spec.kind
    }

    /// Weight applied to θ at time t (1 means the unconstrained strategy).
    pub fn weight_at(&self, m: &MarketModel, t: f64) -> f64 {
        match (&self.control.investment, self.weight) {
            (Investment::Zero, _) => 0.0,
            (Investment::ThetaMultiple(c), _) => *c,
            (_, Some(w)) => w.at_omega(m.omega(t)),
            _ => f64::NAN,
        }
    }

    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            measure: self.spec.kind.to_string(),
            regime: self.regime.to_string(),
            alpha: self.spec.alpha,
            q_alpha_abs: self.spec.q_abs,
            zeta: self.spec.zeta,
            x: self.x,
            gamma: self.gamma,
            lambda: self.lambda,
            rho: self.rho,
            lambda_cap: self.lambda_cap,
            cost: self.cost,
            base_value: self.base_value,
            gamma_value: self.gamma_value,
            conditions: self.conditions.clone(),
            feasibility: Some(self.feasibility),
        }
    }
}

/// A(x) = (T+1) ln x + ∫ ω r dt - T ln T.
pub fn base_value(x: f64, m: &MarketModel) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("initial wealth must be positive, got {x}")));
    }
    let t_end = m.horizon();
    let rate = m.integrate(|t| m.omega(t) * m.r_at(t), 0.0, t_end)?;
    Ok((t_end + 1.0) * x.ln() + rate - t_end * t_end.ln())
}

/// The unconstrained optimum y = θ, v = 1/ω and its value
/// (T+1) ln(x/(T+1)) + ∫ ω (r + |θ|²/2) dt.
pub fn solve_unconstrained(x: f64, m: &MarketModel) -> Result<(DeterministicControl, f64)> {
    if !(x > 0.0) {
        return Err(domain(format!("initial wealth must be positive, got {x}")));
    }
    let t_end = m.horizon();
    let drift = m.integrate(|t| m.omega(t) * (m.r_at(t) + 0.5 * m.theta_sq_at(t)), 0.0, t_end)?;
    Ok((DeterministicControl::merton(m), (t_end + 1.0) * (x / (t_end + 1.0)).ln() + drift))
}

/// The condition ledger for `spec` on `m`.
pub fn conditions(family: &WeightFamily, zeta: f64) -> Vec<ConditionCheck> {
    let mut out = vec![
        family.cap_attainable(zeta),
        family.phi_monotone(),
        family.riskless_sufficient(zeta),
        family.cap_slack(zeta),
    ];
    if family.kind() == RiskKind::Es {
        // the ES riskless case also needs the two interior hypotheses
        let extra = out[0].holds && out[1].holds;
        out[2].holds &= extra;
        out[2].statement.push_str(", together with cap_attainable and phi_monotone");
    }
    out
}

fn holds(conds: &[ConditionCheck], name: &str) -> bool {
    conds.iter().any(|c| c.name == name && c.holds)
}

/// Solves the capped problem for `spec.kind`.
pub fn solve(x: f64, m: &MarketModel, spec: &RiskSpec) -> Result<ConstrainedSolution> {
    let base = base_value(x, m)?;
    let family = WeightFamily::new(m, spec.alpha, spec.kind)?;
    let t_end = m.horizon();
    let kappa0 = t_end / (t_end + 1.0);
    let zeta = spec.zeta;
    let conds = conditions(&family, zeta);

    let consumption_value = |k: f64| (-k).ln_1p() + t_end * k.ln();
    let cap = family.lambda_cap().ok();

    let (regime, gamma, lambda, rho, weight, investment, gamma_value) = if family.theta_norm() == 0.0 {
        let g = kappa0.min(zeta);
        (Regime::ThetaZero, g, None, None, None, Investment::Zero, consumption_value(g))
    } else if holds(&conds, "cap_slack") {
        let theta = family.theta_norm();
        let w = WeightFn {
            lambda: 0.0,
            rho: theta,
            shrink: family.shrink(theta),
        };
        let value = consumption_value(kappa0) + 0.5 * family.k1();
        (
            Regime::Unconstrained,
            kappa0,
            Some(0.0),
            Some(theta),
            Some(w),
            Investment::ThetaMultiple(1.0),
            value,
        )
    } else if holds(&conds, "riskless_sufficient") {
        let c = family.lambda_cap()?;
        let w = WeightFn {
            lambda: c,
            rho: 0.0,
            shrink: family.shrink(0.0),
        };
        (
            Regime::Riskless,
            zeta,
            Some(c),
            Some(0.0),
            Some(w),
            Investment::Zero,
            consumption_value(zeta),
        )
    } else if holds(&conds, "phi_monotone") {
        let best = family.maximize_gamma(zeta)?;
        (
            Regime::Interior,
            best.kappa,
            Some(best.lambda),
            Some(best.weight.rho),
            Some(best.weight),
            Investment::Weighted(best.weight),
            best.value,
        )
    } else {
        let c = conds.iter().find(|c| c.name == "phi_monotone").unwrap();
        return Err(Error::Infeasible {
            condition: "phi_monotone",
            detail: format!(
                "no regime applies: {} fails ({} < {})",
                c.statement, c.value, c.threshold
            ),
        });
    };

    let control = DeterministicControl::new(t_end, investment, Consumption::Kappa(gamma))?;
    let feasibility = feasibility_sup_check(&control, m, spec, &feasibility_grid(m, &control))?;
    if !feasibility.feasible {
        return Err(Error::Numerical {
            what: "feasibility",
            detail: format!(
                "{regime} solution violates the cap: margin {:e} at t = {}",
                feasibility.min_margin, feasibility.argmin_t
            ),
        });
    }
    Ok(ConstrainedSolution {
        spec: *spec,
        x,
        regime,
        gamma,
        lambda,
        rho,
        lambda_cap: cap,
        weight,
        control,
        cost: base + gamma_value,
        base_value: base,
        gamma_value,
        conditions: conds,
        feasibility,
    })
}
