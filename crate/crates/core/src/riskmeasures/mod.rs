//! Quantile, VaR and ES of the lognormal wealth law and the equivalent
//! logarithmic constraint processes.

pub mod normal;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::control::DeterministicControl;
use crate::error::{domain, Result};
use crate::functionals::wealth_log_mean_and_var;
use crate::market::MarketModel;

/// Default number of uniform cells for the feasibility scan.
pub const FEASIBILITY_CELLS: usize = 4096;
/// Slack allowed below ln(1-ζ) before a control is declared infeasible.
pub const FEASIBILITY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskKind {
    Var,
    Es,
}

impl fmt::Display for RiskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskKind::Var => "var",
            RiskKind::Es => "es",
        })
    }
}

/// Confidence level, risk coefficient and measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskSpec {
    pub alpha: f64,
    /// |q_α|.
    pub q_abs: f64,
    pub zeta: f64,
    pub kind: RiskKind,
}

impl RiskSpec {
    pub fn new(alpha: f64, zeta: f64, kind: RiskKind) -> Result<Self> {
        let q_abs = normal::quantile_abs(alpha)?;
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(domain(format!("zeta must lie in (0, 1), got {zeta}")));
        }
        Ok(Self {
            alpha,
            q_abs,
            zeta,
            kind,
        })
    }

    pub fn var(alpha: f64, zeta: f64) -> Result<Self> {
        Self::new(alpha, zeta, RiskKind::Var)
    }

    pub fn es(alpha: f64, zeta: f64) -> Result<Self> {
        Self::new(alpha, zeta, RiskKind::Es)
    }

    /// ln(1 - ζ), the lower bound for the log-constraint.
    pub fn log_bound(&self) -> f64 {
        (-self.zeta).ln_1p()
    }
}

/// q_α (negative).
pub fn normal_quantile(alpha: f64) -> Result<f64> {
    normal::quantile(alpha)
}

/// ϖ(y).
pub fn mills_ratio(y: f64) -> f64 {
    normal::mills_ratio(y)
}

/// F_α(z) = P(Z > z) / α for z ≥ |q_α|.
pub fn f_alpha(z: f64, alpha: f64) -> Result<f64> {
    let q = normal::quantile_abs(alpha)?;
    if !(z >= q) {
        return Err(domain(format!("F_alpha needs z >= |q_alpha| = {q}, got {z}")));
    }
    Ok(normal::ln_f_alpha(z, q).exp())
}

/// ι_α(u) = 1/ϖ(u + |q_α|) - u.
pub fn iota_alpha(u: f64, alpha: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(domain(format!("iota needs u >= 0, got {u}")));
    }
    Ok(normal::iota(u, normal::quantile_abs(alpha)?))
}

/// Q_t, the α-quantile of X_t.
pub fn quantile_q(x: f64, c: &DeterministicControl, m: &MarketModel, alpha: f64, t: f64) -> Result<f64> {
    let q = normal::quantile(alpha)?;
    let (mean, var) = wealth_log_mean_and_var(x, c, m, t)?;
    Ok((mean + q * var.sqrt()).exp())
}

/// VaR_t = x e^{R_t} - Q_t.
pub fn var_t(x: f64, c: &DeterministicControl, m: &MarketModel, alpha: f64, t: f64) -> Result<f64> {
    Ok(x * m.discount_r(t).exp() - quantile_q(x, c, m, alpha, t)?)
}

/// m_t = E(X_t | X_t ≤ Q_t).
pub fn tail_mean(x: f64, c: &DeterministicControl, m: &MarketModel, alpha: f64, t: f64) -> Result<f64> {
    let q = normal::quantile_abs(alpha)?;
    let (mean, var) = wealth_log_mean_and_var(x, c, m, t)?;
    let sd = var.sqrt();
    Ok((mean + 0.5 * var + normal::ln_f_alpha(q + sd, q)).exp())
}

/// ES_t = x e^{R_t} - m_t.
pub fn es_t(x: f64, c: &DeterministicControl, m: &MarketModel, alpha: f64, t: f64) -> Result<f64> {
    Ok(x * m.discount_r(t).exp() - tail_mean(x, c, m, alpha, t)?)
}

/// L_t = (y,θ)_t - ½‖y‖²_t - V_t - |q_α| ‖y‖_t.
pub fn log_constraint_var(c: &DeterministicControl, m: &MarketModel, alpha: f64, t: f64) -> Result<f64> {
    let q = normal::quantile_abs(alpha)?;
    let (yt, n2) = norms_at(c, m, t)?;
    Ok(var_log_ratio(yt, n2, c.cumulative_consumption(t), q))
}

/// L̄_t = (y,θ)_t - V_t + ln F_α(|q_α| + ‖y‖_t).
pub fn log_constraint_es(c: &DeterministicControl, m: &MarketModel, alpha: f64, t: f64) -> Result<f64> {
    let q = normal::quantile_abs(alpha)?;
    let (yt, n2) = norms_at(c, m, t)?;
    Ok(es_log_ratio(yt, n2, c.cumulative_consumption(t), q))
}

fn norms_at(c: &DeterministicControl, m: &MarketModel, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=m.horizon()).contains(&t) {
        return Err(domain(format!("time {t} outside [0, {}]", m.horizon())));
    }
    Ok((
        crate::functionals::y_theta(m, c, t)?,
        crate::functionals::y_norm_sq(m, c, t)?,
    ))
}

fn var_log_ratio(y_theta: f64, n2: f64, v_cum: f64, q: f64) -> f64 {
    y_theta - 0.5 * n2 - v_cum - q * n2.sqrt()
}

fn es_log_ratio(y_theta: f64, n2: f64, v_cum: f64, q: f64) -> f64 {
    y_theta - v_cum + normal::ln_f_alpha(q + n2.sqrt(), q)
}

/// The log-constraint of `spec.kind` at every point of a sorted grid.
pub fn log_constraint_path(
    c: &DeterministicControl,
    m: &MarketModel,
    spec: &RiskSpec,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let extra = c.breakpoints();
    let yt = m.cumulative_integrals(&|s| c.y_dot_theta(m, s), grid, &extra)?;
    let n2 = m.cumulative_integrals(&|s| c.y_sq(m, s), grid, &extra)?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let v = c.cumulative_consumption(t);
            match spec.kind {
                RiskKind::Var => var_log_ratio(yt[k], n2[k], v, spec.q_abs),
                RiskKind::Es => es_log_ratio(yt[k], n2[k], v, spec.q_abs),
            }
        })
        .collect())
}

/// Outcome of the uniform-in-time constraint scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// min_t L_t - ln(1-ζ).
    pub min_margin: f64,
    pub argmin_t: f64,
    /// L_T - ln(1-ζ).
    pub terminal_margin: f64,
}

/// Default scan grid: uniform cells plus market and control breakpoints.
pub fn feasibility_grid(m: &MarketModel, c: &DeterministicControl) -> Vec<f64> {
    let mut g = m.grid(FEASIBILITY_CELLS);
    g.extend(c.breakpoints().into_iter().filter(|&t| t >= 0.0 && t <= m.horizon()));
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

/// Evaluates the relevant log-constraint on `grid` and compares its minimum
/// with ln(1-ζ).
pub fn feasibility_sup_check(
    c: &DeterministicControl,
    m: &MarketModel,
    spec: &RiskSpec,
    grid: &[f64],
) -> Result<FeasibilityReport> {
    if grid.is_empty() {
        return Err(domain("feasibility grid is empty"));
    }
    let path = log_constraint_path(c, m, spec, grid)?;
    let bound = spec.log_bound();
    let (k, min) = path
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, v)| if v < best.1 { (k, v) } else { best });
    Ok(FeasibilityReport {
        feasible: min >= bound - FEASIBILITY_SLACK,
        min_margin: min - bound,
        argmin_t: grid[k],
        terminal_margin: path[path.len() - 1] - bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{Consumption, Investment};

    const Q: f64 = 2.326_347_874_040_841_1;

    fn m1() -> MarketModel {
        MarketModel::constant(1.0, 0.05, 0.10, 0.20).unwrap()
    }

    fn theta_only(m: &MarketModel) -> DeterministicControl {
        DeterministicControl::new(m.horizon(), Investment::ThetaMultiple(1.0), Consumption::Zero).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(RiskSpec::var(0.01, 0.1).is_ok());
        assert!(RiskSpec::var(0.5, 0.1).is_err());
        assert!(RiskSpec::es(0.01, 1.0).is_err());
        assert!(RiskSpec::es(0.01, 0.0).is_err());
        let s = RiskSpec::var(0.01, 0.1).unwrap();
        assert!((s.q_abs - Q).abs() < 1e-13);
        assert!((s.log_bound() - 0.9f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn f_alpha_examples() {
        assert_eq!(f_alpha(normal::quantile_abs(0.01).unwrap(), 0.01).unwrap(), 1.0);
        assert!((f_alpha(Q + 0.25, 0.01).unwrap() - 0.499_250_661_003_965_07).abs() < 1e-12);
        assert!(f_alpha(60.0, 0.01).unwrap() < 1e-300);
        assert!(f_alpha(2.0, 0.01).is_err());
    }

    #[test]
    fn iota_examples() {
        assert!((iota_alpha(0.0, 0.01).unwrap() - 2.665_214_220_345_804_8).abs() < 1e-12);
        assert!(iota_alpha(-1.0, 0.01).is_err());
    }

    #[test]
    fn quantile_examples() {
        let m = m1();
        let riskless = DeterministicControl::riskless(1.0);
        let q = quantile_q(2.0, &riskless, &m, 0.01, 0.4).unwrap();
        assert!((q - 2.0 * 0.02f64.exp()).abs() < 1e-15);
        let c = theta_only(&m);
        let q1 = quantile_q(1.0, &c, &m, 0.01, 1.0).unwrap();
        assert!((q1 - 0.606_326_312_411_069_69).abs() < 1e-12, "{q1}");
        assert_eq!(quantile_q(1.5, &c, &m, 0.01, 0.0).unwrap(), 1.5);
    }

    #[test]
    fn var_and_es_examples() {
        let m = m1();
        let c = theta_only(&m);
        let v = var_t(1.0, &c, &m, 0.01, 1.0).unwrap();
        assert!((v - 0.444_944_783_964_954_35).abs() < 1e-12);
        let e = es_t(1.0, &c, &m, 0.01, 1.0).unwrap();
        assert!((e - 0.492_573_532_401_119_32).abs() < 1e-12, "{e}");
        let riskless = DeterministicControl::riskless(1.0);
        assert!(var_t(1.0, &riskless, &m, 0.01, 1.0).unwrap().abs() < 1e-15);
        assert!(es_t(1.0, &riskless, &m, 0.01, 1.0).unwrap().abs() < 1e-15);
        let consume = DeterministicControl::new(1.0, Investment::Zero, Consumption::Kappa(0.5)).unwrap();
        let v = var_t(1.0, &consume, &m, 0.01, 1.0).unwrap();
        assert!((v - 0.05f64.exp() * 0.5).abs() < 1e-14);
    }

    #[test]
    fn log_constraints_match_ratios() {
        let m = m1();
        let c = DeterministicControl::new(1.0, Investment::ThetaMultiple(0.7), Consumption::Kappa(0.3)).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let bench = m.discount_r(t).exp();
            let l = log_constraint_var(&c, &m, 0.05, t).unwrap();
            let q = quantile_q(1.0, &c, &m, 0.05, t).unwrap();
            assert!((l.exp() - q / bench).abs() < 1e-13);
            let lb = log_constraint_es(&c, &m, 0.05, t).unwrap();
            let mt = tail_mean(1.0, &c, &m, 0.05, t).unwrap();
            assert!((lb.exp() - mt / bench).abs() < 1e-13);
        }
    }

    #[test]
    fn feasibility_examples() {
        let m = m1();
        let spec = RiskSpec::var(0.01, 0.3).unwrap();
        let riskless = DeterministicControl::riskless(1.0);
        let r = feasibility_sup_check(&riskless, &m, &spec, &feasibility_grid(&m, &riskless)).unwrap();
        assert!(r.feasible);
        assert!((r.min_margin + 0.7f64.ln()).abs() < 1e-15);
        let merton = DeterministicControl::merton(&m);
        let r = feasibility_sup_check(&merton, &m, &spec, &feasibility_grid(&m, &merton)).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.argmin_t, 1.0);
        let path = log_constraint_path(&merton, &m, &spec, &[0.25, 1.0]).unwrap();
        assert!((path[1] - log_constraint_var(&merton, &m, 0.01, 1.0).unwrap()).abs() < 1e-14);
    }
}
