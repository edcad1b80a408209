//! Cost and constraint functionals of a deterministic control.
//!
//! For a deterministic control the expected log-utility splits into a base
//! term, an investment term H(y) plus the riskless drift, and a consumption
//! term I(V) - V_T. The constraints at the horizon reduce to the scalar
//! functionals K (VaR) and K₁ (ES).

use std::cell::Cell;

use serde::Serialize;

use crate::control::{Consumption, DeterministicControl};
use crate::error::{domain, Error, Result};
use crate::market::MarketModel;
use crate::riskmeasures::normal;

/// Terms of the cost J(x, ν).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    #[serde(rename = "J")]
    pub total: f64,
    /// (T+1) ln x.
    pub base: f64,
    /// ∫ ω (r + y'θ - |y|²/2) dt.
    pub rate_term: f64,
    /// ∫ (ln v - V) dt - V_T.
    pub consumption_term: f64,
}

fn integrate_control<F: Fn(f64) -> f64>(
    m: &MarketModel,
    c: &DeterministicControl,
    f: F,
    a: f64,
    b: f64,
) -> Result<f64> {
    let extra = c.breakpoints();
    m.integrate_split(&f, a, b, &extra, m.quadrature())
}

fn check_time(m: &MarketModel, t: f64) -> Result<()> {
    if !(0.0..=m.horizon()).contains(&t) {
        return Err(domain(format!("time {t} outside [0, {}]", m.horizon())));
    }
    Ok(())
}

/// V_t.
pub fn cumulative_consumption(c: &DeterministicControl, t: f64) -> f64 {
    c.cumulative_consumption(t)
}

/// (y, θ)_t.
pub fn y_theta(m: &MarketModel, c: &DeterministicControl, t: f64) -> Result<f64> {
    integrate_control(m, c, |s| c.y_dot_theta(m, s), 0.0, t)
}

/// ‖y‖²_t.
pub fn y_norm_sq(m: &MarketModel, c: &DeterministicControl, t: f64) -> Result<f64> {
    integrate_control(m, c, |s| c.y_sq(m, s), 0.0, t)
}

/// J(x, ν) for a deterministic admissible control.
pub fn cost_j(x: f64, c: &DeterministicControl, m: &MarketModel) -> Result<CostBreakdown> {
    if !(x > 0.0) {
        return Err(domain(format!("initial wealth must be positive, got {x}")));
    }
    c.validate_admissible()?;
    let t_end = m.horizon();
    let base = (t_end + 1.0) * x.ln();
    let rate_term = integrate_control(
        m,
        c,
        |t| m.omega(t) * (m.r_at(t) + c.y_dot_theta(m, t) - 0.5 * c.y_sq(m, t)),
        0.0,
        t_end,
    )?;
    let consumption_term = i_functional(m, c)? - c.cumulative_consumption(t_end);
    Ok(CostBreakdown {
        total: base + rate_term + consumption_term,
        base,
        rate_term,
        consumption_term,
    })
}

/// I(V) = ∫ (ln v - V) dt for the consumption part of `c`.
pub fn i_functional(m: &MarketModel, c: &DeterministicControl) -> Result<f64> {
    c.validate_admissible()?;
    i_functional_of(m, |t| c.v_at(t), |t| c.cumulative_consumption(t), &c.breakpoints())
}

/// I(V) for an arbitrary path given by its rate and its cumulative value.
pub fn i_functional_of<F, G>(m: &MarketModel, rate: F, cumulative: G, extra: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let bad = Cell::new(None);
    let val = m.integrate_split(
        &|t| {
            let v = rate(t);
            if !(v > 0.0) {
                bad.set(Some(t));
                return 0.0;
            }
            v.ln() - cumulative(t)
        },
        0.0,
        m.horizon(),
        extra,
        m.quadrature(),
    )?;
    if let Some(t) = bad.get() {
        return Err(Error::Validation(format!("consumption rate not positive at t = {t}")));
    }
    Ok(val)
}

/// H(y) = ∫ ω (y'θ - |y|²/2) dt.
pub fn h_functional(m: &MarketModel, c: &DeterministicControl) -> Result<f64> {
    integrate_control(
        m,
        c,
        |t| m.omega(t) * (c.y_dot_theta(m, t) - 0.5 * c.y_sq(m, t)),
        0.0,
        m.horizon(),
    )
}

/// K(y) = ½‖y‖²_T + |q_α| ‖y‖_T - (y, θ)_T.
pub fn k_var(m: &MarketModel, c: &DeterministicControl, alpha: f64) -> Result<f64> {
    let q = normal::quantile_abs(alpha)?;
    let t = m.horizon();
    let n2 = y_norm_sq(m, c, t)?;
    Ok(0.5 * n2 + q * n2.sqrt() - y_theta(m, c, t)?)
}

/// K₁(y) = -(y, θ)_T - ln F_α(|q_α| + ‖y‖_T).
pub fn k_es(m: &MarketModel, c: &DeterministicControl, alpha: f64) -> Result<f64> {
    let q = normal::quantile_abs(alpha)?;
    let t = m.horizon();
    let n = y_norm_sq(m, c, t)?.sqrt();
    Ok(-y_theta(m, c, t)? - normal::ln_f_alpha(q + n, q))
}

/// Optimal cumulative consumption path with fixed terminal value b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalConsumption {
    pub horizon: f64,
    pub terminal: f64,
    /// Equivalent κ = 1 - e^{-b}.
    pub kappa: f64,
    /// Maximal value of I over paths from 0 to b.
    pub value: f64,
}

impl OptimalConsumption {
    /// f*(t) = ln(T e^b / (T e^b - t (e^b - 1))).
    pub fn path(&self, t: f64) -> f64 {
        let eb = self.terminal.exp();
        (self.horizon * eb / (self.horizon * eb - t * (eb - 1.0))).ln()
    }

    /// Derivative of the optimal path.
    pub fn rate(&self, t: f64) -> f64 {
        let eb = self.terminal.exp();
        (eb - 1.0) / (self.horizon * eb - t * (eb - 1.0))
    }

    pub fn control(&self) -> Result<DeterministicControl> {
        DeterministicControl::new(
            self.horizon,
            crate::control::Investment::Zero,
            Consumption::Kappa(self.kappa),
        )
    }
}

/// Maximizer of I over increasing paths with V_0 = 0 and V_T = b.
pub fn optimal_consumption(b: f64, horizon: f64) -> Result<OptimalConsumption> {
    if !(b > 0.0) {
        return Err(domain(format!("terminal consumption must be positive, got {b}")));
    }
    if !(horizon > 0.0) {
        return Err(domain(format!("horizon must be positive, got {horizon}")));
    }
    let kappa = -(-b).exp_m1();
    let value = -horizon * horizon.ln() + horizon * kappa.ln();
    Ok(OptimalConsumption {
        horizon,
        terminal: b,
        kappa,
        value,
    })
}

/// v^κ_t = κ / (T - t κ).
pub fn consumption_rate_kappa(kappa: f64, horizon: f64, t: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(domain(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    let den = horizon - t * kappa;
    if !(den > 0.0) {
        return Err(domain(format!("T - t kappa = {den} is not positive")));
    }
    Ok(kappa / den)
}

/// (a, b)_T = ∫ a'_t b_t dt for the investment parts of two controls.
pub fn inner(m: &MarketModel, a: &DeterministicControl, b: &DeterministicControl) -> Result<f64> {
    let mut extra = a.breakpoints();
    extra.extend(b.breakpoints());
    extra.sort_by(|x, y| x.partial_cmp(y).unwrap());
    extra.dedup();
    m.integrate_split(
        &|t| {
            let ya = a.y_at(m, t);
            let yb = b.y_at(m, t);
            ya.iter().zip(&yb).map(|(p, q)| p * q).sum()
        },
        0.0,
        m.horizon(),
        &extra,
        m.quadrature(),
    )
}

/// l_y(h) = ‖y+h‖_T - ‖y‖_T - (y/‖y‖_T, h)_T.
pub fn norm_gap_l(m: &MarketModel, y: &DeterministicControl, h: &DeterministicControl) -> Result<f64> {
    let yy = inner(m, y, y)?;
    if !(yy > 0.0) {
        return Err(domain("l_y(h) needs ‖y‖_T > 0"));
    }
    let yh = inner(m, y, h)?;
    let hh = inner(m, h, h)?;
    let ny = yy.sqrt();
    let nyh = (yy + 2.0 * yh + hh).max(0.0).sqrt();
    Ok(nyh - ny - yh / ny)
}

/// Mean and variance of ln X_t under the exact lognormal law.
pub fn wealth_log_mean_and_var(
    x: f64,
    c: &DeterministicControl,
    m: &MarketModel,
    t: f64,
) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(domain(format!("initial wealth must be positive, got {x}")));
    }
    check_time(m, t)?;
    let var = y_norm_sq(m, c, t)?;
    let mean = x.ln() + m.discount_r(t) - c.cumulative_consumption(t) + y_theta(m, c, t)? - 0.5 * var;
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{Interp, Investment, Table};

    fn m1() -> MarketModel {
        MarketModel::constant(1.0, 0.05, 0.10, 0.20).unwrap()
    }

    fn zero_market() -> MarketModel {
        MarketModel::constant(1.0, 0.0, 0.0, 0.2).unwrap()
    }

    fn ctl(m: &MarketModel, y: Investment, v: Consumption) -> DeterministicControl {
        DeterministicControl::new(m.horizon(), y, v).unwrap()
    }

    #[test]
    fn cost_at_unconstrained_optimum() {
        let m = m1();
        let j = cost_j(1.0, &DeterministicControl::merton(&m), &m).unwrap();
        // 2 ln(1/2) + ∫(2-t)(0.05 + 0.03125) dt
        let expected = 2.0 * 0.5f64.ln() + 1.5 * 0.08125;
        assert!((j.total - expected).abs() < 1e-12, "{}", j.total);
        assert!((j.total - (-1.264419361119891)).abs() < 1e-12);
        assert_eq!(j.base, 0.0);
    }

    #[test]
    fn cost_zero_market_matches_lemma_value() {
        let m = zero_market();
        let c = ctl(&m, Investment::Zero, Consumption::Kappa(0.5));
        let j = cost_j(1.0, &c, &m).unwrap();
        // I*(ln 2) - V_T = -ln 2 - ln 2
        assert!((j.total + 2.0 * 2f64.ln()).abs() < 1e-12, "{}", j.total);
        assert!((j.consumption_term + 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cost_base_term_and_errors() {
        let m = zero_market();
        let c = ctl(&m, Investment::Zero, Consumption::Kappa(0.5));
        let j = cost_j(std::f64::consts::E, &c, &m).unwrap();
        assert!((j.base - 2.0).abs() < 1e-15);
        assert!((j.total - j.base - j.rate_term - j.consumption_term).abs() < 1e-15);
        assert!(matches!(cost_j(0.0, &c, &m), Err(Error::Domain(_))));
        let bad = DeterministicControl::riskless(1.0);
        assert!(matches!(cost_j(1.0, &bad, &m), Err(Error::Validation(_))));
    }

    #[test]
    fn i_functional_examples() {
        let m = zero_market();
        let opt = optimal_consumption(2f64.ln(), 1.0).unwrap();
        assert!((opt.value + 2f64.ln()).abs() < 1e-15);
        let i = i_functional(&m, &opt.control().unwrap()).unwrap();
        assert!((i + 2f64.ln()).abs() < 1e-12);
        // linear path with V_T = b: ln b - b/2
        let b = 0.8;
        let lin = ctl(
            &m,
            Investment::Zero,
            Consumption::Table(Table::new(vec![0.0, 1.0], vec![vec![b], vec![b]], Interp::Step).unwrap()),
        );
        assert!((i_functional(&m, &lin).unwrap() - (b.ln() - b / 2.0)).abs() < 1e-14);
        // large b tends to -T ln T = 0
        let big = optimal_consumption(40.0, 1.0).unwrap();
        assert!(big.value.abs() < 1e-15);
    }

    #[test]
    fn optimal_path_examples() {
        let opt = optimal_consumption(2f64.ln(), 1.0).unwrap();
        assert!((opt.path(0.5) - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        for b in [0.01, 0.5, 3.0] {
            let o = optimal_consumption(b, 2.0).unwrap();
            assert!((o.path(2.0) - b).abs() < 1e-14);
            assert_eq!(o.path(0.0), 0.0);
        }
        assert!(optimal_consumption(0.0, 1.0).is_err());
    }

    #[test]
    fn kappa_rate_examples() {
        assert_eq!(consumption_rate_kappa(0.5, 1.0, 0.0).unwrap(), 0.5);
        assert_eq!(consumption_rate_kappa(0.5, 1.0, 1.0).unwrap(), 1.0);
        assert!(consumption_rate_kappa(1.0, 1.0, 1.0).is_err());
        let t_end = 3.0;
        let k0 = t_end / (t_end + 1.0);
        for t in [0.0, 1.0, 2.9] {
            let v = consumption_rate_kappa(k0, t_end, t).unwrap();
            assert!((v - 1.0 / (t_end - t + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn h_functional_examples() {
        let m = m1();
        let h = |y| h_functional(&m, &ctl(&m, y, Consumption::Zero)).unwrap();
        assert!((h(Investment::ThetaMultiple(1.0)) - 0.046875).abs() < 1e-15);
        assert_eq!(h(Investment::Zero), 0.0);
        assert!(h(Investment::ThetaMultiple(2.0)).abs() < 1e-16);
    }

    #[test]
    fn k_var_examples() {
        let m = m1();
        let q = 2.326347874040841;
        let k = |c: f64| k_var(&m, &ctl(&m, Investment::ThetaMultiple(c), Consumption::Zero), 0.01).unwrap();
        assert_eq!(k(0.0), 0.0);
        assert!((k(1.0) - (0.03125 + q * 0.25 - 0.0625)).abs() < 1e-12);
        assert!((k(-1.0) - (0.03125 + q * 0.25 + 0.0625)).abs() < 1e-12);
    }

    #[test]
    fn k_es_examples() {
        let m = m1();
        let k = |c: f64| k_es(&m, &ctl(&m, Investment::ThetaMultiple(c), Consumption::Zero), 0.01).unwrap();
        assert_eq!(k(0.0), 0.0);
        // mpmath: ln F_0.01(2.576347874...) = -0.6946469826931679
        assert!((k(1.0) - (-0.0625 + 0.6946469826931679)).abs() < 1e-12);
        for c in [-1.0, 0.3, 2.0] {
            assert!(k(c) > 0.0);
        }
    }

    #[test]
    fn norm_gap_examples() {
        let m = m1();
        let y = ctl(&m, Investment::ThetaMultiple(1.0), Consumption::Zero);
        let l = |a: f64| norm_gap_l(&m, &y, &ctl(&m, Investment::ThetaMultiple(a), Consumption::Zero)).unwrap();
        assert!(l(0.7).abs() < 1e-15);
        assert!(l(-1.0).abs() < 1e-15);
        assert!((l(-2.0) - 0.5).abs() < 1e-14);
        // h orthogonal to y with equal norm: ±θ on the two halves of [0, 1]
        let tab = Table::new(vec![0.0, 0.5, 1.0], vec![vec![0.25], vec![-0.25], vec![-0.25]], Interp::Step)
            .unwrap();
        let h = ctl(&m, Investment::Table(tab), Consumption::Zero);
        let got = norm_gap_l(&m, &y, &h).unwrap();
        assert!((got - (2f64.sqrt() - 1.0) * 0.25).abs() < 1e-14);
        assert!(norm_gap_l(&m, &DeterministicControl::riskless(1.0), &y).is_err());
    }

    #[test]
    fn wealth_law_examples() {
        let m = m1();
        let (mean, var) = wealth_log_mean_and_var(1.0, &DeterministicControl::riskless(1.0), &m, 0.6).unwrap();
        assert!((mean - 0.03).abs() < 1e-15 && var == 0.0);
        let c = ctl(&m, Investment::ThetaMultiple(1.0), Consumption::Zero);
        let (mean, var) = wealth_log_mean_and_var(1.0, &c, &m, 1.0).unwrap();
        assert!((mean - 0.08125).abs() < 1e-14);
        assert!((var - 0.0625).abs() < 1e-15);
        let (mean, var) = wealth_log_mean_and_var(2.0, &c, &m, 0.0).unwrap();
        assert_eq!((mean, var), (2f64.ln(), 0.0));
    }
}
