//! Lagrange-weight machinery shared by the VaR and ES solvers.
//!
//! Both problems shrink the unconstrained strategy θ by a weight
//! `w(t) = ρ(ω+λ) / (λ c(ρ) + ρ(ω+λ))`. For VaR the shrink coefficient `c` is
//! |q_α|; for ES it is ι_α(ρ). Everything else (the root ρ(λ), the
//! constraint level Φ(λ), its inverse and the consumption objective Γ) has
//! the same shape.

use serde::Serialize;

use crate::control::WeightFn;
use crate::error::{domain, Error, Result};
use crate::market::MarketModel;
use crate::riskmeasures::{normal, RiskKind};
use crate::roots::{bisect, scan_refine_max};

/// Scan resolution for maximizing Γ.
pub const GAMMA_SCAN_POINTS: usize = 512;
/// Final bracket width of the golden-section refinement in κ.
pub const GAMMA_TOLERANCE: f64 = 1e-10;
/// Bracket width at which the ρ and Φ⁻¹ bisections stop.
pub const ROOT_TOLERANCE: f64 = 1e-14;
const RHO_FLOOR: f64 = 1e-14;
const MONOTONE_PROBES: usize = 8;

/// Precomputed data of one market and confidence level.
#[derive(Debug, Clone)]
pub struct WeightFamily<'a> {
    m: &'a MarketModel,
    kind: RiskKind,
    q: f64,
    theta_sq: f64,
    k1: f64,
    k2: f64,
}

/// Γ(κ) together with the multiplier and weight it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPoint {
    pub kappa: f64,
    pub value: f64,
    pub lambda: f64,
    pub weight: WeightFn,
}

/// One sufficient condition with the numbers it compares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub statement: String,
    pub holds: bool,
    pub value: f64,
    pub threshold: f64,
}

impl<'a> WeightFamily<'a> {
    pub fn new(m: &'a MarketModel, alpha: f64, kind: RiskKind) -> Result<Self> {
        let q = normal::quantile_abs(alpha)?;
        let k1 = m.integrate(|t| m.omega(t) * m.theta_sq_at(t), 0.0, m.horizon())?;
        let k2 = m.integrate(|t| m.omega(t).powi(2) * m.theta_sq_at(t), 0.0, m.horizon())?;
        Ok(Self {
            m,
            kind,
            q,
            theta_sq: m.theta_norm_sq(m.horizon()),
            k1,
            k2,
        })
    }

    pub fn market(&self) -> &MarketModel {
        self.m
    }

    pub fn kind(&self) -> RiskKind {
        self.kind
    }

    /// |q_α|.
    pub fn q_abs(&self) -> f64 {
        self.q
    }

    /// ‖θ‖_T.
    pub fn theta_norm(&self) -> f64 {
        self.theta_sq.sqrt()
    }

    /// ∫ ω |θ|² dt.
    pub fn k1(&self) -> f64 {
        self.k1
    }

    /// ∫ ω² |θ|² dt.
    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Shrink coefficient at root value `u`.
    pub fn shrink(&self, u: f64) -> f64 {
        match self.kind {
            RiskKind::Var => self.q,
            RiskKind::Es => normal::iota(u, self.q),
        }
    }

    /// G(u, λ) = ∫ (ω+λ)² |θ|² / (λ c(u) + u(ω+λ))² dt.
    pub fn g(&self, u: f64, lambda: f64) -> Result<f64> {
        if !(u >= 0.0 && lambda >= 0.0) {
            return Err(domain(format!("G needs u, lambda >= 0, got u = {u}, lambda = {lambda}")));
        }
        if u == 0.0 && lambda == 0.0 {
            return Err(domain("G is undefined at u = lambda = 0"));
        }
        if lambda == 0.0 {
            return Ok(self.theta_sq / (u * u));
        }
        let c = lambda * self.shrink(u);
        let m = self.m;
        m.integrate(
            |t| {
                let w = m.omega(t) + lambda;
                let r = w / (c + u * w);
                r * r * m.theta_sq_at(t)
            },
            0.0,
            m.horizon(),
        )
    }

    /// The multiplier at which the weight collapses to zero: the positive
    /// root of G(0, λ) = 1.
    pub fn lambda_cap(&self) -> Result<f64> {
        let theta = self.theta_norm();
        if !(theta > 0.0) {
            return Err(Error::Infeasible {
                condition: "theta_nonzero",
                detail: "the multiplier cap needs ||theta||_T > 0".into(),
            });
        }
        if !(self.q > theta) {
            return Err(Error::Infeasible {
                condition: "quantile_exceeds_theta",
                detail: format!("|q_alpha| = {} must exceed ||theta||_T = {theta}", self.q),
            });
        }
        let s = self.shrink(0.0);
        let den = s * s - self.theta_sq;
        Ok((self.k1 + (self.k2 * den + self.k1 * self.k1).sqrt()) / den)
    }

    /// ρ(λ) = inf{u ≥ 0 : G(u, λ) ≤ 1}.
    pub fn rho(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(domain(format!("rho needs lambda >= 0, got {lambda}")));
        }
        let theta = self.theta_norm();
        if theta == 0.0 {
            return Ok(0.0);
        }
        if lambda == 0.0 {
            return Ok(theta);
        }
        if self.g(0.0, lambda)? <= 1.0 {
            return Ok(0.0);
        }
        let residual = |u: f64| self.g(u, lambda).map(|v| v - 1.0);
        let lo = RHO_FLOOR;
        if residual(lo)? <= 0.0 {
            return Ok(lo);
        }
        // G(u, λ) ≤ ‖θ‖²/u², so u = ‖θ‖ already brackets; keep doubling for safety.
        let mut hi = theta;
        let mut doublings = 0;
        while residual(hi)? > 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::Numerical {
                    what: "rho",
                    detail: format!("no upper bracket for lambda = {lambda}"),
                });
            }
        }
        // Probe the bracket: monotone decrease is proven for VaR only, so
        // bisect inside the first sign-change cell.
        let mut a = lo;
        let mut b = hi;
        let mut prev = residual(lo)?;
        for k in 1..=MONOTONE_PROBES {
            let u = lo + (hi - lo) * k as f64 / MONOTONE_PROBES as f64;
            let cur = residual(u)?;
            if cur <= 0.0 {
                b = u;
                break;
            }
            if cur > prev {
                return Err(Error::Numerical {
                    what: "rho",
                    detail: format!("G(., {lambda}) is not decreasing near u = {u:e}"),
                });
            }
            a = u;
            prev = cur;
        }
        bisect(residual, a, b, ROOT_TOLERANCE)
    }

    /// The weight function at multiplier λ.
    pub fn weight(&self, lambda: f64) -> Result<WeightFn> {
        let rho = self.rho(lambda)?;
        Ok(WeightFn {
            lambda,
            rho,
            shrink: self.shrink(rho),
        })
    }

    /// (∫ w |θ|², ∫ w² |θ|²).
    fn weight_norms(&self, w: &WeightFn) -> Result<(f64, f64)> {
        let m = self.m;
        let n1 = m.integrate(|t| w.at_omega(m.omega(t)) * m.theta_sq_at(t), 0.0, m.horizon())?;
        let n2 = m.integrate(|t| w.at_omega(m.omega(t)).powi(2) * m.theta_sq_at(t), 0.0, m.horizon())?;
        Ok((n1, n2))
    }

    fn level(&self, n1: f64, n2: f64) -> f64 {
        match self.kind {
            RiskKind::Var => self.q * n2.sqrt() + 0.5 * n2 - n1,
            RiskKind::Es => -n1 - normal::ln_f_alpha(self.q + n2.sqrt(), self.q),
        }
    }

    /// Constraint level Φ(λ) of the weighted strategy θ w_λ.
    pub fn phi(&self, lambda: f64) -> Result<f64> {
        let w = self.weight(lambda)?;
        let (n1, n2) = self.weight_norms(&w)?;
        Ok(self.level(n1, n2))
    }

    /// Φ(0), in closed form.
    pub fn phi_at_zero(&self) -> f64 {
        self.level(self.theta_sq, self.theta_sq)
    }

    /// Φ⁻¹ on [0, Φ(0)], extended by 0 above Φ(0) and by the cap below 0.
    pub fn phi_inverse_extended(&self, a: f64) -> Result<f64> {
        if a >= self.phi_at_zero() {
            return Ok(0.0);
        }
        let cap = self.lambda_cap()?;
        if a <= 0.0 {
            return Ok(cap);
        }
        bisect(|l| self.phi(l).map(|p| p - a), 0.0, cap, ROOT_TOLERANCE)
    }

    /// Φ⁻¹(a) for a in [0, -ln(1-ζ)], refusing parameters outside the
    /// hypotheses under which Φ is invertible.
    pub fn phi_inverse_checked(&self, a: f64, zeta: f64) -> Result<f64> {
        let top = -(-zeta).ln_1p();
        if !(a >= 0.0 && a <= top) {
            return Err(domain(format!("a = {a} outside [0, -ln(1-zeta)] = [0, {top}]")));
        }
        for c in [self.cap_attainable(zeta), self.phi_monotone()] {
            if !c.holds {
                return Err(Error::Infeasible {
                    condition: c.name,
                    detail: format!("{} fails ({} vs {})", c.statement, c.value, c.threshold),
                });
            }
        }
        self.phi_inverse_extended(a)
    }

    /// Γ(κ) = ln(1-κ) + T ln κ + ∫ ω |θ|² (w - w²/2) dt with w at φ(κ).
    pub fn gamma_point(&self, kappa: f64, zeta: f64) -> Result<GammaPoint> {
        if kappa > zeta {
            return Err(domain(format!("kappa = {kappa} exceeds zeta = {zeta}")));
        }
        let t_end = self.m.horizon();
        let consumption = (-kappa).ln_1p() + t_end * kappa.ln();
        if self.theta_sq == 0.0 {
            let weight = WeightFn {
                lambda: 0.0,
                rho: 0.0,
                shrink: self.q,
            };
            return Ok(GammaPoint {
                kappa,
                value: consumption,
                lambda: 0.0,
                weight,
            });
        }
        if !(kappa > 0.0) {
            return Ok(GammaPoint {
                kappa,
                value: f64::NEG_INFINITY,
                lambda: f64::NAN,
                weight: WeightFn {
                    lambda: f64::NAN,
                    rho: 0.0,
                    shrink: self.q,
                },
            });
        }
        let a = (-kappa).ln_1p() - (-zeta).ln_1p();
        let lambda = self.phi_inverse_extended(a)?;
        let weight = self.weight(lambda)?;
        let m = self.m;
        let invest = m.integrate(
            |t| {
                let w = weight.at_omega(m.omega(t));
                m.omega(t) * m.theta_sq_at(t) * (w - 0.5 * w * w)
            },
            0.0,
            t_end,
        )?;
        Ok(GammaPoint {
            kappa,
            value: consumption + invest,
            lambda,
            weight,
        })
    }

    pub fn gamma(&self, kappa: f64, zeta: f64) -> Result<f64> {
        self.gamma_point(kappa, zeta).map(|p| p.value)
    }

    /// argmax of Γ over (0, ζ].
    pub fn maximize_gamma(&self, zeta: f64) -> Result<GammaPoint> {
        let kappa0 = self.m.horizon() / (self.m.horizon() + 1.0);
        if self.theta_sq == 0.0 {
            return self.gamma_point(kappa0.min(zeta), zeta);
        }
        let lo = zeta * 1e-6;
        let (kappa, _) = scan_refine_max(|k| self.gamma(k, zeta), lo, zeta, GAMMA_SCAN_POINTS, GAMMA_TOLERANCE)?;
        self.gamma_point(kappa, zeta)
    }

    /// ζ < 1 - e^{-Φ(0)}: the cap can be met by shrinking the investment.
    pub fn cap_attainable(&self, zeta: f64) -> ConditionCheck {
        let threshold = -(-self.phi_at_zero()).exp_m1();
        ConditionCheck {
            name: "cap_attainable",
            statement: "zeta < 1 - exp(-Phi(0))".into(),
            holds: zeta < threshold,
            value: zeta,
            threshold,
        }
    }

    /// Quantile large enough for Φ and the weights to be monotone in λ.
    pub fn phi_monotone(&self) -> ConditionCheck {
        let t_end = self.m.horizon();
        let base = 2.0 * (t_end + 1.0) * self.theta_norm();
        let (threshold, statement) = match self.kind {
            RiskKind::Var => (base, "|q_alpha| >= 2 (T+1) ||theta||_T"),
            RiskKind::Es => (base.max(1.0), "|q_alpha| >= max(1, 2 (T+1) ||theta||_T)"),
        };
        ConditionCheck {
            name: "phi_monotone",
            statement: statement.into(),
            holds: self.q >= threshold,
            value: self.q,
            threshold,
        }
    }

    /// Sufficient condition for the riskless strategy to be optimal.
    pub fn riskless_sufficient(&self, zeta: f64) -> ConditionCheck {
        let t_end = self.m.horizon();
        let kappa0 = t_end / (t_end + 1.0);
        let den = (1.0 - zeta) * t_end - zeta;
        let threshold = if zeta < kappa0 && den > 0.0 {
            let sup_sq = self.m.theta_sup().powi(2);
            (1.0 + t_end) * self.theta_norm() * (1.0 + zeta * (t_end + 1.0) * sup_sq / den)
        } else {
            f64::INFINITY
        };
        ConditionCheck {
            name: "riskless_sufficient",
            statement: "zeta < T/(T+1) and |q_alpha| >= (1+T) ||theta||_T (1 + zeta (T+1) sup|theta|^2 / ((1-zeta) T - zeta))".into(),
            holds: self.q >= threshold,
            value: self.q,
            threshold,
        }
    }

    /// ζ > 1 - e^{-Φ(0)}/(T+1) with a large enough quantile: the
    /// unconstrained optimum already meets the cap.
    pub fn cap_slack(&self, zeta: f64) -> ConditionCheck {
        let t_end = self.m.horizon();
        let threshold = 1.0 - (-self.phi_at_zero()).exp() / (t_end + 1.0);
        let theta = self.theta_norm();
        let (q_ok, statement) = match self.kind {
            RiskKind::Var => (self.q >= theta, "zeta > 1 - exp(-Phi(0))/(T+1) and |q_alpha| >= ||theta||_T"),
            RiskKind::Es => (
                self.q > theta.max(1.0),
                "zeta > 1 - exp(-Phi(0))/(T+1) and |q_alpha| > max(1, ||theta||_T)",
            ),
        };
        ConditionCheck {
            name: "cap_slack",
            statement: statement.into(),
            holds: zeta > threshold && q_ok,
            value: zeta,
            threshold,
        }
    }
}
