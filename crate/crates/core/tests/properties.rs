//! Invariants as randomized properties.

mod common;

use common::{m1, m3, M1_ALPHA};
use proptest::prelude::*;
use riskcap::control::{Consumption, Investment};
use riskcap::riskmeasures::{self, normal};
use riskcap::shrinkage::WeightFamily;
use riskcap::solution::base_value;
use riskcap::{functionals, CoefficientPiece, DeterministicControl, Interp, MarketModel, RiskKind, Table};

fn kind() -> impl Strategy<Value = RiskKind> {
    prop_oneof![Just(RiskKind::Var), Just(RiskKind::Es)]
}

/// Random three-piece single-asset market on [0, T].
fn market() -> impl Strategy<Value = MarketModel> {
    (0.5f64..3.0, prop::collection::vec((0.0f64..0.08, -0.1f64..0.4, 0.1f64..0.5), 3)).prop_map(|(t_end, coefs)| {
        let pieces = coefs
            .iter()
            .enumerate()
            .map(|(k, &(r, excess, sigma))| CoefficientPiece {
                t_start: t_end * k as f64 / 3.0,
                t_end: if k == 2 { t_end } else { t_end * (k + 1) as f64 / 3.0 },
                r,
                mu: vec![r + excess * sigma],
                sigma: vec![vec![sigma]],
            })
            .collect();
        MarketModel::new(t_end, 1, pieces).unwrap()
    })
}

fn step_table(values: &[f64]) -> Table {
    let n = values.len();
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let mut rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    rows.push(vec![values[n - 1]]);
    Table::new(grid, rows, Interp::Step).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mills_ratio_stays_inside_its_bounds(y in 1e-2f64..50.0) {
        let r = normal::mills_ratio(y);
        prop_assert!(r < 1.0 / y);
        prop_assert!(r > 1.0 / y - 1.0 / y.powi(3));
    }

    #[test]
    fn inverse_normal_round_trips(p in 1e-12f64..0.999_999) {
        let z = normal::inverse_cdf(p);
        let back = if z < 0.0 { normal::tail(-z) } else { normal::cdf(z) };
        prop_assert!(((back - p) / p.min(1.0 - p)).abs() < 1e-12, "p = {p}, back = {back}");
    }

    #[test]
    fn iota_dominates_the_quantile(u in 0.0f64..20.0, alpha in 1e-8f64..0.4) {
        let q = normal::quantile_abs(alpha).unwrap();
        prop_assert!(riskmeasures::iota_alpha(u, alpha).unwrap() >= q);
    }

    #[test]
    fn norm_gap_is_nonnegative(
        y in prop::collection::vec(-2.0f64..2.0, 6),
        h in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        prop_assume!(y.iter().any(|v| v.abs() > 1e-3));
        let m = m3();
        let ctl = |v: &[f64]| DeterministicControl::new(1.0, Investment::Table(step_table(v)), Consumption::Zero).unwrap();
        let l = functionals::norm_gap_l(&m, &ctl(&y), &ctl(&h)).unwrap();
        prop_assert!(l >= -1e-12, "l = {l}");
    }

    #[test]
    fn es_dominates_var(c in 0.0f64..3.0, t in 0.01f64..1.0, alpha in 1e-6f64..0.3) {
        let m = m1();
        let ctl = DeterministicControl::new(1.0, Investment::ThetaMultiple(c), Consumption::Kappa(0.3)).unwrap();
        let var = riskmeasures::var_t(1.0, &ctl, &m, alpha, t).unwrap();
        let es = riskmeasures::es_t(1.0, &ctl, &m, alpha, t).unwrap();
        prop_assert!(es >= var - 1e-14);
    }

    #[test]
    fn rho_solves_its_equation(m in market(), frac in 0.02f64..0.98, kind in kind()) {
        prop_assume!(m.theta_norm() > 1e-3);
        let fam = WeightFamily::new(&m, M1_ALPHA, kind).unwrap();
        let Ok(cap) = fam.lambda_cap() else { return Ok(()); };
        let lambda = frac * cap;
        let rho = fam.rho(lambda).unwrap();
        prop_assert!((fam.g(rho, lambda).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn es_root_equation_is_below_the_var_one(u in 0.0f64..2.0, lambda in 0.0f64..2.0) {
        let m = m3();
        let var = WeightFamily::new(&m, M1_ALPHA, RiskKind::Var).unwrap();
        let es = WeightFamily::new(&m, M1_ALPHA, RiskKind::Es).unwrap();
        prop_assume!(u > 0.0 || lambda > 0.0);
        prop_assert!(es.g(u, lambda).unwrap() <= var.g(u, lambda).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn weights_lie_in_the_unit_interval(frac in 0.0f64..1.2, t in 0.0f64..1.0, kind in kind()) {
        let m = m3();
        let fam = WeightFamily::new(&m, M1_ALPHA, kind).unwrap();
        let w = fam.weight(frac * fam.lambda_cap().unwrap()).unwrap();
        let v = w.at_omega(m.omega(t));
        prop_assert!((0.0..=1.0).contains(&v), "weight {v}");
    }

    #[test]
    fn phi_inverse_round_trips(m in market(), frac in 0.01f64..0.99, kind in kind()) {
        prop_assume!(m.theta_norm() > 1e-3);
        let fam = WeightFamily::new(&m, M1_ALPHA, kind).unwrap();
        prop_assume!(fam.lambda_cap().is_ok() && fam.phi_monotone().holds);
        let a = frac * fam.phi_at_zero();
        let lambda = fam.phi_inverse_extended(a).unwrap();
        prop_assert!((fam.phi(lambda).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn gamma_value_is_the_cost_of_its_control(kappa_frac in 0.05f64..1.0, zeta in 0.05f64..0.6, kind in kind()) {
        let m = m3();
        let fam = WeightFamily::new(&m, M1_ALPHA, kind).unwrap();
        let point = fam.gamma_point(kappa_frac * zeta, zeta).unwrap();
        let ctl = DeterministicControl::new(1.0, Investment::Weighted(point.weight), Consumption::Kappa(point.kappa)).unwrap();
        let j = functionals::cost_j(1.0, &ctl, &m).unwrap().total;
        let expected = base_value(1.0, &m).unwrap() + point.value;
        prop_assert!((j - expected).abs() < 1e-9, "{j} vs {expected}");
    }

    #[test]
    fn kappa_paths_are_optimal_for_their_endpoint(kappa in 0.01f64..0.98) {
        let m = m1();
        let ctl = DeterministicControl::new(1.0, Investment::Zero, Consumption::Kappa(kappa)).unwrap();
        let end = ctl.cumulative_consumption(1.0);
        let value = functionals::i_functional(&m, &ctl).unwrap();
        let best = functionals::optimal_consumption(end, 1.0).unwrap();
        prop_assert!((value - best.value).abs() < 1e-10);
        prop_assert!((best.kappa - kappa).abs() < 1e-12);
    }
}
