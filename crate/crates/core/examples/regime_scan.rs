//! Regime and optimal κ as the cap level moves, for both measures.
//!
//! cargo run --release -p riskcap --example regime_scan

use riskcap::{solution, MarketModel, RiskKind, RiskSpec};

fn main() -> riskcap::Result<()> {
    let markets = [
        ("M1", MarketModel::constant(1.0, 0.05, 0.10, 0.20)?, 0.01),
        ("M2", MarketModel::constant(1.0, 0.05, 0.35, 0.20)?, 1e-10),
        ("M0", MarketModel::constant(1.0, 0.05, 0.05, 0.20)?, 0.01),
    ];
    for (name, m, alpha) in &markets {
        for kind in [RiskKind::Var, RiskKind::Es] {
            for zeta in [0.05, 0.2, 0.4, 0.5, 0.6, 0.8] {
                let line = match solution::solve(1.0, m, &RiskSpec::new(*alpha, zeta, kind)?) {
                    Ok(s) => format!("{:<13} gamma {:.6}  J {:.8}", s.regime.to_string(), s.gamma, s.cost),
                    Err(e) => format!("no solution: {e}"),
                };
                println!("{name} {kind:<3} zeta {zeta:<4} {line}");
            }
        }
    }
    Ok(())
}
