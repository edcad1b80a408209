//! VaR-capped optimum across cap levels, with the condition ledger.
//!
//! cargo run --release -p riskcap --example var_constrained

use riskcap::{var_solver, MarketModel, RiskSpec};

fn main() -> riskcap::Result<()> {
    let m = MarketModel::constant(1.0, 0.05, 0.10, 0.20)?;
    let alpha = 0.01;
    println!("lambda cap = {:.10}", var_solver::lambda_max(&m, alpha)?);
    for zeta in [0.1, 0.3, 0.5, 0.75] {
        let sol = var_solver::solve_var(1.0, &m, &RiskSpec::var(alpha, zeta)?)?;
        println!(
            "zeta {zeta:<4} {:<13} gamma {:.8}  J {:.10}  terminal margin {:.1e}",
            sol.regime.to_string(),
            sol.gamma,
            sol.cost,
            sol.feasibility.terminal_margin
        );
        for c in &sol.conditions {
            println!("    {:<20} {:<5} value {:.6} threshold {:.6}", c.name, c.holds, c.value, c.threshold);
        }
    }
    Ok(())
}
