//! ES-capped optimum, its weight function and the summary JSON.
//!
//! cargo run --release -p riskcap --example es_constrained

use riskcap::{es_solver, MarketModel, RiskSpec};

fn main() -> riskcap::Result<()> {
    let m = MarketModel::constant(1.0, 0.05, 0.10, 0.20)?;
    let sol = es_solver::solve_es(1.0, &m, &RiskSpec::es(0.01, 0.5)?)?;
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("t = {t:<4} weight {:.8}  y = {:?}", sol.weight_at(&m, t), sol.control.y_at(&m, t));
    }
    println!("{}", serde_json::to_string_pretty(&sol.summary())?);
    Ok(())
}
