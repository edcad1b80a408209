//! Best consumption for a fixed total V_T = b, compared with a perturbed
//! schedule.
//!
//! cargo run -p riskcap --example consumption_optimum

use riskcap::{functionals, Consumption, DeterministicControl, Interp, Investment, MarketModel, Table};

fn main() -> riskcap::Result<()> {
    let m = MarketModel::constant(1.0, 0.05, 0.10, 0.20)?;
    for b in [0.1, 0.5, 1.0, 3.0] {
        let best = functionals::optimal_consumption(b, 1.0)?;
        let direct = functionals::i_functional(&m, &best.control()?)?;
        println!("b = {b:<4} kappa {:.10}  I* {:.12}  I(f*) {:.12}", best.kappa, best.value, direct);
    }

    // bump the optimal path by a smooth h with h(0) = h(T) = 0
    let best = functionals::optimal_consumption(1.0, 1.0)?;
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
    let bumped: Vec<Vec<f64>> = grid
        .iter()
        .map(|&t| vec![best.rate(t) + 0.05 * (std::f64::consts::PI * t).cos() * std::f64::consts::PI])
        .collect();
    let c = DeterministicControl::new(1.0, Investment::Zero, Consumption::Table(Table::new(grid, bumped, Interp::Cubic)?))?;
    println!("perturbed I = {:.12} (optimum {:.12})", functionals::i_functional(&m, &c)?, best.value);
    Ok(())
}
