//! Write a control to CSV, read it back and re-evaluate its cost.
//!
//! cargo run --release -p riskcap --example control_csv

use riskcap::{functionals, solution, DeterministicControl, Interp, MarketModel, RiskSpec};

fn main() -> riskcap::Result<()> {
    let m = MarketModel::constant(1.0, 0.05, 0.10, 0.20)?;
    let sol = solution::solve(1.0, &m, &RiskSpec::var(0.01, 0.5)?)?;
    let mut buf = Vec::new();
    sol.control.write_csv(&m, &m.grid(512), &mut buf)?;
    println!("{} bytes, first rows:", buf.len());
    for line in String::from_utf8_lossy(&buf).lines().take(3) {
        println!("  {line}");
    }
    for interp in [Interp::Step, Interp::Cubic] {
        let back = DeterministicControl::read_csv(&m, buf.as_slice(), interp)?;
        let j = functionals::cost_j(1.0, &back, &m)?.total;
        println!("{interp:?}: J {j:.12}, gap to solver {:.2e}", (j - sol.cost).abs());
    }
    Ok(())
}
