//! Exact-law Monte Carlo check of a capped solution.
//!
//! cargo run --release -p riskcap --example monte_carlo_verify

use riskcap::montecarlo::{self, VerifyOptions};
use riskcap::{solution, DeterministicControl, MarketModel, RiskSpec};

fn main() -> riskcap::Result<()> {
    let m = MarketModel::constant(1.0, 0.05, 0.10, 0.20)?;

    let merton = DeterministicControl::merton(&m);
    let e = montecarlo::sample_ensemble(1.0, &merton, &m, &[0.5, 1.0], 200_000, 42)?;
    println!(
        "Merton at t = 1: empirical Q {:.6}, empirical ES {:.6}",
        montecarlo::empirical_quantile(&e, 0.01, 1.0)?,
        montecarlo::empirical_es(&e, 0.01, 1.0)?
    );

    let sol = solution::solve(1.0, &m, &RiskSpec::es(0.01, 0.5)?)?;
    let report = montecarlo::verify_solution(&sol, &m, &VerifyOptions::new(200_000, 7))?;
    for c in &report.times {
        println!(
            "t = {:<5} Q {:.6} vs {:.6}   ES {:.6} vs {:.6}  {}",
            c.t,
            c.quantile,
            c.empirical_quantile,
            c.es,
            c.empirical_es,
            if c.pass { "ok" } else { "off" }
        );
    }
    let cost = &report.cost;
    println!(
        "J = {:.6}, simulated {:.6} +- {:.6}; all checks pass: {}",
        cost.expected, cost.estimate.mean, cost.estimate.std_error, report.all_pass
    );
    Ok(())
}
