//! Closed-form quantile, VaR and ES of wealth, plus the special functions
//! behind them.
//!
//! cargo run -p riskcap --example risk_measures

use riskcap::{riskmeasures, Consumption, DeterministicControl, Investment, MarketModel};

fn main() -> riskcap::Result<()> {
    let m = MarketModel::constant(1.0, 0.05, 0.10, 0.20)?;
    let c = DeterministicControl::new(1.0, Investment::ThetaMultiple(1.0), Consumption::Zero)?;
    let alpha = 0.01;
    println!("q_alpha = {:.15}", riskmeasures::normal_quantile(alpha)?);
    for y in [0.5, 2.0, 10.0, 40.0] {
        println!("mills({y}) = {:.15e}", riskmeasures::mills_ratio(y));
    }
    for t in [0.25, 0.5, 1.0] {
        println!(
            "t = {t:<4} Q {:.10}  VaR {:.10}  ES {:.10}",
            riskmeasures::quantile_q(1.0, &c, &m, alpha, t)?,
            riskmeasures::var_t(1.0, &c, &m, alpha, t)?,
            riskmeasures::es_t(1.0, &c, &m, alpha, t)?
        );
    }
    Ok(())
}
