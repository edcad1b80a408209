//! Load a piecewise market, inspect θ and integrate over its schedule.
//!
//! cargo run -p riskcap --example market_schedule

use riskcap::{CoefficientPiece, MarketModel};

fn piece(start: f64, end: f64, r: f64, mu: f64) -> CoefficientPiece {
    CoefficientPiece {
        t_start: start,
        t_end: end,
        r,
        mu: vec![mu],
        sigma: vec![vec![0.2]],
    }
}

fn main() -> riskcap::Result<()> {
    let third = 1.0 / 3.0;
    let m = MarketModel::new(
        1.0,
        1,
        vec![
            piece(0.0, third, 0.05, 0.07),
            piece(third, 2.0 * third, 0.04, 0.10),
            piece(2.0 * third, 1.0, 0.03, 0.07),
        ],
    )?;
    for t in [0.0, 0.2, 0.5, 0.9, 1.0] {
        println!("t = {t:.1}  theta = {:?}  r = {}", m.theta_at(t), m.r_at(t));
    }
    println!("||theta||_T     = {:.12}", m.theta_norm());
    println!("sup |theta|     = {:.12}", m.theta_sup());
    println!("R_T             = {:.12}", m.discount_r(1.0));
    let k1 = m.integrate(|t| m.omega(t) * m.theta_sq_at(t), 0.0, 1.0)?;
    println!("int omega|theta|^2 = {k1:.12}");

    // singular volatility is rejected with a readable message
    let bad = serde_json::json!({
        "T": 1.0, "d": 2,
        "pieces": [{"t_start": 0.0, "t_end": 1.0, "r": 0.0,
                    "mu": [0.1, 0.1], "sigma": [[0.2, 0.4], [0.1, 0.2]]}]
    });
    if let Err(e) = MarketModel::from_json(&bad.to_string()) {
        println!("rejected: {e}");
    }
    Ok(())
}
