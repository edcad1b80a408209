//! Unconstrained log-utility optimum and its cost, two ways.
//!
//! cargo run -p riskcap --example unconstrained_merton

use riskcap::{functionals, solution, MarketModel};

fn main() -> riskcap::Result<()> {
    let m = MarketModel::constant(1.0, 0.05, 0.10, 0.20)?;
    for x in [0.5, 1.0, 10.0] {
        let (control, closed_form) = solution::solve_unconstrained(x, &m)?;
        let quadrature = functionals::cost_j(x, &control, &m)?;
        println!(
            "x = {x:>4}: J closed form {closed_form:.12}, by quadrature {:.12} (rate {:.6}, consumption {:.6})",
            quadrature.total, quadrature.rate_term, quadrature.consumption_term
        );
    }
    let (c, _) = solution::solve_unconstrained(1.0, &m)?;
    for t in [0.0, 0.5, 1.0] {
        println!("t = {t}: y = {:?}, v = {:.6}", c.y_at(&m, t), c.v_at(t));
    }
    Ok(())
}
