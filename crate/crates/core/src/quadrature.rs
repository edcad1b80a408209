//! Composite Gauss–Legendre quadrature with interval-halving refinement.

use std::sync::Arc;

use crate::error::{Error, Result};

const MAX_HALVINGS: u32 = 14;

/// Quadrature configuration: rule order per panel and the relative
/// tolerance between successive refinements.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    order: usize,
    refinement_tolerance: f64,
    nodes: Arc<[f64]>,
    weights: Arc<[f64]>,
}

impl QuadratureSpec {
    pub fn new(order: usize, refinement_tolerance: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::Config(format!("quadrature order must be >= 2, got {order}")));
        }
        if !(refinement_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "refinement tolerance must be positive, got {refinement_tolerance}"
            )));
        }
        let (nodes, weights) = gauss_legendre(order);
        Ok(Self {
            order,
            refinement_tolerance,
            nodes: nodes.into(),
            weights: weights.into(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn refinement_tolerance(&self) -> f64 {
        self.refinement_tolerance
    }

    /// Nodes on [-1, 1].
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite rule with `panels` equal panels on [a, b]. Returns the
    /// estimate and the matching estimate of the integral of |f|.
    fn composite<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, panels: usize) -> (f64, f64) {
        let h = (b - a) / panels as f64;
        let half = 0.5 * h;
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
                let v = f(mid + half * x);
                sum += w * v;
                abs_sum += w * v.abs();
            }
        }
        (sum * half, abs_sum * half)
    }

    /// Integrates a function that is smooth on [a, b]. Panels are halved
    /// until two successive estimates agree to the relative tolerance.
    pub fn integrate_smooth<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let (mut prev, _) = self.composite(f, a, b, 1);
        let mut panels = 2usize;
        for _ in 0..MAX_HALVINGS {
            let (cur, scale) = self.composite(f, a, b, panels);
            if !cur.is_finite() {
                return Err(Error::Numerical {
                    what: "quadrature",
                    detail: format!("non-finite integrand on [{a}, {b}]"),
                });
            }
            if (cur - prev).abs() <= self.refinement_tolerance * cur.abs().max(scale)
                || scale == 0.0
            {
                return Ok(cur);
            }
            prev = cur;
            panels *= 2;
        }
        let (last, _) = self.composite(f, a, b, panels);
        Err(Error::Numerical {
            what: "quadrature",
            detail: format!(
                "no convergence on [{a}, {b}] after {MAX_HALVINGS} halvings: last estimates {prev:e}, {last:e}"
            ),
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(16, 1e-12).expect("default quadrature spec is valid")
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
