//! Canonical markets and small numerical helpers shared by the test targets.
#![allow(dead_code)]

use riskcap::{CoefficientPiece, MarketModel};

pub const M1_ALPHA: f64 = 0.01;
pub const M2_ALPHA: f64 = 1e-10;

/// d = 1, T = 1, r = 0.05, μ = 0.10, σ = 0.20, so θ = 0.25.
pub fn m1() -> MarketModel {
    MarketModel::constant(1.0, 0.05, 0.10, 0.20).unwrap()
}

/// θ = 1.5: with a tiny α the cap binds with a partly invested strategy.
pub fn m2() -> MarketModel {
    MarketModel::constant(1.0, 0.05, 0.35, 0.20).unwrap()
}

/// Three equal pieces over T = 1 with θ = 0.1, 0.3, 0.2.
pub fn m3() -> MarketModel {
    let third = 1.0 / 3.0;
    let piece = |k: usize, r: f64, mu: f64| CoefficientPiece {
        t_start: k as f64 * third,
        t_end: if k == 2 { 1.0 } else { (k + 1) as f64 * third },
        r,
        mu: vec![mu],
        sigma: vec![vec![0.2]],
    };
    MarketModel::new(1.0, 1, vec![piece(0, 0.05, 0.07), piece(1, 0.04, 0.10), piece(2, 0.03, 0.07)]).unwrap()
}

/// μ = r, so θ ≡ 0.
pub fn m0() -> MarketModel {
    MarketModel::constant(1.0, 0.05, 0.05, 0.20).unwrap()
}

/// Nelder–Mead maximization with the standard coefficients.
pub fn nelder_mead_max<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..iters {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let along = |s: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + s * (simplex[n][k] - centroid[k])).collect() };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr > vals[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe > fr {
                simplex[n] = expanded;
                vals[n] = fe;
            } else {
                simplex[n] = reflected;
                vals[n] = fr;
            }
        } else if fr > vals[n - 1] {
            simplex[n] = reflected;
            vals[n] = fr;
        } else {
            let contracted = along(0.5);
            let fc = f(&contracted);
            if fc > vals[n] {
                simplex[n] = contracted;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = (0..n).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                    vals[i] = f(&p);
                    simplex[i] = p;
                }
            }
        }
    }
    let best = (0..=n).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best].clone(), vals[best])
}
