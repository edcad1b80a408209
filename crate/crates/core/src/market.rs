//! Deterministic Black–Scholes coefficient schedule.
//!
//! Coefficients are piecewise constant in time. Pieces are half-open
//! `[t_start, t_end)` except the last one, which is closed at the horizon.
//! Everything that integrates over time goes through [`MarketModel::integrate`],
//! which applies the quadrature rule separately on every smooth segment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

const TILING_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;

/// One constant-coefficient stretch of the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPiece {
    pub t_start: f64,
    pub t_end: f64,
    pub r: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// On-disk market description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub d: usize,
    pub pieces: Vec<CoefficientPiece>,
}

#[derive(Debug, Clone)]
pub struct MarketModel {
    horizon: f64,
    dim: usize,
    pieces: Vec<CoefficientPiece>,
    theta: Vec<Vec<f64>>,
    theta_sq: Vec<f64>,
    /// Piece start times followed by the horizon.
    breaks: Vec<f64>,
    quad: QuadratureSpec,
}

impl MarketModel {
    pub fn new(horizon: f64, dim: usize, pieces: Vec<CoefficientPiece>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Model(format!("horizon must be positive, got {horizon}")));
        }
        if dim == 0 {
            return Err(Error::Model("asset count d must be at least 1".into()));
        }
        if pieces.is_empty() {
            return Err(Error::Model("no coefficient pieces".into()));
        }
        let mut expected_start = 0.0;
        let mut theta = Vec::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if (p.t_start - expected_start).abs() > TILING_TOL {
                return Err(Error::Model(format!(
                    "piece {i} starts at {} but previous piece ends at {expected_start}",
                    p.t_start
                )));
            }
            if !(p.t_start < p.t_end) {
                return Err(Error::Model(format!("piece {i} has t_start >= t_end")));
            }
            if p.mu.len() != dim || p.sigma.len() != dim || p.sigma.iter().any(|row| row.len() != dim) {
                return Err(Error::Model(format!("piece {i} has coefficient shapes inconsistent with d={dim}")));
            }
            let finite = p.r.is_finite()
                && p.mu.iter().all(|v| v.is_finite())
                && p.sigma.iter().flatten().all(|v| v.is_finite());
            if !finite {
                return Err(Error::Model(format!("piece {i} has non-finite coefficients")));
            }
            let ones = vec![1.0; dim];
            solve_checked(&p.sigma, &ones)
                .map_err(|e| Error::Model(format!("sigma not invertible on piece {i}: {e}")))?;
            let excess: Vec<f64> = p.mu.iter().map(|m| m - p.r).collect();
            let th = solve_checked(&p.sigma, &excess)
                .map_err(|e| Error::Model(format!("sigma not invertible on piece {i}: {e}")))?;
            theta.push(th);
            expected_start = p.t_end;
        }
        if (expected_start - horizon).abs() > TILING_TOL {
            return Err(Error::Model(format!(
                "pieces end at {expected_start} but horizon is {horizon}"
            )));
        }
        let theta_sq = theta.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();
        let mut breaks: Vec<f64> = pieces.iter().map(|p| p.t_start).collect();
        breaks.push(horizon);
        Ok(Self {
            horizon,
            dim,
            pieces,
            theta,
            theta_sq,
            breaks,
            quad: QuadratureSpec::default(),
        })
    }

    /// Single-asset market with constant coefficients.
    pub fn constant(horizon: f64, r: f64, mu: f64, sigma: f64) -> Result<Self> {
        Self::new(
            horizon,
            1,
            vec![CoefficientPiece {
                t_start: 0.0,
                t_end: horizon,
                r,
                mu: vec![mu],
                sigma: vec![vec![sigma]],
            }],
        )
    }

    pub fn from_config(cfg: MarketConfig) -> Result<Self> {
        Self::new(cfg.horizon, cfg.d, cfg.pieces)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: MarketConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("market file: {e}")))?;
        Self::from_config(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn to_config(&self) -> MarketConfig {
        MarketConfig {
            horizon: self.horizon,
            d: self.dim,
            pieces: self.pieces.clone(),
        }
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[CoefficientPiece] {
        &self.pieces
    }

    /// Piece start times followed by the horizon.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// Index of the piece containing `t` (right-continuous, last piece closed).
    pub fn piece_index(&self, t: f64) -> usize {
        let n = self.pieces.len();
        // number of piece starts <= t, minus one
        let idx = self.breaks[..n].partition_point(|&s| s <= t);
        idx.saturating_sub(1).min(n - 1)
    }

    pub fn theta_at(&self, t: f64) -> &[f64] {
        &self.theta[self.piece_index(t)]
    }

    /// |θ_t|².
    pub fn theta_sq_at(&self, t: f64) -> f64 {
        self.theta_sq[self.piece_index(t)]
    }

    pub fn r_at(&self, t: f64) -> f64 {
        self.pieces[self.piece_index(t)].r
    }

    /// θ on each piece, in piece order.
    pub fn theta_pieces(&self) -> &[Vec<f64>] {
        &self.theta
    }

    /// sup_t |θ_t|.
    pub fn theta_sup(&self) -> f64 {
        self.theta_sq.iter().cloned().fold(0.0, f64::max).sqrt()
    }

    /// ω(t) = T - t + 1.
    pub fn omega(&self, t: f64) -> f64 {
        self.horizon - t + 1.0
    }

    /// R_t, the integrated short rate.
    pub fn discount_r(&self, t: f64) -> f64 {
        self.piecewise_area(t, |i| self.pieces[i].r)
    }

    /// ‖θ‖²_t.
    pub fn theta_norm_sq(&self, t: f64) -> f64 {
        self.piecewise_area(t, |i| self.theta_sq[i])
    }

    /// ‖θ‖_T.
    pub fn theta_norm(&self) -> f64 {
        self.theta_norm_sq(self.horizon).sqrt()
    }

    fn piecewise_area(&self, t: f64, value: impl Fn(usize) -> f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        let mut acc = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            if p.t_start >= t {
                break;
            }
            acc += value(i) * (p.t_end.min(t) - p.t_start);
        }
        acc
    }

    /// ∫_a^b f(t) dt with the model's quadrature rule, split at coefficient
    /// breakpoints.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_split(&f, a, b, &[], &self.quad)
    }

    pub fn integrate_with<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        quad: &QuadratureSpec,
    ) -> Result<f64> {
        self.integrate_split(&f, a, b, &[], quad)
    }

    /// ∫_a^b f(t) dt split at coefficient breakpoints and at the sorted
    /// `extra` breakpoints.
    pub fn integrate_split<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        extra: &[f64],
        quad: &QuadratureSpec,
    ) -> Result<f64> {
        if b < a {
            return Err(crate::error::domain(format!("integration bounds reversed: [{a}, {b}]")));
        }
        if b == a {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let mut left = a;
        let mut i = self.breaks.partition_point(|&s| s <= a);
        let mut j = extra.partition_point(|&s| s <= a);
        loop {
            let nb = self.breaks.get(i).copied().unwrap_or(f64::INFINITY);
            let ne = extra.get(j).copied().unwrap_or(f64::INFINITY);
            let next = nb.min(ne).min(b);
            if next > left {
                total += quad.integrate_smooth(f, left, next)?;
            }
            if next >= b {
                break;
            }
            if nb <= next {
                i += 1;
            }
            if ne <= next {
                j += 1;
            }
            left = next;
        }
        Ok(total)
    }

    /// Running integrals ∫_0^{t_k} f for sorted `times`, split at coefficient
    /// breakpoints and `extra`.
    pub fn cumulative_integrals<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        times: &[f64],
        extra: &[f64],
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &t in times {
            if t < prev {
                return Err(crate::error::domain("times must be sorted"));
            }
            acc += self.integrate_split(f, prev, t, extra, &self.quad)?;
            out.push(acc);
            prev = t;
        }
        Ok(out)
    }

    /// Uniform grid of `n` intervals on [0, T] merged with the coefficient
    /// breakpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        let mut g: Vec<f64> = (0..=n).map(|k| self.horizon * k as f64 / n as f64).collect();
        g.extend_from_slice(&self.breaks);
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * self.horizon);
        if let Some(last) = g.last_mut() {
            *last = self.horizon;
        }
        g
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting, rejecting
/// tiny pivots and large residuals.
pub(crate) fn solve_checked(a: &[Vec<f64>], b: &[f64]) -> std::result::Result<Vec<f64>, String> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err("matrix is zero".into());
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (piv, pval) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval < PIVOT_TOL * scale {
            return Err(format!("pivot {pval:e} below tolerance"));
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            if factor != 0.0 {
                for c in col..n {
                    m[r][c] -= factor * m[col][c];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    let res = a
        .iter()
        .zip(b)
        .map(|(row, bi)| (row.iter().zip(&x).map(|(aij, xj)| aij * xj).sum::<f64>() - bi).abs())
        .fold(0.0f64, f64::max);
    let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xnorm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res > RESIDUAL_TOL * (bnorm + scale * xnorm).max(f64::MIN_POSITIVE) {
        return Err(format!("residual {res:e} too large"));
    }
    Ok(x)
}
