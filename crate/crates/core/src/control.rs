//! Deterministic investment/consumption controls.
//!
//! A control pairs an investment function `y_t = σ'_t π_t` with a
//! consumption rate `v_t`. Solver output is kept in closed form so that
//! every functional can be evaluated to quadrature precision; controls read
//! from CSV are tabulated.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::market::MarketModel;

/// Weight function `ρ(ω+λ) / (λ c + ρ(ω+λ))` applied to θ, where `c` is the
/// shrink coefficient (|q_α| for VaR, ι_α(ρ) for ES).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFn {
    pub lambda: f64,
    pub rho: f64,
    pub shrink: f64,
}

impl WeightFn {
    pub fn at_omega(&self, omega: f64) -> f64 {
        if self.rho.is_infinite() {
            return 1.0;
        }
        let num = self.rho * (omega + self.lambda);
        let den = self.lambda * self.shrink + num;
        if den == 0.0 {
            // λ = ρ = 0 only arises for θ ≡ 0; the weight is irrelevant there.
            return 1.0;
        }
        num / den
    }
}

/// How tabulated values are read between grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Value of the left node held over the cell.
    Step,
    /// Local cubic through the four nearest nodes of the same smooth segment.
    Cubic,
}

/// Values sampled on a strictly increasing grid from 0 to T.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    interp: Interp,
    /// Segment boundaries (interior) that cubic interpolation must not cross.
    segments: Vec<f64>,
}

impl Table {
    pub fn new(grid: Vec<f64>, values: Vec<Vec<f64>>, interp: Interp) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::Validation("table grid needs at least two points".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::Validation("table grid and values differ in length".into()));
        }
        if grid[0] != 0.0 {
            return Err(Error::Validation("table grid must start at 0".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("table grid must be strictly increasing".into()));
        }
        let width = values[0].len();
        if values.iter().any(|v| v.len() != width) {
            return Err(Error::Validation("ragged table values".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite table value".into()));
        }
        Ok(Self {
            grid,
            values,
            interp,
            segments: Vec::new(),
        })
    }

    /// Sets interior boundaries that cubic interpolation treats as jumps.
    pub fn with_segments(mut self, segments: &[f64]) -> Self {
        let end = *self.grid.last().unwrap();
        self.segments = segments.iter().copied().filter(|&s| s > 0.0 && s < end).collect();
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn width(&self) -> usize {
        self.values[0].len()
    }

    fn cell(&self, t: f64) -> usize {
        let n = self.grid.len();
        self.grid.partition_point(|&g| g <= t).saturating_sub(1).min(n - 2)
    }

    /// Component `k` at time `t`.
    pub fn at(&self, t: f64, k: usize) -> f64 {
        let n = self.grid.len();
        if t >= self.grid[n - 1] {
            return self.values[n - 1][k];
        }
        let i = self.cell(t);
        match self.interp {
            Interp::Step => self.values[i][k],
            Interp::Cubic => {
                let (lo, hi) = self.segment_nodes(i);
                let count = hi - lo + 1;
                let take = count.min(4);
                let mut start = i.saturating_sub(1).max(lo);
                if start + take - 1 > hi {
                    start = hi + 1 - take;
                }
                let mut acc = 0.0;
                for a in start..start + take {
                    let mut l = 1.0;
                    for b in start..start + take {
                        if a != b {
                            l *= (t - self.grid[b]) / (self.grid[a] - self.grid[b]);
                        }
                    }
                    acc += l * self.values[a][k];
                }
                acc
            }
        }
    }

    /// Node index range of the smooth segment containing cell `i`.
    fn segment_nodes(&self, i: usize) -> (usize, usize) {
        let t = self.grid[i];
        let n = self.grid.len();
        let seg_lo = self.segments.iter().copied().filter(|&s| s <= t).fold(0.0, f64::max);
        let seg_hi = self
            .segments
            .iter()
            .copied()
            .filter(|&s| s > t)
            .fold(f64::INFINITY, f64::min);
        let lo = self.grid.partition_point(|&g| g < seg_lo);
        let hi = if seg_hi.is_infinite() {
            n - 1
        } else {
            self.grid.partition_point(|&g| g < seg_hi) - 1
        };
        (lo, hi.min(n - 1).max(lo))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Investment {
    Zero,
    /// y = c·θ.
    ThetaMultiple(f64),
    /// y = θ·w(t).
    Weighted(WeightFn),
    /// Tabulated d-vector.
    Table(Table),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Consumption {
    Zero,
    /// v^κ_t = κ / (T - κ t).
    Kappa(f64),
    /// Tabulated scalar.
    Table(Table),
}

/// A deterministic control on [0, T].
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicControl {
    horizon: f64,
    pub investment: Investment,
    pub consumption: Consumption,
}

impl DeterministicControl {
    pub fn new(horizon: f64, investment: Investment, consumption: Consumption) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Validation(format!("horizon must be positive, got {horizon}")));
        }
        if let Consumption::Kappa(k) = consumption {
            if !(k > 0.0 && k < 1.0) {
                return Err(Error::Validation(format!("kappa must lie in (0, 1), got {k}")));
            }
        }
        for table in [investment.table(), consumption.table()].into_iter().flatten() {
            let end = *table.grid().last().unwrap();
            if (end - horizon).abs() > 1e-12 * horizon.max(1.0) {
                return Err(Error::Validation(format!(
                    "table grid ends at {end}, horizon is {horizon}"
                )));
            }
        }
        if let Consumption::Table(t) = &consumption {
            if t.width() != 1 {
                return Err(Error::Validation("consumption table must be scalar".into()));
            }
        }
        Ok(Self {
            horizon,
            investment,
            consumption,
        })
    }

    /// The unconstrained optimum y = θ, v = 1/ω.
    pub fn merton(m: &MarketModel) -> Self {
        let t = m.horizon();
        Self::new(t, Investment::ThetaMultiple(1.0), Consumption::Kappa(t / (t + 1.0)))
            .expect("merton control is valid")
    }

    /// No investment and no consumption.
    pub fn riskless(horizon: f64) -> Self {
        Self::new(horizon, Investment::Zero, Consumption::Zero).expect("valid")
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// y_t as a vector.
    pub fn y_at(&self, m: &MarketModel, t: f64) -> Vec<f64> {
        let th = m.theta_at(t);
        match &self.investment {
            Investment::Zero => vec![0.0; m.dim()],
            Investment::ThetaMultiple(c) => th.iter().map(|x| c * x).collect(),
            Investment::Weighted(w) => {
                let s = w.at_omega(m.omega(t));
                th.iter().map(|x| s * x).collect()
            }
            Investment::Table(tab) => (0..tab.width()).map(|k| tab.at(t, k)).collect(),
        }
    }

    /// y'_t θ_t.
    pub fn y_dot_theta(&self, m: &MarketModel, t: f64) -> f64 {
        match &self.investment {
            Investment::Zero => 0.0,
            Investment::ThetaMultiple(c) => c * m.theta_sq_at(t),
            Investment::Weighted(w) => w.at_omega(m.omega(t)) * m.theta_sq_at(t),
            Investment::Table(tab) => {
                let th = m.theta_at(t);
                th.iter().enumerate().map(|(k, x)| tab.at(t, k) * x).sum()
            }
        }
    }

    /// |y_t|².
    pub fn y_sq(&self, m: &MarketModel, t: f64) -> f64 {
        match &self.investment {
            Investment::Zero => 0.0,
            Investment::ThetaMultiple(c) => c * c * m.theta_sq_at(t),
            Investment::Weighted(w) => {
                let s = w.at_omega(m.omega(t));
                s * s * m.theta_sq_at(t)
            }
            Investment::Table(tab) => (0..tab.width()).map(|k| tab.at(t, k).powi(2)).sum(),
        }
    }

    pub fn v_at(&self, t: f64) -> f64 {
        match &self.consumption {
            Consumption::Zero => 0.0,
            Consumption::Kappa(k) => k / (self.horizon - k * t),
            Consumption::Table(tab) => tab.at(t, 0),
        }
    }

    /// Grid points where the control may be non-smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = Vec::new();
        for table in [self.investment.table(), self.consumption.table()].into_iter().flatten() {
            b.extend_from_slice(table.grid());
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup();
        b
    }

    /// V_t = ∫_0^t v_u du.
    pub fn cumulative_consumption(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        match &self.consumption {
            Consumption::Zero => 0.0,
            Consumption::Kappa(k) => (self.horizon / (self.horizon - k * t)).ln(),
            Consumption::Table(tab) => table_integral(tab, t),
        }
    }

    /// Checks the integrability conditions on the grid representation:
    /// consumption must be strictly positive everywhere.
    pub fn validate_admissible(&self) -> Result<()> {
        match &self.consumption {
            Consumption::Zero => Err(Error::Validation(
                "consumption rate is zero, so ln v is not integrable".into(),
            )),
            Consumption::Kappa(_) => Ok(()),
            Consumption::Table(tab) => {
                let n = tab.grid().len();
                let cells = match tab.interp() {
                    Interp::Step => n - 1,
                    Interp::Cubic => n,
                };
                if let Some(i) = (0..cells).find(|&i| !(tab.values()[i][0] > 0.0)) {
                    return Err(Error::Validation(format!(
                        "consumption rate not positive on cell {i} (t = {})",
                        tab.grid()[i]
                    )));
                }
                if tab.interp() == Interp::Cubic {
                    // the interpolant may still dip; probe each cell midpoint
                    for w in tab.grid().windows(2) {
                        let mid = 0.5 * (w[0] + w[1]);
                        if !(tab.at(mid, 0) > 0.0) {
                            return Err(Error::Validation(format!(
                                "interpolated consumption not positive near t = {mid}"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Writes `t, y_1..y_d, v` rows on `grid`.
    pub fn write_csv<W: Write>(&self, m: &MarketModel, grid: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=m.dim()).map(|k| format!("y_{k}")));
        header.push("v".into());
        w.write_record(&header)?;
        for &t in grid {
            let mut row = vec![fmt_f64(t)];
            row.extend(self.y_at(m, t).into_iter().map(fmt_f64));
            row.push(fmt_f64(self.v_at(t)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a control CSV with columns `t, y_1..y_d, v` (extra trailing
    /// columns are ignored).
    pub fn read_csv<R: Read>(m: &MarketModel, input: R, interp: Interp) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("control CSV lacks column `{name}`")))
        };
        let t_col = col("t")?;
        let y_cols: Vec<usize> = (1..=m.dim()).map(|k| col(&format!("y_{k}"))).collect::<Result<_>>()?;
        let v_col = col("v")?;
        let mut grid = Vec::new();
        let mut ys = Vec::new();
        let mut vs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("control CSV: bad number in column {i}: {e}")))
            };
            grid.push(parse(t_col)?);
            ys.push(y_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?);
            vs.push(vec![parse(v_col)?]);
        }
        let segs = m.breakpoints();
        let y = Table::new(grid.clone(), ys, interp)?.with_segments(segs);
        let v = Table::new(grid, vs, interp)?.with_segments(segs);
        Self::new(m.horizon(), Investment::Table(y), Consumption::Table(v))
    }
}

impl Investment {
    fn table(&self) -> Option<&Table> {
        match self {
            Investment::Table(t) => Some(t),
            _ => None,
        }
    }
}

impl Consumption {
    fn table(&self) -> Option<&Table> {
        match self {
            Consumption::Table(t) => Some(t),
            _ => None,
        }
    }
}

/// ∫_0^t of a scalar table. Exact for both interpolation modes (cubics are
/// integrated with a 2-point Gauss rule per cell).
fn table_integral(tab: &Table, t: f64) -> f64 {
    let g = tab.grid();
    let mut acc = 0.0;
    for w in g.windows(2) {
        if w[0] >= t {
            break;
        }
        let b = w[1].min(t);
        acc += match tab.interp() {
            Interp::Step => tab.at(w[0], 0) * (b - w[0]),
            Interp::Cubic => {
                let mid = 0.5 * (w[0] + b);
                let half = 0.5 * (b - w[0]);
                let off = half / 3f64.sqrt();
                half * (tab.at(mid - off, 0) + tab.at(mid + off, 0))
            }
        };
    }
    acc
}

/// Shortest representation that round-trips to the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1() -> MarketModel {
        MarketModel::constant(1.0, 0.05, 0.10, 0.20).unwrap()
    }

    #[test]
    fn cumulative_consumption_examples() {
        let tab = Table::new(vec![0.0, 1.0], vec![vec![1.0], vec![1.0]], Interp::Step).unwrap();
        let c = DeterministicControl::new(1.0, Investment::Zero, Consumption::Table(tab)).unwrap();
        assert!((c.cumulative_consumption(0.7) - 0.7).abs() < 1e-15);
        assert_eq!(c.cumulative_consumption(0.0), 0.0);
        let k = DeterministicControl::new(1.0, Investment::Zero, Consumption::Kappa(0.5)).unwrap();
        assert!((k.cumulative_consumption(1.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kappa_zero_coincides_with_inverse_omega() {
        let m = MarketModel::constant(2.5, 0.0, 0.1, 0.2).unwrap();
        let c = DeterministicControl::merton(&m);
        for i in 0..=10 {
            let t = 2.5 * i as f64 / 10.0;
            assert!((c.v_at(t) - 1.0 / m.omega(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_kappa_and_nonpositive_consumption() {
        assert!(DeterministicControl::new(1.0, Investment::Zero, Consumption::Kappa(1.0)).is_err());
        let tab = Table::new(vec![0.0, 0.5, 1.0], vec![vec![1.0], vec![0.0], vec![1.0]], Interp::Step)
            .unwrap();
        let c = DeterministicControl::new(1.0, Investment::Zero, Consumption::Table(tab)).unwrap();
        assert!(c.validate_admissible().is_err());
        assert!(DeterministicControl::riskless(1.0).validate_admissible().is_err());
    }

    #[test]
    fn cubic_table_reproduces_cubics() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let f = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t.powi(3);
        let tab = Table::new(grid.clone(), grid.iter().map(|&t| vec![f(t)]).collect(), Interp::Cubic)
            .unwrap();
        for i in 0..100 {
            let t = i as f64 / 100.0 + 0.003;
            assert!((tab.at(t, 0) - f(t)).abs() < 1e-13);
        }
        let c = DeterministicControl::new(1.0, Investment::Zero, Consumption::Table(tab)).unwrap();
        let exact = 1.0 + 0.5 - 2.0 / 3.0 + 0.125;
        assert!((c.cumulative_consumption(1.0) - exact).abs() < 1e-14);
    }

    #[test]
    fn cubic_respects_segments() {
        let grid: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let f = |t: f64| if t < 0.5 { 1.0 } else { 3.0 };
        let tab = Table::new(grid.clone(), grid.iter().map(|&t| vec![f(t)]).collect(), Interp::Cubic)
            .unwrap()
            .with_segments(&[0.5]);
        assert!((tab.at(0.49, 0) - 1.0).abs() < 1e-14);
        assert!((tab.at(0.51, 0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip_step() {
        let m = m1();
        let grid = m.grid(8);
        let c = DeterministicControl::merton(&m);
        let mut buf = Vec::new();
        c.write_csv(&m, &grid, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,y_1,v"));
        let back = DeterministicControl::read_csv(&m, &buf[..], Interp::Step).unwrap();
        for &t in &grid {
            assert_eq!(back.y_at(&m, t)[0], 0.25);
            assert_eq!(back.v_at(t), c.v_at(t));
        }
    }
}
