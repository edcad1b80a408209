//! Exact-law Monte Carlo for the wealth process under a deterministic
//! control.
//!
//! For a deterministic control ln X_t is Gaussian with independent
//! increments, so paths are sampled exactly on any time grid. Each path owns
//! a ChaCha8 stream keyed by the master seed and the path index; draws are
//! consumed in time order, so the ensemble does not depend on the number of
//! workers.

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{fmt_f64, DeterministicControl};
use crate::error::{domain, Error, Result};
use crate::market::MarketModel;
use crate::riskmeasures::{self, normal, RiskKind, RiskSpec};
use crate::solution::ConstrainedSolution;

/// Number of times in (0, T] checked by [`verify_solution`].
pub const VERIFY_TIMES: usize = 8;
/// Time steps of the trapezoid rule in the cost estimate.
pub const COST_STEPS: usize = 256;
/// Width of the statistical acceptance band, in standard errors.
pub const SIGMA_BAND: f64 = 5.0;
const COST_STREAM_BIT: u64 = 1 << 63;

/// Samples of ln X at a few times, one row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthSampleEnsemble {
    pub times: Vec<f64>,
    /// Row-major `n_paths × times.len()`.
    pub log_samples: Vec<f64>,
    pub master_seed: u64,
    pub n_paths: usize,
    pub x: f64,
    /// x e^{R_t} at each time.
    pub benchmark: Vec<f64>,
}

impl WealthSampleEnsemble {
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * self.times.last().copied().unwrap_or(1.0).max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| domain(format!("time {t} was not sampled")))
    }

    /// ln X at time index `k` for every path.
    pub fn column(&self, k: usize) -> Vec<f64> {
        let w = self.times.len();
        (0..self.n_paths).map(|p| self.log_samples[p * w + k]).collect()
    }
}

/// Deterministic part of ln X and the variance increments on `times`.
struct LogLaw {
    mean: Vec<f64>,
    step_sd: Vec<f64>,
}

fn log_law(x: f64, c: &DeterministicControl, m: &MarketModel, times: &[f64]) -> Result<LogLaw> {
    let extra = c.breakpoints();
    let yt = m.cumulative_integrals(&|s| c.y_dot_theta(m, s), times, &extra)?;
    let n2 = m.cumulative_integrals(&|s| c.y_sq(m, s), times, &extra)?;
    let mut prev = 0.0;
    let mut step_sd = Vec::with_capacity(times.len());
    let mut mean = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        mean.push(x.ln() + m.discount_r(t) - c.cumulative_consumption(t) + yt[k] - 0.5 * n2[k]);
        step_sd.push((n2[k] - prev).max(0.0).sqrt());
        prev = n2[k];
    }
    Ok(LogLaw { mean, step_sd })
}

fn master_key(seed: u64) -> [u8; 32] {
    ChaCha8Rng::seed_from_u64(seed).get_seed()
}

fn path_rng(key: [u8; 32], stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Uniform on (0, 1) from the top 53 bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    normal::inverse_cdf(uniform(rng))
}

/// Runs `job` on a pool of `workers` threads, or on the ambient pool when
/// `workers` is 0.
pub fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn check_times(m: &MarketModel, times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(domain("no sample times"));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(domain("sample times must be strictly increasing"));
        }
    }
    if times[0] < 0.0 || *times.last().unwrap() > m.horizon() {
        return Err(domain(format!("sample times must lie in [0, {}]", m.horizon())));
    }
    Ok(())
}

/// Samples ln X_t jointly at `times` on the ambient thread pool.
pub fn sample_ensemble(
    x: f64,
    c: &DeterministicControl,
    m: &MarketModel,
    times: &[f64],
    n_paths: usize,
    master_seed: u64,
) -> Result<WealthSampleEnsemble> {
    sample_ensemble_with(x, c, m, times, n_paths, master_seed, 0)
}

/// As [`sample_ensemble`] with an explicit worker count (0 = ambient pool).
pub fn sample_ensemble_with(
    x: f64,
    c: &DeterministicControl,
    m: &MarketModel,
    times: &[f64],
    n_paths: usize,
    master_seed: u64,
    workers: usize,
) -> Result<WealthSampleEnsemble> {
    if !(x > 0.0) {
        return Err(domain(format!("initial wealth must be positive, got {x}")));
    }
    if n_paths == 0 {
        return Err(domain("need at least one path"));
    }
    check_times(m, times)?;
    let law = log_law(x, c, m, times)?;
    let width = times.len();
    let key = master_key(master_seed);
    let mut log_samples = vec![0.0; n_paths * width];
    with_workers(workers, || {
        log_samples.par_chunks_mut(width).enumerate().for_each(|(p, row)| {
            let mut rng = path_rng(key, p as u64);
            let mut noise = 0.0;
            for k in 0..width {
                let z = std_normal(&mut rng);
                noise += law.step_sd[k] * z;
                row[k] = law.mean[k] + noise;
            }
        })
    })?;
    Ok(WealthSampleEnsemble {
        times: times.to_vec(),
        log_samples,
        master_seed,
        n_paths,
        x,
        benchmark: times.iter().map(|&t| x * m.discount_r(t).exp()).collect(),
    })
}

fn tail_rank(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if (n as f64) * alpha < 1.0 {
        return Err(domain(format!(
            "n * alpha = {} < 1: {n} paths cannot resolve the {alpha} tail",
            n as f64 * alpha
        )));
    }
    Ok(((alpha * n as f64).ceil() as usize).clamp(1, n))
}

/// Sorted-position statistics of one column: (quantile of ln X, tail values of X).
fn tail_of(e: &WealthSampleEnsemble, alpha: f64, t: f64) -> Result<(f64, Vec<f64>)> {
    let k = e.time_index(t)?;
    let rank = tail_rank(e.n_paths, alpha)?;
    let mut col = e.column(k);
    let (_, pivot, _) = col.select_nth_unstable_by(rank - 1, f64::total_cmp);
    let q = *pivot;
    let tail: Vec<f64> = e.log_samples[k..]
        .iter()
        .step_by(e.times.len())
        .filter(|&&v| v <= q)
        .map(|v| v.exp())
        .collect();
    Ok((q, tail))
}

/// Lower empirical α-quantile of X_t (order statistic of rank ⌈αn⌉).
pub fn empirical_quantile(e: &WealthSampleEnsemble, alpha: f64, t: f64) -> Result<f64> {
    tail_of(e, alpha, t).map(|(q, _)| q.exp())
}

/// x e^{R_t} minus the empirical quantile.
pub fn empirical_var(e: &WealthSampleEnsemble, alpha: f64, t: f64) -> Result<f64> {
    Ok(e.benchmark[e.time_index(t)?] - empirical_quantile(e, alpha, t)?)
}

/// x e^{R_t} minus the mean of the samples at or below the empirical quantile.
pub fn empirical_es(e: &WealthSampleEnsemble, alpha: f64, t: f64) -> Result<f64> {
    let (_, tail) = tail_of(e, alpha, t)?;
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    Ok(e.benchmark[e.time_index(t)?] - mean)
}

/// Writes `path,t,lnX` rows.
pub fn write_samples_csv<W: Write>(e: &WealthSampleEnsemble, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "t", "lnX"])?;
    for p in 0..e.n_paths {
        for (k, &t) in e.times.iter().enumerate() {
            w.write_record([p.to_string(), fmt_f64(t), fmt_f64(e.log_samples[p * e.times.len() + k])])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Monte Carlo estimate of J = E(∫ ln(v_t X_t) dt + ln X_T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Trapezoid value of the expected integrand minus the exact J; the
    /// estimate converges to J plus this amount.
    pub discretization_bias: f64,
    pub n_paths: usize,
    pub steps: usize,
}

/// Estimates J by sampling ln X on a uniform grid of `steps` cells and
/// integrating each path with the trapezoid rule.
pub fn estimate_cost(
    x: f64,
    c: &DeterministicControl,
    m: &MarketModel,
    n_paths: usize,
    master_seed: u64,
    steps: usize,
    workers: usize,
) -> Result<CostEstimate> {
    c.validate_admissible()?;
    if n_paths < 2 {
        return Err(domain("the cost estimate needs at least two paths"));
    }
    let steps = steps.max(1);
    let t_end = m.horizon();
    let h = t_end / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|j| if j == steps { t_end } else { j as f64 * h }).collect();
    let law = log_law(x, c, m, &times)?;
    let ln_v: Vec<f64> = times.iter().map(|&t| c.v_at(t).ln()).collect();
    let weight = |j: usize| if j == 0 || j == steps { 0.5 * h } else { h };
    let key = master_key(master_seed);
    let values: Vec<f64> = with_workers(workers, || {
        (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(key, COST_STREAM_BIT | p as u64);
                let mut noise = 0.0;
                let mut acc = 0.0;
                let mut last = 0.0;
                for j in 0..=steps {
                    let z = std_normal(&mut rng);
                    noise += law.step_sd[j] * z;
                    last = law.mean[j] + noise;
                    acc += weight(j) * (ln_v[j] + last);
                }
                acc + last
            })
            .collect()
    })?;
    let n = n_paths as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let expected_trap: f64 =
        (0..=steps).map(|j| weight(j) * (ln_v[j] + law.mean[j])).sum::<f64>() + law.mean[steps];
    let exact = crate::functionals::cost_j(x, c, m)?.total;
    Ok(CostEstimate {
        mean,
        std_error: (var / n).sqrt(),
        discretization_bias: expected_trap - exact,
        n_paths,
        steps,
    })
}

/// Closed form against empirical values at one time.
#[derive(Debug, Clone, Serialize)]
pub struct TimeCheck {
    pub t: f64,
    pub quantile: f64,
    pub empirical_quantile: f64,
    pub quantile_tolerance: f64,
    pub var: f64,
    pub empirical_var: f64,
    pub es: f64,
    pub empirical_es: f64,
    pub es_tolerance: f64,
    /// Empirical risk of the capped measure divided by ζ x e^{R_t}.
    pub risk_ratio: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapCheck {
    pub measure: RiskKind,
    pub zeta: f64,
    pub sup_ratio: f64,
    /// Statistical allowance added to 1.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostCheck {
    pub expected: f64,
    pub estimate: CostEstimate,
    pub z_score: f64,
    pub pass: bool,
}

/// End-to-end comparison of closed forms with simulation.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub n_paths: usize,
    pub seed: u64,
    pub alpha: f64,
    pub times: Vec<TimeCheck>,
    pub cap: Option<CapCheck>,
    pub cost: CostCheck,
    pub all_pass: bool,
}

/// Verification options.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub n_paths: usize,
    pub seed: u64,
    pub workers: usize,
    pub cost_steps: usize,
}

impl VerifyOptions {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            workers: 0,
            cost_steps: COST_STEPS,
        }
    }
}

/// Verifies a solver output at [`VERIFY_TIMES`] times spanning (0, T].
pub fn verify_solution(
    sol: &ConstrainedSolution,
    m: &MarketModel,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    verify_control(sol.x, &sol.control, m, sol.spec.alpha, Some(&sol.spec), sol.cost, opts)
}

/// Verifies an arbitrary deterministic control. `cap` adds the uniform cap
/// check; `expected_cost` is compared with the simulated J.
pub fn verify_control(
    x: f64,
    c: &DeterministicControl,
    m: &MarketModel,
    alpha: f64,
    cap: Option<&RiskSpec>,
    expected_cost: f64,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let n = opts.n_paths;
    tail_rank(n, alpha)?;
    let t_end = m.horizon();
    let times: Vec<f64> = (1..=VERIFY_TIMES)
        .map(|k| if k == VERIFY_TIMES { t_end } else { t_end * k as f64 / VERIFY_TIMES as f64 })
        .collect();
    let e = sample_ensemble_with(x, c, m, &times, n, opts.seed, opts.workers)?;
    let q = normal::quantile(alpha)?;
    let nf = n as f64;
    // standard error of the empirical α-quantile of a standard normal
    let z_se = (alpha * (1.0 - alpha) / nf).sqrt() / normal::pdf(q);

    let mut checks = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let (_, sd2) = crate::functionals::wealth_log_mean_and_var(x, c, m, t)?;
        let sd = sd2.sqrt();
        let quantile = riskmeasures::quantile_q(x, c, m, alpha, t)?;
        let (lq, tail) = tail_of(&e, alpha, t)?;
        let emp_q = lq.exp();
        let quantile_tolerance = SIGMA_BAND * quantile * sd * z_se + 1e-9 * quantile;
        let tail_mean_emp = tail.iter().sum::<f64>() / tail.len() as f64;
        let tail_sd = if tail.len() > 1 {
            (tail.iter().map(|v| (v - tail_mean_emp).powi(2)).sum::<f64>() / (tail.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mt = riskmeasures::tail_mean(x, c, m, alpha, t)?;
        let es_tolerance = SIGMA_BAND
            * (tail_sd / (tail.len() as f64).sqrt() + (quantile - mt).abs() * ((1.0 - alpha) / (alpha * nf)).sqrt())
            + 1e-9 * e.benchmark[k];
        let bench = e.benchmark[k];
        let (var, es) = (bench - quantile, bench - mt);
        let (emp_var, emp_es) = (bench - emp_q, bench - tail_mean_emp);
        let risk_ratio = cap.map(|s| {
            let risk = match s.kind {
                RiskKind::Var => emp_var,
                RiskKind::Es => emp_es,
            };
            risk / (s.zeta * bench)
        });
        let pass = (emp_q - quantile).abs() <= quantile_tolerance && (emp_es - es).abs() <= es_tolerance;
        checks.push(TimeCheck {
            t,
            quantile,
            empirical_quantile: emp_q,
            quantile_tolerance,
            var,
            empirical_var: emp_var,
            es,
            empirical_es: emp_es,
            es_tolerance,
            risk_ratio,
            pass,
        });
    }

    let cap_check = cap.map(|s| {
        let mut sup_ratio = f64::NEG_INFINITY;
        let mut slack: f64 = 0.0;
        for (k, ch) in checks.iter().enumerate() {
            let r = ch.risk_ratio.unwrap_or(f64::NEG_INFINITY);
            if r > sup_ratio {
                sup_ratio = r;
            }
            let tol = match s.kind {
                RiskKind::Var => ch.quantile_tolerance,
                RiskKind::Es => ch.es_tolerance,
            };
            slack = slack.max(tol / (s.zeta * e.benchmark[k]));
        }
        CapCheck {
            measure: s.kind,
            zeta: s.zeta,
            sup_ratio,
            slack,
            pass: sup_ratio <= 1.0 + slack + 1e-12,
        }
    });

    let estimate = estimate_cost(x, c, m, n.max(2), opts.seed, opts.cost_steps, opts.workers)?;
    let diff = estimate.mean - expected_cost;
    let band = SIGMA_BAND * estimate.std_error + estimate.discretization_bias.abs() + 1e-9;
    let cost = CostCheck {
        expected: expected_cost,
        estimate,
        z_score: if estimate.std_error > 1e-12 { diff / estimate.std_error } else { 0.0 },
        pass: diff.abs() <= band,
    };

    let all_pass = checks.iter().all(|c| c.pass) && cap_check.as_ref().map_or(true, |c| c.pass) && cost.pass;
    Ok(VerifyReport {
        n_paths: n,
        seed: opts.seed,
        alpha,
        times: checks,
        cap: cap_check,
        cost,
        all_pass,
    })
}
