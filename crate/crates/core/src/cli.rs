//! Batch front end: `solve`, `simulate` and `check`.
//!
//! A run reads one JSON config holding the market (inline or as a path) and
//! optional run settings; command-line flags override the file. Results go to
//! the output directory as `solution.csv`, `summary.json`, `verify.json` and
//! `check.json`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::control::{fmt_f64, DeterministicControl, Interp};
use crate::error::{Error, Result};
use crate::functionals::cost_j;
use crate::market::{MarketConfig, MarketModel};
use crate::montecarlo::{self, VerifyOptions};
use crate::riskmeasures::{self, normal, RiskKind, RiskSpec};
use crate::shrinkage::WeightFamily;
use crate::solution::{self, ConstrainedSolution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable capping the worker count (0 = automatic).
pub const THREADS_ENV: &str = "RISKCAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "riskcap", version, about = "Log-utility investment and consumption under a VaR or ES cap")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the capped problem and write solution.csv and summary.json.
    Solve(RunArgs),
    /// Verify a solution by Monte Carlo and write verify.json.
    Simulate(SimulateArgs),
    /// Run the numerical invariant suite and write check.json.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Var,
    Es,
    None,
}

impl Measure {
    fn kind(self) -> Option<RiskKind> {
        match self {
            Measure::Var => Some(RiskKind::Var),
            Measure::Es => Some(RiskKind::Es),
            Measure::None => None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config: a market object, or {"market": ..., run settings}.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub measure: Option<Measure>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Initial wealth.
    #[arg(long)]
    pub x: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Uniform cells of the output grid (breakpoints are added).
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Directory holding a previous summary.json and solution.csv; solves
    /// inline when absent.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Also write the sampled ln X values to samples.csv.
    #[arg(long)]
    pub dump_samples: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Test hook: offset added to every root before the residual check.
    #[arg(long, hide = true)]
    pub perturb_rho: Option<f64>,
}

/// Market given inline or as a path relative to the config file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MarketSource {
    Inline(MarketConfig),
    Path(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    market: MarketSource,
    measure: Option<Measure>,
    alpha: Option<f64>,
    zeta: Option<f64>,
    x: Option<f64>,
    out: Option<PathBuf>,
    paths: Option<usize>,
    seed: Option<u64>,
    grid: Option<usize>,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub market: MarketModel,
    pub measure: Measure,
    pub alpha: f64,
    pub zeta: f64,
    pub x: f64,
    pub out: PathBuf,
    pub grid: usize,
    pub paths: usize,
    pub seed: u64,
}

impl RunConfig {
    pub const DEFAULT_ALPHA: f64 = 0.01;
    pub const DEFAULT_ZETA: f64 = 0.1;
    pub const DEFAULT_GRID: usize = 512;
    pub const DEFAULT_PATHS: usize = 100_000;
    pub const DEFAULT_SEED: u64 = 42;

    /// Reads the config file and applies flag overrides.
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
        let file: ConfigFile = if value.get("market").is_some() {
            serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?
        } else {
            let market: MarketConfig = serde_json::from_value(value)
                .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
            ConfigFile {
                market: MarketSource::Inline(market),
                measure: None,
                alpha: None,
                zeta: None,
                x: None,
                out: None,
                paths: None,
                seed: None,
                grid: None,
            }
        };
        let market = match file.market {
            MarketSource::Inline(cfg) => MarketModel::from_config(cfg)?,
            MarketSource::Path(p) => {
                let base = args.config.parent().unwrap_or(Path::new("."));
                let p = if p.is_absolute() { p } else { base.join(p) };
                MarketModel::load(&p).map_err(|e| match e {
                    Error::Io(io) => Error::Config(format!("cannot read market {}: {io}", p.display())),
                    other => other,
                })?
            }
        };
        let cfg = RunConfig {
            market,
            measure: args.measure.or(file.measure).unwrap_or(Measure::Var),
            alpha: args.alpha.or(file.alpha).unwrap_or(Self::DEFAULT_ALPHA),
            zeta: args.zeta.or(file.zeta).unwrap_or(Self::DEFAULT_ZETA),
            x: args.x.or(file.x).unwrap_or(1.0),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            grid: args.grid.or(file.grid).unwrap_or(Self::DEFAULT_GRID),
            paths: args.paths.or(file.paths).unwrap_or(Self::DEFAULT_PATHS),
            seed: args.seed.or(file.seed).unwrap_or(Self::DEFAULT_SEED),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.x > 0.0 && self.x.is_finite()) {
            return Err(Error::Config(format!("x must be positive, got {}", self.x)));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!("alpha must lie in (0, 0.5), got {}", self.alpha)));
        }
        if self.measure != Measure::None && !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::Config(format!("zeta must lie in (0, 1), got {}", self.zeta)));
        }
        if self.grid == 0 {
            return Err(Error::Config("grid must be at least 1".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<Option<RiskSpec>> {
        self.measure.kind().map(|k| RiskSpec::new(self.alpha, self.zeta, k)).transpose()
    }

    fn output_grid(&self, c: &DeterministicControl) -> Vec<f64> {
        let mut g = self.market.grid(self.grid);
        g.extend(c.breakpoints().into_iter().filter(|&t| t > 0.0 && t < self.market.horizon()));
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

/// Maps an error to its process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::Numerical { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `RISKCAP_THREADS` and sizes the global pool.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        // a second initialization (tests calling run twice) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point used by the binary; returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = init_threads().and_then(|_| match cli.command {
        Command::Solve(a) => cmd_solve(&RunConfig::resolve(&a)?),
        Command::Simulate(a) => cmd_simulate(&RunConfig::resolve(&a.run)?, a.from.as_deref(), a.dump_samples),
        Command::Check(a) => cmd_check(&RunConfig::resolve(&a.run)?, a.perturb_rho.unwrap_or(0.0)),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("riskcap: {e}");
            exit_code(&e)
        }
    }
}

/// Either a capped solution or the unconstrained optimum.
enum Solved {
    Capped(ConstrainedSolution),
    Base { control: DeterministicControl, cost: f64, base: f64 },
}

impl Solved {
    fn control(&self) -> &DeterministicControl {
        match self {
            Solved::Capped(s) => &s.control,
            Solved::Base { control, .. } => control,
        }
    }

    fn cost(&self) -> f64 {
        match self {
            Solved::Capped(s) => s.cost,
            Solved::Base { cost, .. } => *cost,
        }
    }
}

fn solve_config(cfg: &RunConfig) -> Result<Solved> {
    match cfg.spec()? {
        Some(spec) => Ok(Solved::Capped(solution::solve(cfg.x, &cfg.market, &spec)?)),
        None => {
            let (control, cost) = solution::solve_unconstrained(cfg.x, &cfg.market)?;
            Ok(Solved::Base {
                control,
                cost,
                base: solution::base_value(cfg.x, &cfg.market)?,
            })
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    use std::io::Write;
    writeln!(f)?;
    Ok(())
}

/// Writes the strategy table with weight, quantile and risk columns.
fn write_solution_csv(cfg: &RunConfig, solved: &Solved, path: &Path) -> Result<Vec<f64>> {
    let m = &cfg.market;
    let c = solved.control();
    let grid = cfg.output_grid(c);
    let spec = cfg.spec()?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["t".to_string()];
    header.extend((1..=m.dim()).map(|k| format!("y_{k}")));
    header.extend(["v", "weight", "Q_t", "risk_t", "risk_ratio"].map(String::from));
    w.write_record(&header)?;
    for &t in &grid {
        let weight = match solved {
            Solved::Capped(s) => s.weight_at(m, t),
            Solved::Base { .. } => 1.0,
        };
        let q = riskmeasures::quantile_q(cfg.x, c, m, cfg.alpha, t)?;
        let bench = cfg.x * m.discount_r(t).exp();
        let risk = match spec.map(|s| s.kind) {
            Some(RiskKind::Es) => riskmeasures::es_t(cfg.x, c, m, cfg.alpha, t)?,
            _ => bench - q,
        };
        let mut row = vec![fmt_f64(t)];
        row.extend(c.y_at(m, t).into_iter().map(fmt_f64));
        row.push(fmt_f64(c.v_at(t)));
        row.push(fmt_f64(weight));
        row.push(fmt_f64(q));
        row.push(fmt_f64(risk));
        row.push(match spec {
            Some(s) => fmt_f64(risk / (s.zeta * bench)),
            None => String::new(),
        });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(grid)
}

/// `solve`: writes solution.csv and summary.json.
pub fn cmd_solve(cfg: &RunConfig) -> Result<i32> {
    let solved = solve_config(cfg)?;
    ensure_dir(&cfg.out)?;
    let csv_path = cfg.out.join("solution.csv");
    write_solution_csv(cfg, &solved, &csv_path)?;
    let reread = DeterministicControl::read_csv(&cfg.market, File::open(&csv_path)?, Interp::Cubic)?;
    let roundtrip = cost_j(cfg.x, &reread, &cfg.market)?.total;

    let mut summary = match &solved {
        Solved::Capped(s) => serde_json::to_value(s.summary())?,
        Solved::Base { cost, base, .. } => {
            let t_end = cfg.market.horizon();
            json!({
                "measure": "none",
                "regime": "unconstrained-base",
                "alpha": cfg.alpha,
                "x": cfg.x,
                "gamma": t_end / (t_end + 1.0),
                "J": cost,
                "A": base,
                "Gamma": cost - base,
                "conditions": [],
            })
        }
    };
    summary["grid_points"] = json!(cfg.output_grid(solved.control()).len());
    summary["csv_roundtrip_J"] = json!(roundtrip);
    write_json(&cfg.out.join("summary.json"), &summary)?;
    println!(
        "regime {} J {} written to {}",
        summary["regime"].as_str().unwrap_or("?"),
        fmt_f64(solved.cost()),
        cfg.out.display()
    );
    Ok(EXIT_OK)
}

/// `simulate`: Monte Carlo verification of a stored or freshly solved strategy.
pub fn cmd_simulate(cfg: &RunConfig, from: Option<&Path>, dump_samples: bool) -> Result<i32> {
    let opts = VerifyOptions::new(cfg.paths, cfg.seed);
    let spec = cfg.spec()?;
    let (x, control, expected) = match from {
        Some(dir) => {
            let text = fs::read_to_string(dir.join("summary.json"))
                .map_err(|e| Error::Config(format!("cannot read {}/summary.json: {e}", dir.display())))?;
            let summary: Value = serde_json::from_str(&text)?;
            let number = |key: &str| {
                summary[key]
                    .as_f64()
                    .ok_or_else(|| Error::Config(format!("summary.json lacks numeric `{key}`")))
            };
            let csv = File::open(dir.join("solution.csv"))
                .map_err(|e| Error::Config(format!("cannot read {}/solution.csv: {e}", dir.display())))?;
            let control = DeterministicControl::read_csv(&cfg.market, csv, Interp::Cubic)?;
            (number("x")?, control, number("J")?)
        }
        None => {
            let solved = solve_config(cfg)?;
            (cfg.x, solved.control().clone(), solved.cost())
        }
    };
    let report = montecarlo::verify_control(x, &control, &cfg.market, cfg.alpha, spec.as_ref(), expected, &opts)?;
    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join("verify.json"), &report)?;
    if dump_samples {
        let times: Vec<f64> = report.times.iter().map(|c| c.t).collect();
        let e = montecarlo::sample_ensemble(x, &control, &cfg.market, &times, cfg.paths, cfg.seed)?;
        montecarlo::write_samples_csv(&e, BufWriter::new(File::create(cfg.out.join("samples.csv"))?))?;
    }
    println!(
        "verification {} (cost z-score {:.3}) written to {}",
        if report.all_pass { "passed" } else { "FAILED" },
        report.cost.z_score,
        cfg.out.display()
    );
    Ok(if report.all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// "pass", "fail" or "skipped".
    pub status: &'static str,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, ok: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if ok { "pass" } else { "fail" },
            detail,
        }
    }

    fn skipped(name: impl Into<String>, why: &str) -> Self {
        Self {
            name: name.into(),
            status: "skipped",
            detail: why.into(),
        }
    }
}

const CHECK_SAMPLES: usize = 20;

fn special_function_checks(alpha: f64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut worst = f64::INFINITY;
    for k in 0..=200 {
        let y = 1e-2 * 5000f64.powf(k as f64 / 200.0);
        let r = normal::mills_ratio(y);
        worst = worst.min((1.0 / y - r).min(r - (1.0 / y - 1.0 / y.powi(3))));
    }
    out.push(CheckOutcome::new(
        "mills_ratio_bounds",
        worst > 0.0,
        format!("smallest gap to the bounds on [0.01, 50]: {worst:e}"),
    ));
    let q = normal::quantile(alpha)?;
    let back = normal::cdf(q);
    out.push(CheckOutcome::new(
        "quantile_round_trip",
        ((back - alpha) / alpha).abs() < 1e-12,
        format!("cdf(quantile({alpha})) = {back:e}"),
    ));
    let f = riskmeasures::f_alpha(q.abs(), alpha)?;
    out.push(CheckOutcome::new(
        "f_alpha_at_quantile",
        (f - 1.0).abs() < 1e-14,
        format!("F_alpha(|q_alpha|) = {f}"),
    ));
    let iota_min = (0..=CHECK_SAMPLES)
        .map(|k| riskmeasures::iota_alpha(10.0 * k as f64 / CHECK_SAMPLES as f64, alpha))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    out.push(CheckOutcome::new(
        "iota_above_quantile",
        iota_min >= q.abs(),
        format!("min iota on [0, 10] = {iota_min}, |q_alpha| = {}", q.abs()),
    ));
    Ok(out)
}

fn family_checks(cfg: &RunConfig, kind: RiskKind, perturb: f64) -> Result<Vec<CheckOutcome>> {
    let tag = kind.to_string();
    let names = ["root_residual", "root_at_cap", "phi_inverse_round_trip", "phi_decreasing"];
    let m = &cfg.market;
    if m.theta_norm() == 0.0 {
        return Ok(names
            .iter()
            .map(|n| CheckOutcome::skipped(format!("{tag}.{n}"), "market price of risk is zero"))
            .collect());
    }
    let fam = WeightFamily::new(m, cfg.alpha, kind)?;
    let cap = match fam.lambda_cap() {
        Ok(c) => c,
        Err(e @ Error::Infeasible { .. }) => {
            let why = e.to_string();
            return Ok(names.iter().map(|n| CheckOutcome::skipped(format!("{tag}.{n}"), &why)).collect());
        }
        Err(e) => return Err(e),
    };
    let lambdas: Vec<f64> = (1..=CHECK_SAMPLES).map(|k| cap * k as f64 / (CHECK_SAMPLES + 1) as f64).collect();
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for &l in &lambdas {
        let rho = fam.rho(l)?;
        if rho > 0.0 || perturb != 0.0 {
            worst = worst.max((fam.g(rho + perturb, l)? - 1.0).abs());
        }
    }
    out.push(CheckOutcome::new(
        format!("{tag}.root_residual"),
        worst < 1e-10,
        format!("max |G(rho(lambda), lambda) - 1| = {worst:e}"),
    ));
    let at_cap = fam.rho(cap)?;
    out.push(CheckOutcome::new(
        format!("{tag}.root_at_cap"),
        at_cap < 1e-8,
        format!("rho(lambda_cap) = {at_cap:e}"),
    ));

    let top = fam.phi_at_zero().min(-(-cfg.zeta).ln_1p());
    let mut worst_inv: f64 = 0.0;
    for k in 1..=CHECK_SAMPLES {
        let a = top * k as f64 / (CHECK_SAMPLES + 1) as f64;
        let l = fam.phi_inverse_extended(a)?;
        worst_inv = worst_inv.max((fam.phi(l)? - a).abs());
    }
    out.push(CheckOutcome::new(
        format!("{tag}.phi_inverse_round_trip"),
        worst_inv < 1e-9,
        format!("max |Phi(Phi^-1(a)) - a| = {worst_inv:e}"),
    ));

    if fam.phi_monotone().holds {
        let mut prev = fam.phi(0.0)?;
        let mut worst_step = f64::NEG_INFINITY;
        for &l in &lambdas {
            let v = fam.phi(l)?;
            worst_step = worst_step.max(v - prev);
            prev = v;
        }
        out.push(CheckOutcome::new(
            format!("{tag}.phi_decreasing"),
            worst_step < 0.0,
            format!("largest step of Phi along increasing lambda: {worst_step:e}"),
        ));
    } else {
        out.push(CheckOutcome::skipped(
            format!("{tag}.phi_decreasing"),
            "quantile below the monotonicity threshold",
        ));
    }
    Ok(out)
}

fn solution_checks(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let Some(spec) = cfg.spec()? else {
        let (c, cost) = solution::solve_unconstrained(cfg.x, &cfg.market)?;
        let j = cost_j(cfg.x, &c, &cfg.market)?.total;
        return Ok(vec![CheckOutcome::new(
            "solution.cost_consistency",
            (j - cost).abs() < 1e-8,
            format!("cost_J = {j}, closed form = {cost}"),
        )]);
    };
    let sol = match solution::solve(cfg.x, &cfg.market, &spec) {
        Ok(s) => s,
        Err(e @ Error::Infeasible { .. }) => {
            let why = e.to_string();
            return Ok(vec![
                CheckOutcome::skipped("solution.cost_consistency", &why),
                CheckOutcome::skipped("solution.feasibility", &why),
            ]);
        }
        Err(e) => return Err(e),
    };
    let j = cost_j(cfg.x, &sol.control, &cfg.market)?.total;
    let f = sol.feasibility;
    Ok(vec![
        CheckOutcome::new(
            "solution.cost_consistency",
            (j - sol.cost).abs() < 1e-8,
            format!("{} regime: cost_J = {j}, A + Gamma = {}", sol.regime, sol.cost),
        ),
        CheckOutcome::new(
            "solution.feasibility",
            f.feasible,
            format!("min margin {:e} at t = {}", f.min_margin, f.argmin_t),
        ),
    ])
}

/// `check`: runs the invariant suite; exit 0 iff nothing fails.
pub fn cmd_check(cfg: &RunConfig, perturb_rho: f64) -> Result<i32> {
    let mut checks = special_function_checks(cfg.alpha)?;
    checks.extend(family_checks(cfg, RiskKind::Var, perturb_rho)?);
    checks.extend(family_checks(cfg, RiskKind::Es, perturb_rho)?);
    checks.extend(solution_checks(cfg)?);
    let all_pass = checks.iter().all(|c| c.status != "fail");
    for c in &checks {
        println!("{:7} {}: {}", c.status, c.name, c.detail);
    }
    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join("check.json"), &json!({ "checks": checks, "all_pass": all_pass }))?;
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}
