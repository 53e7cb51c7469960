//! Command-line front end. Flags override values from a `--config` JSON file.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 verification
//! failure.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dist::{DistSpec, ValueDistribution};
use crate::equilibria::{MarketConfig, PriceBook};
use crate::error::Error;
use crate::mcsim::{self, ChannelMode, Comparison, SimSettings, SimulatedOutcome, Verdict};
use crate::quad::QuadratureSettings;
use crate::sweep::{self, format_real, LambdaGrid, SweepSpec};
use crate::verify::{self, VerifyOptions};
use crate::welfare::{self, EquilibriumOutcome, Mechanism, MechanismPrices};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const SEED_ENV: &str = "ADMARKET_SEED";
const DEFAULT_SEED: u64 = 1;
const DEFAULT_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "admarket",
    version,
    about = "Equilibria, welfare and simulation of ad-platform mechanisms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with default values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one market: all prices and the chosen mechanism's outcome.
    Solve(SolveArgs),
    /// Sweep λ × J × family × mechanism and write CSV or JSON rows.
    Sweep(SweepArgs),
    /// Monte Carlo estimates with standard errors and z-scores.
    Simulate(SimulateArgs),
    /// Run every invariant suite and report pass/fail per invariant.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistName {
    Uniform,
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Stratified,
    Bernoulli,
}

impl From<ModeName> for ChannelMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Stratified => ChannelMode::Stratified,
            ModeName::Bernoulli => ChannelMode::Bernoulli,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct MarketArgs {
    #[arg(long, value_enum)]
    pub dist: Option<DistName>,
    /// Exponent of the power family F(v) = v^a.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Number of firms; a comma-separated list for sweeps.
    #[arg(long = "J", value_delimiter = ',')]
    pub j: Vec<u32>,
    /// Mechanism name, a comma-separated list, or `all`.
    #[arg(long)]
    pub mechanism: Option<String>,
    /// Absolute quadrature tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Also simulate with this many consumers and compare.
    #[arg(long = "verify-mc")]
    pub verify_mc: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// λ grid as start:stop:step.
    #[arg(long = "lambda-grid")]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Coarsen every grid about fourfold.
    #[arg(long)]
    pub quick: bool,
    /// Monte Carlo sample count for the simulation suite.
    #[arg(long = "verify-mc")]
    pub verify_mc: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub dist: Option<DistName>,
    pub a: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<Vec<u32>>,
    pub mechanism: Option<String>,
    pub tol: Option<f64>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub mode: Option<ModeName>,
    pub quick: Option<bool>,
    pub verify_mc: Option<u64>,
    pub threads: Option<usize>,
    /// Full sweep description; the market flags then override its axes.
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(_) => EXIT_NUMERICAL,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads);
    if let Some(k) = threads {
        if k == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // Ignore a second initialization when embedded in a host process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    match cli.command {
        Command::Solve(a) => cmd_solve(a, &file, threads),
        Command::Sweep(a) => cmd_sweep(a, &file),
        Command::Simulate(a) => cmd_simulate(a, &file, threads),
        Command::Verify(a) => cmd_verify(a, &file, threads),
    }
}

pub fn load_config(path: &Path) -> CliResult<FileConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> CliResult<u64> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}={v:?} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn resolve_dist(m: &MarketArgs, file: &FileConfig) -> CliResult<Option<DistSpec>> {
    let a = m.a.or(file.a);
    let name = m.dist.or(file.dist).or(a.map(|_| DistName::Power));
    let spec = match name {
        None => return Ok(None),
        Some(DistName::Uniform) => DistSpec::Uniform,
        Some(DistName::Power) => DistSpec::Power {
            a: a.ok_or_else(|| usage("--dist power needs --a <exponent>"))?,
        },
    };
    ValueDistribution::try_from(spec).map_err(usage)?;
    Ok(Some(spec))
}

fn resolve_mechanisms(m: &MarketArgs, file: &FileConfig) -> CliResult<Option<Vec<Mechanism>>> {
    let Some(text) = m.mechanism.as_ref().or(file.mechanism.as_ref()) else {
        return Ok(None);
    };
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(Some(Mechanism::ALL.to_vec()));
    }
    text.split(',')
        .map(|s| s.trim().parse::<Mechanism>().map_err(usage))
        .collect::<CliResult<Vec<_>>>()
        .map(Some)
}

fn resolve_settings(m: &MarketArgs, file: &FileConfig) -> CliResult<QuadratureSettings> {
    match m.tol.or(file.tol) {
        Some(t) => QuadratureSettings::with_tol(t).map_err(usage),
        None => Ok(QuadratureSettings::default()),
    }
}

fn resolve_js(m: &MarketArgs, file: &FileConfig) -> Option<Vec<u32>> {
    if !m.j.is_empty() {
        Some(m.j.clone())
    } else {
        file.j.clone()
    }
}

/// Validates a single market before any computation.
fn resolve_market(m: &MarketArgs, file: &FileConfig) -> CliResult<MarketConfig> {
    let lambda = m
        .lambda
        .or(file.lambda)
        .ok_or_else(|| usage("--lambda is required"))?;
    let j = match resolve_js(m, file).as_deref() {
        Some([j]) => *j,
        Some([]) | None => return Err(usage("--J is required")),
        Some(_) => return Err(usage("--J takes a single value here")),
    };
    let dist = resolve_dist(m, file)?.unwrap_or(DistSpec::Uniform);
    let dist = ValueDistribution::try_from(dist).map_err(usage)?;
    let settings = resolve_settings(m, file)?;
    MarketConfig::new(lambda, j, dist)
        .and_then(|c| c.with_settings(settings))
        .map_err(usage)
}

fn resolve_format(m: &MarketArgs, file: &FileConfig) -> Option<Format> {
    m.format.or(file.format)
}

fn resolve_out<'a>(flag: &'a Option<PathBuf>, file: &'a FileConfig) -> Option<&'a Path> {
    flag.as_deref().or(file.out.as_deref())
}

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Compute(Error::Io(e))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Compute(Error::Io(e)))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct MarketEcho {
    lambda: f64,
    #[serde(rename = "J")]
    j: u32,
    dist: String,
    abs_tol: f64,
}

impl MarketEcho {
    fn new(c: &MarketConfig) -> Self {
        Self {
            lambda: c.lambda(),
            j: c.j(),
            dist: c.dist().label(),
            abs_tol: c.settings().abs_tol,
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    market: MarketEcho,
    prices: &'a PriceBook,
    outcomes: &'a [EquilibriumOutcome],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    simulations: &'a [SimulationReport],
}

#[derive(Serialize)]
struct SimulationReport {
    analytic: EquilibriumOutcome,
    simulated: SimulatedOutcome,
    comparisons: Vec<Comparison>,
}

fn simulate_all(
    c: &MarketConfig,
    book: &PriceBook,
    mechs: &[Mechanism],
    s: &SimSettings,
) -> CliResult<Vec<SimulationReport>> {
    mechs
        .iter()
        .map(|&m| {
            let prices = MechanismPrices::from_book(m, book);
            let analytic = welfare::assemble_outcome(m, c, &prices)?;
            let simulated = mcsim::estimate_outcome_with(m, c, &prices, s)?;
            let comparisons = mcsim::compare(&simulated, &analytic);
            Ok(SimulationReport {
                analytic,
                simulated,
                comparisons,
            })
        })
        .collect()
}

fn failed_comparisons(reports: &[SimulationReport]) -> Vec<String> {
    reports
        .iter()
        .flat_map(|r| {
            r.comparisons
                .iter()
                .filter(|c| c.verdict == Verdict::Fail)
                .map(move |c| format!("{} {} (z = {:?})", r.analytic.mechanism, c.quantity, c.z))
        })
        .collect()
}

fn solve_text(
    c: &MarketConfig,
    book: &PriceBook,
    outcomes: &[EquilibriumOutcome],
    sims: &[SimulationReport],
) -> String {
    let mut s = format!(
        "market: lambda = {}, J = {}, dist = {}\n\nprices\n",
        c.lambda(),
        c.j(),
        c.dist().label()
    );
    let rows = [
        ("monopoly (p_M)", &book.monopoly),
        ("bidding (p_B)", &book.bidding),
        ("best value (p_V)", &book.best_value),
        ("candidate (p_C)", &book.candidate),
        ("independent (p_I)", &book.independent),
        ("privacy (p_P)", &book.privacy),
    ];
    for (name, sol) in rows {
        let note = if sol.corner { "  [corner]" } else { "" };
        s.push_str(&format!("  {name:<20} {}{note}\n", format_real(sol.price)));
    }
    s.push_str(&format!(
        "  {:<20} {}\n",
        "cap (p*)",
        format_real(book.cap.price)
    ));
    s.push_str(&format!(
        "  {:<20} {} at price {}\n",
        "outside option",
        format_real(book.outside_profit),
        format_real(book.outside_price)
    ));
    for o in outcomes {
        s.push_str(&format!("\noutcome: {}\n", o.mechanism));
        let fields = [
            ("posted_price", o.posted_price),
            ("on_platform_cap", o.on_platform_cap),
            ("cs_on", o.cs_on),
            ("cs_off", o.cs_off),
            ("cs_total", o.cs_total),
            ("profit_per_firm", o.profit_per_firm),
            ("transfer_per_firm", o.transfer_per_firm),
            ("platform_revenue", o.platform_revenue),
            ("producer_surplus", o.producer_surplus),
            ("welfare_total", o.welfare_total),
        ];
        for (k, v) in fields {
            s.push_str(&format!("  {k:<20} {}\n", format_real(v)));
        }
    }
    for r in sims {
        s.push_str(&format!(
            "\nsimulation: {} (n = {}, seed = {})\n",
            r.analytic.mechanism, r.simulated.n, r.simulated.seed
        ));
        for c in &r.comparisons {
            let z = c.z.map_or_else(|| "-".to_string(), |z| format!("{z:.2}"));
            s.push_str(&format!(
                "  {:<20} analytic {:<16} estimate {:<16} se {:<12.3e} z {:<6} {:?}\n",
                c.quantity,
                format_real(c.analytic),
                format_real(c.estimate),
                c.se,
                z,
                c.verdict
            ));
        }
    }
    s
}

pub fn cmd_solve(a: SolveArgs, file: &FileConfig, threads: Option<usize>) -> CliResult<()> {
    let c = resolve_market(&a.market, file)?;
    let mechs = resolve_mechanisms(&a.market, file)?.unwrap_or_else(|| Mechanism::ALL.to_vec());
    let format = resolve_format(&a.market, file);
    let verify_mc = a.verify_mc.or(file.verify_mc);
    if verify_mc == Some(0) {
        return Err(usage("--verify-mc must be at least 1"));
    }
    let seed = resolve_seed(a.seed, file)?;
    if format == Some(Format::Csv) {
        return Err(usage("solve prints text or json; use sweep for csv"));
    }

    let book = PriceBook::solve(&c)?;
    let outcomes = mechs
        .iter()
        .map(|&m| welfare::assemble_outcome(m, &c, &MechanismPrices::from_book(m, &book)))
        .collect::<crate::Result<Vec<_>>>()?;
    let sims = match verify_mc {
        Some(n) => {
            let s = SimSettings {
                threads,
                ..SimSettings::new(n, seed)
            };
            simulate_all(&c, &book, &mechs, &s)?
        }
        None => Vec::new(),
    };
    let text = match format {
        Some(Format::Json) => to_json(&SolveReport {
            market: MarketEcho::new(&c),
            prices: &book,
            outcomes: &outcomes,
            simulations: &sims,
        })?,
        _ => solve_text(&c, &book, &outcomes, &sims),
    };
    emit(&text, resolve_out(&a.market.out, file))?;
    let failed = failed_comparisons(&sims);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn parse_lambda_grid(text: &str) -> CliResult<LambdaGrid> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(usage(format!(
            "--lambda-grid {text:?} is not start:stop:step"
        )));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("--lambda-grid: {s:?} is not a number")))
    };
    Ok(LambdaGrid {
        start: num(start)?,
        stop: num(stop)?,
        step: num(step)?,
    })
}

pub fn build_sweep_spec(a: &SweepArgs, file: &FileConfig) -> CliResult<SweepSpec> {
    let m = &a.market;
    let mut spec = file.sweep.clone().unwrap_or_default();
    if let Some(l) = m.lambda.or(file.lambda) {
        spec.lambda = LambdaGrid::single(l);
    }
    if let Some(g) = &a.lambda_grid {
        if m.lambda.is_some() {
            return Err(usage("--lambda and --lambda-grid are mutually exclusive"));
        }
        spec.lambda = parse_lambda_grid(g)?;
    }
    if let Some(js) = resolve_js(m, file) {
        spec.j_list = js;
    }
    if let Some(d) = resolve_dist(m, file)? {
        spec.families = vec![d];
    }
    if let Some(ms) = resolve_mechanisms(m, file)? {
        spec.mechanisms = ms;
    }
    if let Some(t) = m.tol.or(file.tol) {
        spec.abs_tol = t;
    }
    spec.validate().map_err(usage)?;
    Ok(spec)
}

pub fn cmd_sweep(a: SweepArgs, file: &FileConfig) -> CliResult<()> {
    let spec = build_sweep_spec(&a, file)?;
    let format = resolve_format(&a.market, file).unwrap_or(Format::Csv);
    let rows = sweep::run_sweep(&spec)?;
    let mut buf = Vec::new();
    match format {
        Format::Csv => sweep::write_csv(&rows, &mut buf)?,
        Format::Json => sweep::write_json(&rows, &mut buf)?,
    }
    let text = String::from_utf8(buf).expect("sweep output is UTF-8");
    emit(&text, resolve_out(&a.market.out, file))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep cells failed to solve", rows.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport {
    market: MarketEcho,
    simulations: Vec<SimulationReport>,
}

pub fn cmd_simulate(a: SimulateArgs, file: &FileConfig, threads: Option<usize>) -> CliResult<()> {
    let c = resolve_market(&a.market, file)?;
    let mechs = resolve_mechanisms(&a.market, file)?.unwrap_or_else(|| Mechanism::ALL.to_vec());
    let n = a.n.or(file.n).unwrap_or(DEFAULT_SAMPLES);
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if resolve_format(&a.market, file) == Some(Format::Csv) {
        return Err(usage("simulate writes json"));
    }
    let s = SimSettings {
        n,
        seed: resolve_seed(a.seed, file)?,
        mode: a
            .mode
            .or(file.mode)
            .map_or_else(ChannelMode::default, Into::into),
        threads,
    };
    let book = PriceBook::solve(&c)?;
    let report = SimulateReport {
        market: MarketEcho::new(&c),
        simulations: simulate_all(&c, &book, &mechs, &s)?,
    };
    emit(&to_json(&report)?, resolve_out(&a.market.out, file))
}

pub fn cmd_verify(a: VerifyArgs, file: &FileConfig, threads: Option<usize>) -> CliResult<()> {
    let quick = a.quick || file.quick.unwrap_or(false);
    let mut opts = VerifyOptions::new(quick, resolve_seed(a.seed, file)?);
    opts.threads = threads;
    if let Some(n) = a.verify_mc.or(file.verify_mc) {
        if n == 0 {
            return Err(usage("--verify-mc must be at least 1"));
        }
        opts.grid.mc_samples = n;
    }
    let report = verify::run_all(&opts)?;
    emit(&to_json(&report)?, resolve_out(&a.out, file))?;
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("{}: {}", c.suite, c.name))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("admarket").chain(args.iter().copied())).unwrap()
    }

    fn market(args: &[&str]) -> CliResult<MarketConfig> {
        match parse(args).command {
            Command::Solve(a) => resolve_market(&a.market, &FileConfig::default()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn market_flags_are_validated() {
        let c = market(&[
            "solve", "--lambda", "0.5", "--J", "3", "--dist", "power", "--a", "0.75",
        ])
        .unwrap();
        assert_eq!(c.j(), 3);
        assert_eq!(c.dist(), &ValueDistribution::power(0.75).unwrap());
        for bad in [
            &["solve", "--lambda", "1.0", "--J", "2"][..],
            &["solve", "--lambda", "0.5", "--J", "1"],
            &["solve", "--lambda", "0.5"],
            &["solve", "--lambda", "0.5", "--J", "2", "--dist", "power"],
            &["solve", "--lambda", "0.5", "--J", "2,3"],
            &["solve", "--lambda", "0.5", "--J", "2", "--tol", "-1"],
            &["solve", "--lambda", "-0.1", "--J", "2"],
        ] {
            let e = market(bad).unwrap_err();
            assert_eq!(e.exit_code(), EXIT_USAGE, "{bad:?}: {e}");
        }
        let msg = market(&["solve", "--lambda", "1.0", "--J", "2"])
            .unwrap_err()
            .to_string();
        assert!(msg.contains("lambda") || msg.contains('λ'), "{msg}");
    }

    #[test]
    fn flags_override_config() {
        let file = FileConfig {
            lambda: Some(0.2),
            j: Some(vec![5]),
            dist: Some(DistName::Power),
            a: Some(2.0),
            ..FileConfig::default()
        };
        let Command::Solve(a) = parse(&["solve", "--lambda", "0.7"]).command else {
            unreachable!()
        };
        let c = resolve_market(&a.market, &file).unwrap();
        assert_eq!((c.lambda(), c.j()), (0.7, 5));
        assert_eq!(c.dist(), &ValueDistribution::power(2.0).unwrap());
    }

    #[test]
    fn sweep_spec_from_flags() {
        let Command::Sweep(a) = parse(&[
            "sweep",
            "--lambda-grid",
            "0:0.5:0.25",
            "--J",
            "2,3",
            "--mechanism",
            "bidding,privacy",
        ])
        .command
        else {
            unreachable!()
        };
        let spec = build_sweep_spec(&a, &FileConfig::default()).unwrap();
        assert_eq!(spec.lambda.values().unwrap(), vec![0.0, 0.25, 0.5]);
        assert_eq!(spec.j_list, vec![2, 3]);
        assert_eq!(
            spec.mechanisms,
            vec![Mechanism::Bidding, Mechanism::CohortPrivacy]
        );
        assert_eq!(spec.families, vec![DistSpec::Uniform]);
    }

    #[test]
    fn mechanism_lists() {
        let m = MarketArgs {
            mechanism: Some("ALL".into()),
            ..MarketArgs::default()
        };
        assert_eq!(
            resolve_mechanisms(&m, &FileConfig::default())
                .unwrap()
                .unwrap()
                .len(),
            6
        );
        let m = MarketArgs {
            mechanism: Some("auction".into()),
            ..MarketArgs::default()
        };
        assert!(resolve_mechanisms(&m, &FileConfig::default()).is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"lambda":0.5,"J":[2]}"#).is_ok());
        assert!(serde_json::from_str::<FileConfig>(r#"{"lamda":0.5}"#).is_err());
    }

    #[test]
    fn lambda_grid_parsing() {
        assert!(parse_lambda_grid("0:1").is_err());
        assert!(parse_lambda_grid("a:1:0.1").is_err());
        assert_eq!(parse_lambda_grid("0.1:0.9:0.2").unwrap().step, 0.2);
    }
}
