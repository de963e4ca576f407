//! `rec-persist`: formula evaluation, simulation, sweeps, exact oracles and
//! self-tests for replicated erasure codes REC(p, p+q, r).
//!
//! Every command prints a human-readable line followed by one
//! machine-readable line (JSON, or CSV for `simulate`).

pub mod selftest;
pub mod svg;
pub mod sweep;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use recpersist::analytic::{
    expect_random_asymptotic, expect_random_integral, expect_random_p1_beta, expect_random_sum,
    expect_symmetric_asymptotic, expect_symmetric_integral, expect_symmetric_p1_beta,
    survival_curve_symmetric, AnalyticResult, Method, DEFAULT_TOLERANCE,
};
use recpersist::oracle::{
    brute_force_random, brute_force_symmetric, exact_symmetric_expectation, to_f64,
};
use recpersist::simulator::{simulate, SimConfig, WorkloadClass};
use recpersist::{
    validate_symmetric_preconditions, LossSemantics, RecParams, Strategy, SystemParams,
};

/// Failure modes of a command; all map to exit code 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<recpersist::Error> for CliError {
    fn from(e: recpersist::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "rec-persist",
    version,
    about = "Expected data persistency of replicated erasure codes REC(p, p+q, r)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate an exact, integral, asymptotic or Beta formula for E[X]
    Analytic(AnalyticArgs),
    /// Estimate E[X] by Monte Carlo simulation
    Simulate(SimulateArgs),
    /// Run a parameter sweep (JSON config or preset) and write CSV and SVG
    Sweep(SweepArgs),
    /// Compute E[X] exactly as a rational number (small instances)
    Oracle(OracleArgs),
    /// Cross-check the formulas against the exact oracles and the simulator
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Random,
    Symmetric,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => Strategy::Random,
            StrategyArg::Symmetric => Strategy::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Multiset,
    PerCluster,
}

impl From<SemanticsArg> for LossSemantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Multiset => LossSemantics::Multiset,
            SemanticsArg::PerCluster => LossSemantics::PerCluster,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sum,
    Integral,
    Asymptotic,
    BetaExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Polynomial,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    PerturbedBeta,
}

#[derive(Args, Debug, Clone)]
pub struct CodeArgs {
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    /// Loss rule; defaults to multiset for random and per-cluster for symmetric
    #[arg(long, value_enum)]
    pub semantics: Option<SemanticsArg>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub nodes: u64,
    #[arg(long)]
    pub docs: Option<u64>,
}

impl CodeArgs {
    fn strategy(&self) -> Strategy {
        self.strategy.into()
    }

    fn semantics(&self) -> LossSemantics {
        self.semantics
            .map(Into::into)
            .unwrap_or_else(|| self.strategy().default_semantics())
    }

    fn rec(&self) -> Result<RecParams, CliError> {
        match (self.p, self.q, self.r) {
            (Some(p), Some(q), Some(r)) => Ok(RecParams::new(p, q, r)?),
            _ => Err(CliError::Usage("--p, --q and --r are required".into())),
        }
    }

    fn docs(&self) -> Result<u64, CliError> {
        self.docs
            .ok_or_else(|| CliError::Usage("--docs is required".into()))
    }

    fn system(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(self.nodes, self.docs()?)?)
    }
}

#[derive(Args, Debug, Clone)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Defaults to sum (random) or integral (symmetric)
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Relative tolerance of the integral formulas
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Workload class `p,q,r,docs`; repeat for mixed workloads (replaces --p/--q/--r/--docs)
    #[arg(long = "class", value_parser = parse_class)]
    pub classes: Vec<WorkloadClass>,
    #[arg(long, default_value_t = sweep::DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// JSON sweep configuration
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in figure parameterization
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(sweep::PRESETS))]
    pub preset: Option<String>,
    /// Output directory for <name>.csv and <name>.svg
    #[arg(long)]
    pub out: PathBuf,
    /// Override the configured trials per point
    #[arg(long)]
    pub trials: Option<u64>,
    /// Override the configured master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep only the first K node counts of the grid
    #[arg(long, value_name = "K")]
    pub points: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Counting method for the symmetric strategy
    #[arg(long, value_enum, default_value_t = OracleKind::Polynomial)]
    pub kind: OracleKind,
}

#[derive(Args, Debug, Clone)]
pub struct SelftestArgs {
    #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
    pub level: LevelArg,
    /// Test fixture: run the checks against a deliberately broken Beta function
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

pub fn parse_class(s: &str) -> Result<WorkloadClass, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [p, q, r, d] = parts.as_slice() else {
        return Err(format!("expected p,q,r,docs, got '{s}'"));
    };
    let num = |x: &str| {
        x.parse::<u64>()
            .map_err(|_| format!("'{x}' is not a non-negative integer"))
    };
    let small = |x: &str| u32::try_from(num(x)?).map_err(|_| format!("'{x}' is too large"));
    let rec = RecParams::new(small(p)?, small(q)?, small(r)?).map_err(|e| e.to_string())?;
    WorkloadClass::new(rec, num(d)?).map_err(|e| e.to_string())
}

fn check_semantics(
    strategy: Strategy,
    semantics: LossSemantics,
    rec: &RecParams,
) -> Result<(), CliError> {
    if semantics != strategy.default_semantics() && rec.p() > 1 && rec.r() > 1 {
        return Err(CliError::Usage(format!(
            "the {strategy} formulas assume {} loss; use `simulate` or `oracle` for {semantics}",
            strategy.default_semantics()
        )));
    }
    Ok(())
}

fn check_symmetric(rec: &RecParams, sys: &SystemParams) -> Result<(), CliError> {
    validate_symmetric_preconditions(rec, sys)
        .map_err(|v| CliError::Usage(format!("symmetric formulas do not apply: {v}")))
}

pub fn evaluate_analytic(args: &AnalyticArgs) -> Result<AnalyticResult<f64>, CliError> {
    let code = &args.code;
    let (strategy, rec, sys) = (code.strategy(), code.rec()?, code.system()?);
    check_semantics(strategy, code.semantics(), &rec)?;
    let method = args.method.unwrap_or(match strategy {
        Strategy::Random => MethodArg::Sum,
        Strategy::Symmetric => MethodArg::Integral,
    });
    if method == MethodArg::BetaExact && rec.p() != 1 {
        return Err(CliError::Usage("--method beta-exact needs --p 1".into()));
    }
    let result = match strategy {
        Strategy::Random => match method {
            MethodArg::Sum => expect_random_sum(&rec, &sys),
            MethodArg::Integral => expect_random_integral(&rec, &sys, args.tol)?,
            MethodArg::Asymptotic => expect_random_asymptotic(&rec, &sys),
            MethodArg::BetaExact => expect_random_p1_beta(rec.q(), rec.r(), &sys)?,
        },
        Strategy::Symmetric => {
            check_symmetric(&rec, &sys)?;
            match method {
                MethodArg::Sum => AnalyticResult {
                    value: survival_curve_symmetric::<f64>(&rec, &sys)?.expectation(),
                    method: Method::ExactSum,
                    error_bound: Some(0.0),
                    quadrature_tolerance: None,
                },
                MethodArg::Integral => expect_symmetric_integral(&rec, &sys, args.tol)?,
                MethodArg::Asymptotic => expect_symmetric_asymptotic(&rec, &sys),
                MethodArg::BetaExact => expect_symmetric_p1_beta(rec.q(), rec.r(), &sys)?,
            }
        }
    };
    Ok(result)
}

fn cmd_analytic(args: &AnalyticArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let res = evaluate_analytic(args)?;
    let code = &args.code;
    let (rec, sys) = (code.rec()?, code.system()?);
    let bound = res
        .error_bound
        .map(|b| format!(", |error| <= {b}"))
        .unwrap_or_default();
    writeln!(
        out,
        "E[X] = {} ({} placement, {rec}, N = {}, D = {}, method {}{bound})",
        res.value,
        code.strategy(),
        sys.nodes(),
        sys.docs(),
        res.method.name()
    )?;
    let line = json!({
        "command": "analytic",
        "strategy": code.strategy().name(),
        "semantics": code.semantics().name(),
        "p": rec.p(), "q": rec.q(), "r": rec.r(),
        "nodes": sys.nodes(), "docs": sys.docs(),
        "method": res.method.name(),
        "value": res.value,
        "error_bound": res.error_bound,
        "quadrature_tolerance": res.quadrature_tolerance,
    });
    writeln!(out, "{line}")?;
    Ok(EXIT_OK)
}

pub fn simulation_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let code = &args.code;
    let classes = if args.classes.is_empty() {
        vec![WorkloadClass::new(code.rec()?, code.docs()?)?]
    } else {
        if code.p.is_some() || code.q.is_some() || code.r.is_some() || code.docs.is_some() {
            return Err(CliError::Usage(
                "--class cannot be combined with --p/--q/--r/--docs".into(),
            ));
        }
        args.classes.clone()
    };
    if args.trials < 1 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if code.nodes < 1 || code.nodes > u32::MAX as u64 {
        return Err(CliError::Usage("--nodes must be in 1..=4294967295".into()));
    }
    Ok(SimConfig {
        strategy: code.strategy(),
        semantics: code.semantics(),
        classes,
        nodes: code.nodes,
        trials: args.trials,
        master_seed: args.seed,
    })
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = simulation_config(args)?;
    let summary = simulate(&cfg)?;
    let tag = if summary.out_of_theory {
        ", out of theory"
    } else {
        ""
    };
    writeln!(
        out,
        "mean X = {} ± {} ({} trials, seed {}, min {}, max {}{tag})",
        summary.mean, summary.std_error, summary.trials, summary.seed, summary.min, summary.max
    )?;
    let row = sweep::make_row(
        &cfg,
        Ok(summary),
        &[
            sweep::Overlay::Exact,
            sweep::Overlay::Asymptotic,
            sweep::Overlay::BetaExact,
        ],
        0,
    );
    out.write_all(&sweep::to_csv(&[row])?)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut spec = match (&args.config, &args.preset) {
        (Some(path), _) => sweep::SweepSpec::load(path)?,
        (None, Some(name)) => sweep::preset(name)
            .ok_or_else(|| CliError::Usage(format!("unknown preset '{name}'")))?,
        (None, None) => return Err(CliError::Usage("--config or --preset is required".into())),
    };
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.master_seed = s;
    }
    if let Some(k) = args.points {
        spec.truncate_nodes(k);
    }
    spec.validate()?;
    let (rows, csv_path, svg_path) = sweep::run_to_dir(&spec, &args.out)?;
    let errors: Vec<String> = rows
        .iter()
        .filter(|r| r.is_error())
        .map(|r| format!("N={} D={}: {}", r.nodes, r.docs, r.status))
        .collect();
    for e in &errors {
        eprintln!("row failed: {e}");
    }
    writeln!(
        out,
        "sweep {}: {} rows ({} failed) -> {}, {}",
        spec.name,
        rows.len(),
        errors.len(),
        csv_path.display(),
        svg_path.display()
    )?;
    let line = json!({
        "command": "sweep",
        "name": spec.name,
        "rows": rows.len(),
        "failed_rows": errors.len(),
        "csv": csv_path.display().to_string(),
        "svg": svg_path.display().to_string(),
    });
    writeln!(out, "{line}")?;
    Ok(EXIT_OK)
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let code = &args.code;
    let (rec, sys, semantics) = (code.rec()?, code.system()?, code.semantics());
    let (value, kind) = match code.strategy() {
        Strategy::Random => {
            if semantics != LossSemantics::Multiset {
                return Err(CliError::Usage(
                    "the random-placement oracle uses multiset loss".into(),
                ));
            }
            (brute_force_random(&rec, &sys)?, "placement-enumeration")
        }
        Strategy::Symmetric => match args.kind {
            OracleKind::Polynomial => (
                exact_symmetric_expectation(&rec, &sys, semantics)?,
                "group-polynomial",
            ),
            OracleKind::BruteForce => (
                brute_force_symmetric(&rec, &sys, semantics)?,
                "subset-enumeration",
            ),
        },
    };
    let approx = to_f64(&value);
    writeln!(
        out,
        "E[X] = {value} ≈ {approx} ({} placement, {rec}, N = {}, D = {}, {semantics} loss, {kind})",
        code.strategy(),
        sys.nodes(),
        sys.docs()
    )?;
    let line = json!({
        "command": "oracle",
        "strategy": code.strategy().name(),
        "semantics": semantics.name(),
        "p": rec.p(), "q": rec.q(), "r": rec.r(),
        "nodes": sys.nodes(), "docs": sys.docs(),
        "kind": kind,
        "exact": value.to_string(),
        "value": approx,
    });
    writeln!(out, "{line}")?;
    Ok(EXIT_OK)
}

fn cmd_selftest(args: &SelftestArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let level = match args.level {
        LevelArg::Quick => selftest::Level::Quick,
        LevelArg::Full => selftest::Level::Full,
    };
    let fault = match args.inject_fault {
        None => selftest::Fault::None,
        Some(FaultArg::PerturbedBeta) => selftest::Fault::PerturbedBeta,
    };
    let results = selftest::run(level, fault);
    for r in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{verdict} {}: {} [{} cases, {:.2} s]",
            r.name, r.detail, r.cases, r.seconds
        )?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    writeln!(
        out,
        "selftest: {} passed, {failed} failed",
        results.len() - failed
    )?;
    let line = json!({ "command": "selftest", "passed": failed == 0, "checks": results });
    writeln!(out, "{line}")?;
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_SELFTEST_FAILED
    })
}

/// Runs a parsed command, writing its report to `out`; returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Analytic(a) => cmd_analytic(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Selftest(a) => cmd_selftest(a, out),
    }
}

/// Applies `REC_PERSIST_THREADS` to the global worker pool.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::Usage(format!(
            "REC_PERSIST_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_parsing() {
        let c = parse_class("2, 1, 2, 7").unwrap();
        assert_eq!((c.rec.p(), c.rec.q(), c.rec.r(), c.doc_count), (2, 1, 2, 7));
        assert!(parse_class("1,0,1").is_err());
        assert!(parse_class("1,0,0,3").is_err());
        assert!(parse_class("1,0,1,0").is_err());
        assert!(parse_class("a,0,1,1").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
