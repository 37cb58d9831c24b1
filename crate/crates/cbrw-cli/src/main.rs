//! `cbrw` — simulate, classify and cross-validate cookie branching random
//! walks from the command line.
//!
//! Every run is reproducible: the seed (given or drawn from entropy) and a
//! compact config echo are embedded in each output artifact, and results are
//! independent of `--threads` because every trial derives its own random
//! stream from `(seed, trial_index)`.
//!
//! Option precedence is flags > config file > built-in defaults: the JSON
//! config may carry `horizon`, `trials`, `seed`, `backend`, `out` and the
//! phase axes next to the model parameters.

use cbrw_core::estimators::ScanAxis;
use cbrw_core::model::{ParamsDoc, PmfEntry};
use cbrw_core::{
    classify_cbrw, critical_survival_report, estimate_left_reach_decay, estimate_phi,
    extinction_time_tail, frontier_speed_estimate, lp_growth_check, phase_scan,
    recurrence_statistic, run, subcritical_decay_report, BigCount, CbrwParams, EngineError, GwSpec,
    OffspringDistribution, PhaseGridSpec, Side, SimBudget, StreamSeed,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Deserialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cbrw",
    version,
    about = "Cookie branching random walk laboratory",
    propagate_version = true
)]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not
    /// depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a parameter set into its recurrence/transience regime.
    Classify(ClassifyArgs),
    /// Simulate one population trajectory and write the trace CSV.
    Simulate(SimulateArgs),
    /// Run a named Monte Carlo estimator against its closed form.
    Estimate(EstimateArgs),
    /// Scan a two-parameter grid into a phase-diagram CSV.
    Phase(PhaseArgs),
    /// Galton-Watson survival and extinction-time checks.
    GwCheck(GwCheckArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// JSON parameter file (keys mu_c, p_c, mu_0, p_0, layout).
    #[arg(long)]
    config: PathBuf,
    /// Lift the default cap on the offspring support.
    #[arg(long)]
    allow_large_support: bool,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    allow_large_support: bool,
    /// Number of steps [default: 200].
    #[arg(long)]
    horizon: Option<u64>,
    /// Master seed, decimal or 0x-hex. Drawn from entropy when omitted.
    #[arg(long)]
    seed: Option<String>,
    /// Count backend [default: exact].
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Which estimator to run.
    #[arg(value_enum)]
    estimator: Estimator,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    allow_large_support: bool,
    /// Trial budget [default: 10^6 for single-walk estimators, 10^4 for
    /// population estimators].
    #[arg(long)]
    trials: Option<u64>,
    /// Horizon for population estimators [default: 200].
    #[arg(long)]
    horizon: Option<u64>,
    /// Shallowest reach depth (reach-decay only) [default: 3].
    #[arg(long)]
    n_min: Option<i64>,
    /// Deepest reach depth (reach-decay only) [default: 12].
    #[arg(long)]
    n_max: Option<i64>,
    /// First time index checked by lp-growth [default: 50].
    #[arg(long)]
    growth_n_min: Option<u64>,
    /// Master seed, decimal or 0x-hex. Drawn from entropy when omitted.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct PhaseArgs {
    /// Base parameter file; the two scanned parameters override it per cell.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    allow_large_support: bool,
    /// First axis as `param:min:max:steps`, param one of pc|p0|mc|m0.
    #[arg(long, short = 'x')]
    x: Option<String>,
    /// Second axis, same syntax.
    #[arg(long, short = 'y')]
    y: Option<String>,
    /// Attach late-window origin statistics to every cell.
    #[arg(long)]
    simulate: bool,
    /// Trials per simulated cell [default: 100].
    #[arg(long)]
    trials: Option<u64>,
    /// Horizon per simulated cell [default: 200].
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GwCheckArgs {
    /// Which asymptotics to check.
    #[arg(value_enum)]
    kind: GwKind,
    /// JSON spec file (keys offspring, initial).
    #[arg(long)]
    config: PathBuf,
    /// Largest generation tabulated (critical/subcritical) [default: 200].
    #[arg(long)]
    n_max: Option<u64>,
    /// Extinction horizon (extinction-tail) [default: 5].
    #[arg(long)]
    n: Option<u64>,
    /// Trial budget [default: 10^6].
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Backend {
    /// Arbitrary-precision counts.
    Exact,
    /// Checked 64-bit counts; errors on overflow.
    U64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    /// Mean first-passage count to -1 vs its closed form.
    PhiLeft,
    /// Mean first-passage count to +1 vs its closed form.
    PhiRight,
    /// Geometric decay slope of P(reach -n).
    ReachDecay,
    /// Late-window origin occupation statistics.
    Recurrence,
    /// Distribution of the frontier speed l(horizon)/horizon.
    FrontierSpeed,
    /// Violation rate of the leading-process growth ceiling.
    LpGrowth,
}

#[derive(Clone, Copy, ValueEnum)]
enum GwKind {
    /// n * P(alive at n) for a critical process.
    Critical,
    /// P(alive at n) / mean^n for a subcritical process.
    Subcritical,
    /// P(T <= n) and P(T = n) tails at the configured horizon.
    ExtinctionTail,
}

/// Command options that may also live in the config file; flags win.
#[derive(Default, Deserialize)]
#[serde(default)]
struct FileOptions {
    horizon: Option<u64>,
    trials: Option<u64>,
    seed: Option<String>,
    backend: Option<Backend>,
    out: Option<PathBuf>,
    x: Option<String>,
    y: Option<String>,
    n: Option<u64>,
    n_max: Option<u64>,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn report(&self) -> u8 {
        match self {
            CliError::Usage(msg) => {
                eprintln!("error: {msg}");
                EXIT_USAGE
            }
            CliError::Runtime(msg) => {
                eprintln!("runtime error: {msg}");
                EXIT_RUNTIME
            }
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return ExitCode::from(usage(format!("cannot build thread pool: {e}")).report());
        }
    }
    let result = match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Phase(args) => cmd_phase(args),
        Command::GwCheck(args) => cmd_gw_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(e.report()),
    }
}

/// Parses a decimal or `0x`-prefixed hex seed; draws one from entropy (and
/// reports it on stderr) when none is given.
fn resolve_seed(seed: Option<String>) -> Result<u64, CliError> {
    match seed {
        Some(s) => {
            let s = s.trim();
            let parsed = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
                u64::from_str_radix(hex, 16)
            } else {
                s.parse::<u64>()
            };
            parsed.map_err(|_| usage(format!("cannot parse seed {s:?} (decimal or 0x-hex)")))
        }
        None => {
            let seed: u64 = rand::rng().random();
            eprintln!("seed: {seed}");
            Ok(seed)
        }
    }
}

fn read_config(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_doc<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| usage(format!("cannot parse {}: {e}", path.display())))
}

fn load_params(
    path: &Path,
    allow_large_support: bool,
) -> Result<(CbrwParams, FileOptions), CliError> {
    let text = read_config(path)?;
    let doc: ParamsDoc = parse_doc(&text, path)?;
    let options: FileOptions = parse_doc(&text, path)?;
    let built = if allow_large_support { doc.build_with_cap(None) } else { doc.build() };
    let params = built.map_err(|violations| {
        let list = violations.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n");
        usage(format!("invalid parameters:\n{list}"))
    })?;
    Ok((params, options))
}

#[derive(Deserialize)]
struct GwDoc {
    offspring: Vec<PmfEntry>,
    initial: u64,
}

fn load_gw_spec(path: &Path) -> Result<(GwSpec, FileOptions), CliError> {
    let text = read_config(path)?;
    let doc: GwDoc = parse_doc(&text, path)?;
    let options: FileOptions = parse_doc(&text, path)?;
    let mut entries = Vec::with_capacity(doc.offspring.len());
    for e in &doc.offspring {
        let p = e.p.to_f64().map_err(|err| usage(format!("offspring({}): {err}", e.k)))?;
        entries.push((e.k, p));
    }
    let offspring = OffspringDistribution::new(entries)
        .map_err(|v| usage(format!("invalid offspring law: {v:?}")))?;
    let spec =
        GwSpec::new(offspring, doc.initial).map_err(|v| usage(format!("invalid spec: {v:?}")))?;
    Ok((spec, options))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// CSV artifacts carry their provenance as a leading comment line.
fn csv_with_provenance(seed: u64, config_echo: &str, body: &str) -> String {
    format!("# seed={seed} config={config_echo}\n{body}")
}

fn engine_error(e: EngineError) -> CliError {
    runtime(e)
}

/// Precondition violations (wrong regime, bad domain) are usage errors;
/// overflow, guards and exhausted budgets are runtime errors.
fn estimator_error(e: cbrw_core::EstimatorError) -> CliError {
    use cbrw_core::EstimatorError::*;
    match e {
        Analytic(_) | InvalidScanPoint(_) => usage(e),
        Engine(_) | InsufficientHits { .. } => runtime(e),
    }
}

fn gw_error(e: cbrw_core::GwError) -> CliError {
    use cbrw_core::GwError::*;
    match e {
        NotSubcritical { .. } | NotCritical { .. } | ZeroVariance | SupportTooLarge { .. } => {
            usage(e)
        }
        Engine(_) => runtime(e),
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let (params, options) = load_params(&args.config, args.allow_large_support)?;
    let out = args.out.or(options.out);
    let regime = classify_cbrw(&params);
    let content = match args.format {
        Format::Json => {
            let doc = json!({
                "config": params,
                "kind": regime.kind,
                "decisive_quantities": regime.decisive_quantities,
                "boundary_flags": regime.boundary_flags,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))
        }
        Format::Csv => {
            let d = &regime.decisive_quantities;
            let flags =
                regime.boundary_flags.iter().map(|f| f.name.clone()).collect::<Vec<_>>().join(";");
            let kind = serde_json::to_value(regime.kind).expect("kind");
            format!(
                "kind,pcmc,pcmc_phil,qcmc,phi_l,phi_r,flags\n{},{},{},{},{},{},{}\n",
                kind.as_str().expect("string"),
                d.pcmc,
                d.pcmc_phil.map(|v| v.to_string()).unwrap_or_default(),
                d.qcmc,
                d.phi_l.map(|v| v.to_string()).unwrap_or_default(),
                d.phi_r.map(|v| v.to_string()).unwrap_or_default(),
                flags
            )
        }
    };
    write_output(&out, &content)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (params, options) = load_params(&args.config, args.allow_large_support)?;
    let horizon = pick(args.horizon, options.horizon, 200);
    let backend = pick(args.backend, options.backend, Backend::Exact);
    let out = args.out.or(options.out);
    let seed = resolve_seed(args.seed.or(options.seed))?;
    let trace = match backend {
        Backend::Exact => run::<BigCount>(&params, horizon, StreamSeed::new(seed)),
        Backend::U64 => run::<u64>(&params, horizon, StreamSeed::new(seed)),
    }
    .map_err(engine_error)?;
    let content = csv_with_provenance(seed, &params.echo_json(), &trace.to_csv());
    write_output(&out, &content)
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let (params, options) = load_params(&args.config, args.allow_large_support)?;
    let seed = resolve_seed(args.seed.or(options.seed))?;
    let out = args.out.or(options.out);
    let default_trials = match args.estimator {
        Estimator::PhiLeft | Estimator::PhiRight | Estimator::ReachDecay => 1_000_000,
        _ => 10_000,
    };
    let trials = pick(args.trials, options.trials, default_trials);
    let horizon = pick(args.horizon, options.horizon, 200);
    let report = match args.estimator {
        Estimator::PhiLeft => serde_json::to_value(
            estimate_phi(params.mu_0(), params.p_0(), Side::Left, trials, seed)
                .map_err(estimator_error)?,
        ),
        Estimator::PhiRight => serde_json::to_value(
            estimate_phi(params.mu_0(), params.p_0(), Side::Right, trials, seed)
                .map_err(estimator_error)?,
        ),
        Estimator::ReachDecay => {
            let n_min = args.n_min.unwrap_or(3);
            let n_max = args.n_max.or(options.n_max.map(|v| v as i64)).unwrap_or(12);
            serde_json::to_value(
                estimate_left_reach_decay(
                    params.mu_0(),
                    params.p_0(),
                    n_min,
                    n_max,
                    trials,
                    seed,
                )
                .map_err(estimator_error)?,
            )
        }
        Estimator::Recurrence => serde_json::to_value(
            recurrence_statistic(&params, horizon, trials, seed).map_err(estimator_error)?,
        ),
        Estimator::FrontierSpeed => serde_json::to_value(
            frontier_speed_estimate(&params, horizon, trials, seed).map_err(estimator_error)?,
        ),
        Estimator::LpGrowth => serde_json::to_value(
            lp_growth_check(&params, horizon, trials, args.growth_n_min.unwrap_or(50), seed)
                .map_err(estimator_error)?,
        ),
    }
    .expect("reports serialize");

    let content = match args.format {
        Format::Json => {
            let doc = json!({ "config": params, "seed": seed, "report": report });
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))
        }
        Format::Csv => {
            let obj = report.as_object().expect("report is an object");
            let mut keys: Vec<&String> = obj
                .iter()
                .filter(|(_, v)| !v.is_array() && !v.is_object())
                .map(|(k, _)| k)
                .collect();
            keys.sort();
            let header = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
            let row = keys
                .iter()
                .map(|k| match &obj[k.as_str()] {
                    serde_json::Value::Null => String::new(),
                    serde_json::Value::String(s) => s.clone(),
                    v => v.to_string(),
                })
                .collect::<Vec<_>>()
                .join(",");
            csv_with_provenance(seed, &params.echo_json(), &format!("{header}\n{row}\n"))
        }
    };
    write_output(&out, &content)
}

fn parse_axis(text: &str) -> Result<ScanAxis, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(usage(format!("axis {text:?} is not param:min:max:steps")));
    }
    let param = parts[0].parse().map_err(usage)?;
    let min: f64 = parts[1].parse().map_err(|_| usage(format!("bad axis min {:?}", parts[1])))?;
    let max: f64 = parts[2].parse().map_err(|_| usage(format!("bad axis max {:?}", parts[2])))?;
    let steps: usize =
        parts[3].parse().map_err(|_| usage(format!("bad axis steps {:?}", parts[3])))?;
    if steps == 0 {
        return Err(usage("axis needs at least one step"));
    }
    Ok(ScanAxis::linspace(param, min, max, steps))
}

fn cmd_phase(args: PhaseArgs) -> Result<(), CliError> {
    let (base, options) = load_params(&args.config, args.allow_large_support)?;
    let seed = resolve_seed(args.seed.or(options.seed))?;
    let out = args.out.or(options.out);
    let x = args
        .x
        .or(options.x)
        .ok_or_else(|| usage("missing -x axis (flag or config key)"))?;
    let y = args
        .y
        .or(options.y)
        .ok_or_else(|| usage("missing -y axis (flag or config key)"))?;
    let trials = pick(args.trials, options.trials, 100);
    let horizon = pick(args.horizon, options.horizon, 200);
    let grid = PhaseGridSpec { x: parse_axis(&x)?, y: parse_axis(&y)?, base };
    let budget = args.simulate.then_some(SimBudget { trials, horizon });
    let scan = phase_scan(&grid, budget, seed).map_err(estimator_error)?;
    let content = csv_with_provenance(seed, &grid.base.echo_json(), &scan.to_csv());
    write_output(&out, &content)
}

fn cmd_gw_check(args: GwCheckArgs) -> Result<(), CliError> {
    let (spec, options) = load_gw_spec(&args.config)?;
    let seed = resolve_seed(args.seed.or(options.seed))?;
    let out = args.out.or(options.out);
    let trials = pick(args.trials, options.trials, 1_000_000);
    let n_max = pick(args.n_max, options.n_max, 200);
    let n = pick(args.n, options.n, 5);
    let echo = serde_json::to_string(&spec).expect("spec serializes");
    let content = match args.kind {
        GwKind::Critical => {
            let report =
                critical_survival_report(&spec, n_max, trials, seed).map_err(gw_error)?;
            csv_with_provenance(seed, &echo, &report.to_csv())
        }
        GwKind::Subcritical => {
            let report =
                subcritical_decay_report(&spec, n_max, trials, seed).map_err(gw_error)?;
            csv_with_provenance(seed, &echo, &report.to_csv())
        }
        GwKind::ExtinctionTail => {
            let tail = extinction_time_tail(&spec, n, trials, seed).map_err(gw_error)?;
            let body = format!(
                "z,n,p_le,p_le_stderr,p_eq,p_eq_stderr,trials\n{},{},{},{},{},{},{}\n",
                tail.z, tail.n, tail.p_le, tail.p_le_stderr, tail.p_eq, tail.p_eq_stderr,
                tail.trials
            );
            csv_with_provenance(seed, &echo, &body)
        }
    };
    write_output(&out, &content)
}
