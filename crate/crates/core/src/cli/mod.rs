//! Command-line front end. Exit codes: 0 success, 1 self-check failure,
//! 2 usage or configuration error, 3 I/O error.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diffusion::stationary_moments;
use crate::fluid::{default_step, fixed_point, integrate, FluidState};
use crate::harness::{
    benchmark_abandonment_points, benchmark_delay_points, build_table, run_validation, write_table, SweepGrid,
    TableKind, ValidationOptions,
};
use crate::model::{ModelParams, RawParams, RegimeTag, Workload};
use crate::simulator::{
    replicate_runs, DelayObservation, EventRecord, ReplicationSummary, SimConfig, SimResult, StopRule,
};
use crate::staffing::{
    staff_abandon_fluid_bound, staff_abandon_implicit, staff_delay, staff_empirical, AbandonOptions, AbandonTarget,
    DelayRule, DelayTarget, EmpiricalMetric, RegimeChoice, SimBudget, StaffingAnswer,
};
use config::{list, scalar, ConfigFile};
use output::{emit, to_canonical_json, OutDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("self-check failed: {0}")]
    ChecksFailed(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Usage(_) | CliError::Invalid(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Internal(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "erlangs", version, about = "Queue with abandonment and server charging: fluid, diffusion, simulation and staffing")]
pub struct Cli {
    /// TOML file of default option values; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for relative output paths [env: ERLANGS_OUT_DIR].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fluid fixed point and regime.
    FixedPoint {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Stationary diffusion moments (JSON).
    Moments {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Fluid trajectory by RK4 (CSV: t,q,s).
    Integrate {
        #[command(flatten)]
        params: ParamArgs,
        /// Initial queue length [default: 0].
        #[arg(long)]
        q0: Option<f64>,
        /// Initial active servers [default: c].
        #[arg(long)]
        s0: Option<f64>,
        /// End time [default: 50 / min(mu, theta, gamma)].
        #[arg(long)]
        horizon: Option<f64>,
        /// Step size [default: 0.01 / max(mu, theta, gamma)].
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Replicated event-driven simulation (summary JSON).
    Simulate(SimulateArgs),
    /// Staffing recommendation (JSON).
    Staff(StaffArgs),
    /// Staffing comparison table over a sweep (CSV).
    Table(TableArgs),
    /// Self-check suite; exits 1 if any check fails.
    Validate {
        /// Larger draws and longer simulations.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct WorkloadArgs {
    /// Arrival rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Service rate.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Abandonment rate.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Probability a server leaves to charge after a completion.
    #[arg(long)]
    pub p: Option<f64>,
    /// Charging completion rate.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    /// Number of servers.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Stop after this many arrivals.
    #[arg(long, conflicts_with = "horizon")]
    pub customers: Option<u64>,
    /// Stop at this time.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of the run discarded before statistics [default: 0.2].
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Grid spacing for the trajectory CSV.
    #[arg(long)]
    pub grid_dt: Option<f64>,
    #[arg(long, value_enum, default_value_t = Observation::PreArrival)]
    pub delay_observation: Observation,
    /// Summary JSON path [default: stdout].
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Trajectory CSV; the pointwise mean band when reps > 1.
    #[arg(long, value_name = "FILE", requires = "grid_dt")]
    pub trajectory: Option<PathBuf>,
    /// Event log CSV of replication 0 (t,event_tag,q,s).
    #[arg(long, value_name = "FILE")]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Observation {
    PreArrival,
    PostArrival,
}

impl From<Observation> for DelayObservation {
    fn from(o: Observation) -> Self {
        match o {
            Observation::PreArrival => DelayObservation::PreArrival,
            Observation::PostArrival => DelayObservation::PostArrival,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StaffMethod {
    /// Deterministic server pool (delay targets).
    Deterministic,
    /// Bivariate normal with covariance (delay targets).
    Bivariate,
    /// Implicit abandonment equation.
    Implicit,
    /// Fluid lower bound for abandonment.
    FluidBound,
    /// Simulation search for the smallest integer staffing.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Auto,
    Ul,
    Ol,
}

#[derive(Debug, Args)]
pub struct SimSearchArgs {
    /// Customers per replication.
    #[arg(long)]
    pub customers: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Distinct staffing levels the search may simulate.
    #[arg(long)]
    pub max_evaluations: Option<u32>,
    #[arg(long, value_enum, default_value_t = Observation::PreArrival)]
    pub delay_observation: Observation,
}

#[derive(Debug, Args)]
pub struct StaffArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, value_enum)]
    pub target: TableKind,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub method: StaffMethod,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    pub regime: RegimeArg,
    /// First staffing level tried by the empirical search.
    #[arg(long)]
    pub start: Option<u64>,
    #[command(flatten)]
    pub sim: SimSearchArgs,
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub kind: TableKind,
    /// Use the built-in benchmark rows instead of a grid.
    #[arg(long)]
    pub benchmark: bool,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub epsilon: Vec<f64>,
    /// Refuse sweeps with more rows than this.
    #[arg(long)]
    pub max_rows: Option<usize>,
    /// Also search for the simulated minimal staffing (slow).
    #[arg(long)]
    pub with_sim: bool,
    #[command(flatten)]
    pub sim: SimSearchArgs,
    /// Fixed decimals for staffing and percentage columns.
    #[arg(long, num_args = 0..=1, default_missing_value = "2")]
    pub digits: Option<usize>,
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let out_dir = OutDir::new(cli.out_dir);
    match cli.command {
        Command::FixedPoint { params, output } => {
            let params = model_params(&params, &config)?;
            let fp = fixed_point(&params);
            let report = FixedPointReport {
                q_star: fp.q_star,
                s_star: fp.s_star,
                regime: fp.regime.tag,
                load_margin: fp.regime.load_margin,
            };
            emit(to_canonical_json(&report)?.as_bytes(), output.as_deref(), &out_dir, stdout)
        }
        Command::Moments { params, output } => {
            let params = model_params(&params, &config)?;
            let moments = stationary_moments(&params).map_err(|e| CliError::Invalid(e.to_string()))?;
            emit(to_canonical_json(&moments)?.as_bytes(), output.as_deref(), &out_dir, stdout)
        }
        Command::Integrate {
            params,
            q0,
            s0,
            horizon,
            step,
            output,
        } => {
            let params = model_params(&params, &config)?;
            let init = FluidState::new(q0.unwrap_or(0.0), s0.unwrap_or(params.c()));
            let slowest = params.mu().min(params.theta()).min(params.gamma());
            let horizon = horizon.or(config.horizon).unwrap_or(50.0 / slowest);
            let step = step.or(config.step).unwrap_or_else(|| default_step(&params));
            let traj = integrate(&params, init, horizon, step).map_err(|e| CliError::Invalid(e.to_string()))?;
            let mut buf = Vec::new();
            traj.write_csv(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
            emit(&buf, output.as_deref(), &out_dir, stdout)
        }
        Command::Simulate(args) => simulate(args, &config, &out_dir, stdout),
        Command::Staff(args) => {
            let answer = staff(&args, &config)?;
            emit(to_canonical_json(&answer)?.as_bytes(), args.output.as_deref(), &out_dir, stdout)
        }
        Command::Table(args) => table(args, &config, &out_dir, stdout, stderr),
        Command::Validate {
            full,
            seed,
            jobs,
            output,
        } => {
            let mut options = if full { ValidationOptions::full() } else { ValidationOptions::quick() };
            if let Some(s) = seed.or(config.seed) {
                options.seed = s;
            }
            options.jobs = jobs.or(config.jobs);
            let report = run_validation(&options);
            emit(to_canonical_json(&report)?.as_bytes(), output.as_deref(), &out_dir, stdout)?;
            if report.passed {
                Ok(())
            } else {
                let names: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
                Err(CliError::ChecksFailed(names.join(", ")))
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct FixedPointReport {
    q_star: f64,
    s_star: f64,
    regime: RegimeTag,
    load_margin: f64,
}

fn required(value: Option<f64>, name: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{name} (give it as a flag or in the config file)")))
}

fn workload_values(args: &WorkloadArgs, config: &ConfigFile) -> Result<[f64; 5], CliError> {
    Ok([
        required(scalar(args.lambda, &config.lambda, "lambda")?, "lambda")?,
        required(scalar(args.mu, &config.mu, "mu")?, "mu")?,
        required(scalar(args.theta, &config.theta, "theta")?, "theta")?,
        required(scalar(args.p, &config.p, "p")?, "p")?,
        required(scalar(args.gamma, &config.gamma, "gamma")?, "gamma")?,
    ])
}

fn workload(args: &WorkloadArgs, config: &ConfigFile) -> Result<Workload, CliError> {
    let [lambda, mu, theta, p, gamma] = workload_values(args, config)?;
    Workload::new(lambda, mu, theta, p, gamma).map_err(|e| CliError::Invalid(e.to_string()))
}

fn model_params(args: &ParamArgs, config: &ConfigFile) -> Result<ModelParams, CliError> {
    let [lambda, mu, theta, p, gamma] = workload_values(&args.workload, config)?;
    let c = required(args.c.or(config.c), "c")?;
    RawParams {
        lambda,
        mu,
        theta,
        p,
        gamma,
        c,
    }
    .validate()
    .map_err(|e| CliError::Invalid(e.to_string()))
}

#[derive(Debug, Serialize)]
struct SimulationReport<'a> {
    params: RawParams,
    stop: StopRule,
    warmup: f64,
    seed: u64,
    replications: usize,
    delay_observation: DelayObservation,
    summary: &'a ReplicationSummary,
    runs: &'a [SimResult],
}

fn simulate(args: SimulateArgs, config: &ConfigFile, out_dir: &OutDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = model_params(&args.params, config)?;
    let stop = match (args.customers, args.horizon, config.customers, config.horizon) {
        (Some(n), _, _, _) => StopRule::Customers(n),
        (None, Some(t), _, _) => StopRule::Horizon(t),
        (None, None, Some(n), _) => StopRule::Customers(n),
        (None, None, None, Some(t)) => StopRule::Horizon(t),
        _ => return Err(CliError::Usage("simulate needs --customers or --horizon".into())),
    };
    let reps = args.reps.or(config.reps).unwrap_or(1);
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let invalid = |e: crate::simulator::SimError| CliError::Invalid(e.to_string());
    let mut cfg = SimConfig::new(&params, stop)
        .map_err(invalid)?
        .with_seed(seed)
        .with_delay_observation(args.delay_observation.into());
    if let Some(w) = args.warmup.or(config.warmup) {
        cfg = cfg.with_warmup(w).map_err(invalid)?;
    }
    if let Some(dt) = args.grid_dt.or(config.grid_dt) {
        cfg = cfg.with_grid(dt).map_err(invalid)?;
    }
    if args.events.is_some() {
        cfg = cfg.recording_events();
    }
    let mut runs = replicate_runs(&cfg, reps, args.jobs.or(config.jobs)).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut summary = ReplicationSummary::from_runs(&runs);

    if let Some(path) = &args.trajectory {
        let mut buf = Vec::new();
        if reps == 1 {
            write_grid_csv(runs[0].trajectory.as_deref().unwrap_or_default(), &mut buf)?;
        } else if let Some(band) = &summary.band {
            write_band_csv(band, &mut buf)?;
        }
        emit(&buf, Some(path), out_dir, stdout)?;
    }
    if let Some(path) = &args.events {
        let mut buf = Vec::new();
        write_events_csv(runs[0].events.as_deref().unwrap_or_default(), &mut buf)?;
        emit(&buf, Some(path), out_dir, stdout)?;
    }
    summary.band = None;
    for r in &mut runs {
        r.trajectory = None;
        r.events = None;
    }
    let report = SimulationReport {
        params: params.raw(),
        stop,
        warmup: cfg.warmup,
        seed,
        replications: reps,
        delay_observation: cfg.delay_observation,
        summary: &summary,
        runs: &runs,
    };
    emit(to_canonical_json(&report)?.as_bytes(), args.output.as_deref(), out_dir, stdout)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn write_grid_csv(points: &[crate::simulator::GridPoint], out: &mut Vec<u8>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "q", "s"]).map_err(csv_err)?;
    for p in points {
        w.write_record([p.t.to_string(), p.q.to_string(), p.s.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Internal(e.to_string()))
}

fn write_band_csv(band: &crate::simulator::TrajectoryBand, out: &mut Vec<u8>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "q_mean", "q_half_width", "s_mean", "s_half_width"]).map_err(csv_err)?;
    for k in 0..band.t.len() {
        w.write_record([
            band.t[k].to_string(),
            band.q_mean[k].to_string(),
            band.q_half_width[k].to_string(),
            band.s_mean[k].to_string(),
            band.s_half_width[k].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Internal(e.to_string()))
}

fn write_events_csv(events: &[EventRecord], out: &mut Vec<u8>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "event_tag", "q", "s"]).map_err(csv_err)?;
    for e in events {
        w.write_record([e.t.to_string(), e.event.tag().to_string(), e.q.to_string(), e.s.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Internal(e.to_string()))
}

fn sim_budget(args: &SimSearchArgs, config: &ConfigFile) -> SimBudget {
    let d = SimBudget::default();
    SimBudget {
        customers: args.customers.or(config.customers).unwrap_or(d.customers),
        replications: args.reps.or(config.reps).unwrap_or(d.replications),
        max_evaluations: args.max_evaluations.or(config.max_evaluations).unwrap_or(d.max_evaluations),
        seed: args.seed.or(config.seed).unwrap_or(d.seed),
        warmup: config.warmup.unwrap_or(d.warmup),
        jobs: args.jobs.or(config.jobs),
        delay_observation: args.delay_observation.into(),
    }
}

fn staff(args: &StaffArgs, config: &ConfigFile) -> Result<StaffingAnswer, CliError> {
    let w = workload(&args.workload, config)?;
    let eps = required(scalar(args.epsilon, &config.epsilon, "epsilon")?, "epsilon")?;
    let regime = match args.regime {
        RegimeArg::Auto => RegimeChoice::Auto,
        RegimeArg::Ul => RegimeChoice::Underloaded,
        RegimeArg::Ol => RegimeChoice::Overloaded,
    };
    let invalid = |e: crate::staffing::StaffingError| CliError::Invalid(e.to_string());
    let mismatch = |m: &str| CliError::Usage(format!("method {m} does not apply to this target"));
    match (args.target, args.method) {
        (TableKind::Delay, StaffMethod::Deterministic) => {
            staff_delay(&w, DelayTarget::new(eps).map_err(invalid)?, DelayRule::Deterministic, regime).map_err(invalid)
        }
        (TableKind::Delay, StaffMethod::Bivariate) => {
            staff_delay(&w, DelayTarget::new(eps).map_err(invalid)?, DelayRule::Bivariate, regime).map_err(invalid)
        }
        (TableKind::Abandonment, StaffMethod::Implicit) => {
            staff_abandon_implicit(&w, AbandonTarget::new(eps).map_err(invalid)?, AbandonOptions::default())
                .map_err(invalid)
        }
        (TableKind::Abandonment, StaffMethod::FluidBound) => {
            staff_abandon_fluid_bound(&w, AbandonTarget::new(eps).map_err(invalid)?).map_err(invalid)
        }
        (target, StaffMethod::Empirical) => {
            let metric = match target {
                TableKind::Delay => EmpiricalMetric::Delay,
                TableKind::Abandonment => EmpiricalMetric::Abandonment,
            };
            let start = args.start.unwrap_or_else(|| w.offered_load().ceil().max(1.0) as u64);
            staff_empirical(&w, metric, eps, sim_budget(&args.sim, config), start)
                .map_err(|e| CliError::Invalid(e.to_string()))
        }
        (TableKind::Delay, m) | (TableKind::Abandonment, m) => {
            let name = m.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
            Err(mismatch(&name))
        }
    }
}

fn table(
    args: TableArgs,
    config: &ConfigFile,
    out_dir: &OutDir,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let points = if args.benchmark {
        match args.kind {
            TableKind::Delay => benchmark_delay_points(),
            TableKind::Abandonment => benchmark_abandonment_points(),
        }
    } else {
        let grid = SweepGrid {
            lambda: list(&args.lambda, &config.lambda),
            mu: list(&args.mu, &config.mu),
            theta: list(&args.theta, &config.theta),
            p: list(&args.p, &config.p),
            gamma: list(&args.gamma, &config.gamma),
            epsilon: list(&args.epsilon, &config.epsilon),
        };
        let cap = args.max_rows.or(config.max_rows).unwrap_or(10_000);
        let _ = writeln!(stderr, "sweep: {} configurations", grid.size());
        grid.points(cap).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let budget = args.with_sim.then(|| sim_budget(&args.sim, config));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.sim.jobs.or(config.jobs).unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let rows = pool.install(|| build_table(&points, args.kind, budget.as_ref()));
    let mut buf = Vec::new();
    write_table(&rows, &mut buf, args.digits).map_err(csv_err)?;
    emit(&buf, args.output.as_deref(), out_dir, stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("erlangs").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn fixed_point_json() {
        let (code, out, _) = run_args(&[
            "fixed-point", "--lambda", "100", "--mu", "5", "--theta", "1", "--p", "0.1", "--gamma", "0.5", "--c", "100",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["q_star"], 20.0);
        assert_eq!(v["s_star"], 80.0);
        assert_eq!(v["regime"], "UL");
    }

    #[test]
    fn missing_flag_is_usage_error() {
        let (code, _, err) = run_args(&["fixed-point", "--lambda", "100"]);
        assert_eq!(code, 2);
        assert!(err.contains("--mu"));
    }

    #[test]
    fn invalid_params_report_fields() {
        let (code, _, err) = run_args(&[
            "moments", "--lambda", "100", "--mu", "1", "--theta", "1", "--p", "1.5", "--gamma", "1", "--c", "100",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("p must"), "{err}");
    }

    #[test]
    fn unknown_subcommand_exits_two() {
        assert_eq!(run_args(&["bogus"]).0, 2);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn moments_overloaded() {
        let (code, out, _) = run_args(&[
            "moments", "--lambda", "100", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "1", "--c", "100",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["v_qq"], 100.0);
        assert!(v.get("J").is_some() && v.get("Sigma").is_some());
    }

    #[test]
    fn empty_sweep_exits_two() {
        let (code, _, err) = run_args(&["table", "--kind", "delay", "--lambda", "80"]);
        assert_eq!(code, 2);
        assert!(err.contains("empty"));
    }

    #[test]
    fn unwritable_output_exits_three() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let target = blocker.join("out.json");
        let (code, _, _) = run_args(&[
            "fixed-point", "--lambda", "1", "--mu", "1", "--theta", "1", "--p", "0", "--gamma", "1", "--c", "2",
            "--output", target.to_str().unwrap(),
        ]);
        assert_eq!(code, 3);
    }

    #[test]
    fn wrong_method_for_target() {
        let (code, _, _) = run_args(&[
            "staff", "--lambda", "80", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "10", "--target",
            "abandonment", "--method", "bivariate", "--epsilon", "0.1",
        ]);
        assert_eq!(code, 2);
    }
}
