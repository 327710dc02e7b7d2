//! `crashsched`: simulate, search, attack and verify online schedulers.
//!
//! Exit codes: 0 success or bound holds, 1 bound violation or FALSE
//! decision, 2 usage error, 3 resource budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crashsched::analysis::{AnalysisError, BruteForceReference, Reference, TraceReference};
use crashsched::engine::{run_offline_reference, run_simulation, EngineError, SimulationConfig};
use crashsched::fuzz::{audit_rule, run_trial, verify_instance, FuzzConfig, FuzzError, FuzzScheduler};
use crashsched::io::{
    config_from_json, config_to_json, pattern_from_json, pattern_to_json, schedule_from_csv, schedule_to_csv,
    CheckpointSidecar, ConfigFile, SchedulerSpec,
};
use crashsched::offline::{
    dec_c_sched, dec_t_sched, lower_bound_adversary, opt_brute_force, phase_log_csv, reduce_partition,
    AdversaryError, AdversaryRun, OptError, PartitionError,
};
use crashsched::schedulers::{LargestCostFirst, Laf, Lis, SchedulerError, SmallestCostFirst};
use crashsched::{AdversarialPattern, Rational, TimePoint};

const FUZZ_MAX_PROCS: u32 = 2;
const FUZZ_MAX_TASKS: usize = 8;

/// Online scheduling on crash-prone processors with speedup.
#[derive(Debug, Parser)]
#[command(name = "crashsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an online scheduler on a pattern and write the trace CSV.
    Simulate(SimulateArgs),
    /// Drive the lower-bound adversary against a scheduler.
    Adversary(AdversaryArgs),
    /// Exact offline optimum at a checkpoint.
    Opt(OptArgs),
    /// Build the scheduling instance of a Partition multiset.
    ReducePartition(ReduceArgs),
    /// Check a scheduler's bounds on one pattern.
    Verify(VerifyArgs),
    /// Check a scheduler's bounds on seeded random patterns.
    Fuzz(FuzzArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnlineKind {
    Lis,
    Burst,
    Laf,
}

impl OnlineKind {
    fn fuzz(self) -> FuzzScheduler {
        match self {
            OnlineKind::Lis => FuzzScheduler::Lis,
            OnlineKind::Burst => FuzzScheduler::Burst,
            OnlineKind::Laf => FuzzScheduler::Laf,
        }
    }

    fn spec(self, beta: Option<u64>) -> SchedulerSpec {
        match self {
            OnlineKind::Lis => SchedulerSpec::Lis { beta },
            OnlineKind::Burst => SchedulerSpec::Burst,
            OnlineKind::Laf => SchedulerSpec::Laf { beta },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AdversaryTarget {
    Lis,
    Laf,
    LargestFirst,
    SmallestFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Measure {
    Cost,
    Tasks,
}

/// Either a config file or a pattern with scheduler and horizon.
#[derive(Debug, Args)]
struct RunSource {
    /// Config JSON holding pattern, scheduler and horizon.
    #[arg(long, conflicts_with_all = ["pattern", "scheduler", "horizon", "beta"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pattern: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "config")]
    scheduler: Option<OnlineKind>,
    /// Overrides the pattern's beta for lis and laf.
    #[arg(long, value_parser = parse_int)]
    beta: Option<u64>,
    #[arg(long, value_parser = parse_rational, required_unless_present = "config")]
    horizon: Option<Rational>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: RunSource,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AdversaryArgs {
    #[arg(long, value_enum)]
    scheduler: AdversaryTarget,
    #[arg(long, value_parser = parse_int)]
    lmin: u64,
    #[arg(long, value_parser = parse_int)]
    lmax: u64,
    #[arg(long, value_parser = parse_rational)]
    speedup: Rational,
    #[arg(long, value_parser = parse_int)]
    phases: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct OptArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long, value_parser = parse_rational)]
    checkpoint: Rational,
    /// Decide whether the chosen measure can be at most this value.
    #[arg(long, value_parser = parse_int)]
    omega: Option<u64>,
    #[arg(long, value_enum, default_value = "cost")]
    measure: Measure,
    /// Where to write the schedule achieving the cost minimum.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Where to write the schedule achieving the task minimum.
    #[arg(long)]
    tasks_witness: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    /// Comma-separated positive integers.
    #[arg(long)]
    set: String,
    /// Pattern JSON output; the sidecar goes next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also decide the instance and exit 0 (TRUE) or 1 (FALSE).
    #[arg(long)]
    solve: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: RunSource,
    /// Explicit offline schedule (proc,task,start CSV) to compare against
    /// instead of the exact optimum.
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FuzzArgs {
    #[arg(long, value_enum)]
    scheduler: OnlineKind,
    /// Largest processor count drawn.
    #[arg(long, value_parser = parse_int)]
    n: u64,
    /// Largest task count drawn.
    #[arg(long, value_parser = parse_int)]
    tasks: u64,
    #[arg(long, value_parser = parse_int)]
    trials: u64,
    #[arg(long, value_parser = parse_int)]
    seed: u64,
    /// Directory for replayable configs of failing trials.
    #[arg(long, default_value = ".")]
    dump: PathBuf,
    /// Dump every trial, not only failing ones.
    #[arg(long)]
    dump_all: bool,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

fn parse_int(s: &str) -> Result<u64, String> {
    let r = parse_rational(s)?;
    if !r.is_integer() || r.is_negative() {
        return Err(format!("expected a non-negative integer, got {s}"));
    }
    u64::try_from(r.numer()).map_err(|_| format!("{s} is too large"))
}

/// A failed command: exit code and message.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }

    fn budget(msg: impl Into<String>) -> Self {
        Failure { code: 3, msg: msg.into() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::BudgetExceeded(_) => Failure::budget(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<OptError> for Failure {
    fn from(e: OptError) -> Self {
        match e {
            OptError::Budget { .. } => Failure::budget(e.to_string()),
            OptError::InvalidPattern(_) => Failure::usage(e.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Opt(e) => e.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<FuzzError> for Failure {
    fn from(e: FuzzError) -> Self {
        match e {
            FuzzError::Engine(e) => e.into(),
            FuzzError::Analysis(e) => e.into(),
            FuzzError::Scheduler(e) => Failure::usage(e.to_string()),
        }
    }
}

impl From<SchedulerError> for Failure {
    fn from(e: SchedulerError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<AdversaryError> for Failure {
    fn from(e: AdversaryError) -> Self {
        match e {
            AdversaryError::Engine(e) => e.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<PartitionError> for Failure {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Opt(e) => e.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_pattern(path: &Path) -> Result<AdversarialPattern, Failure> {
    let pattern = pattern_from_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let violations = pattern.validate();
    if !violations.is_empty() {
        return Err(Failure::usage(format!("invalid pattern {}: {violations:?}", path.display())));
    }
    Ok(pattern)
}

fn load_source(source: &RunSource) -> Result<ConfigFile, Failure> {
    if let Some(path) = &source.config {
        let config = config_from_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let violations = config.pattern.validate();
        if !violations.is_empty() {
            return Err(Failure::usage(format!("invalid pattern in {}: {violations:?}", path.display())));
        }
        return Ok(config);
    }
    let missing = |what: &str| Failure::usage(format!("--{what} is required without --config"));
    let pattern = load_pattern(source.pattern.as_deref().ok_or_else(|| missing("pattern"))?)?;
    let kind = source.scheduler.ok_or_else(|| missing("scheduler"))?;
    let horizon = source.horizon.ok_or_else(|| missing("horizon"))?;
    Ok(ConfigFile { pattern, scheduler: kind.spec(source.beta), horizon })
}

/// The scheduler family of a config, with its beta written into the pattern.
fn resolve(config: &ConfigFile) -> (FuzzScheduler, AdversarialPattern) {
    let mut pattern = config.pattern.clone();
    let kind = match config.scheduler {
        SchedulerSpec::Lis { beta } => {
            pattern.params.beta = beta.unwrap_or(pattern.params.beta);
            FuzzScheduler::Lis
        }
        SchedulerSpec::Laf { beta } => {
            pattern.params.beta = beta.unwrap_or(pattern.params.beta);
            FuzzScheduler::Laf
        }
        SchedulerSpec::Burst => FuzzScheduler::Burst,
    };
    (kind, pattern)
}

fn check_horizon(pattern: &AdversarialPattern, horizon: TimePoint) -> Result<(), Failure> {
    match pattern.last_event_time() {
        Some(last) if horizon < last => {
            Err(Failure::usage(format!("horizon {horizon} is before the last event at {last}")))
        }
        _ => Ok(()),
    }
}

fn simulate(args: &SimulateArgs) -> Outcome {
    let config = load_source(&args.source)?;
    check_horizon(&config.pattern, config.horizon)?;
    let trace = run_simulation(&SimulationConfig::new(config.pattern, config.scheduler, config.horizon))?;
    write(&args.out, &trace.to_csv())?;
    let (tasks, cost) = trace.final_pending();
    println!("pending_tasks={tasks} pending_cost={cost}");
    Ok(ExitCode::SUCCESS)
}

fn adversary(args: &AdversaryArgs) -> Outcome {
    let phases = usize::try_from(args.phases).map_err(|_| Failure::usage("--phases is too large"))?;
    let (lmin, lmax, s) = (args.lmin, args.lmax, args.speedup);
    let beta = if lmin == 0 { 0 } else { lmax.div_ceil(lmin) };
    let run: AdversaryRun = match args.scheduler {
        AdversaryTarget::Lis => lower_bound_adversary(Lis::new(1, beta), lmin, lmax, s, phases)?,
        AdversaryTarget::Laf => lower_bound_adversary(Laf::new(1, beta), lmin, lmax, s, phases)?,
        AdversaryTarget::LargestFirst => lower_bound_adversary(LargestCostFirst, lmin, lmax, s, phases)?,
        AdversaryTarget::SmallestFirst => lower_bound_adversary(SmallestCostFirst, lmin, lmax, s, phases)?,
    };
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    write(&args.out_dir.join("alg_trace.csv"), &run.alg_trace.to_csv())?;
    write(&args.out_dir.join("off_trace.csv"), &run.off_trace.to_csv())?;
    write(&args.out_dir.join("off_schedule.csv"), &schedule_to_csv(&run.off_schedule))?;
    write(&args.out_dir.join("phases.csv"), &phase_log_csv(&run.phases))?;
    write(&args.out_dir.join("pattern.json"), &pattern_to_json(&run.pattern))?;

    println!("gamma={} phases={}", run.gamma, run.phases.len());
    println!("phase,alg_pending,off_pending,divergence");
    for p in &run.phases {
        let divergence = i128::from(p.alg_pending) - i128::from(p.off_pending);
        println!("{},{},{},{divergence}", p.phase, p.alg_pending, p.off_pending);
    }
    let checks = run.check_lemmas();
    println!(
        "off_phase_start={} alg_no_lmax_inform={} scenario2_backlog={} linear_growth={} growth_divisor={}",
        checks.off_phase_start, checks.alg_no_lmax_inform, checks.scenario2_backlog, checks.linear_growth,
        checks.growth_divisor
    );
    Ok(if checks.all() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn opt(args: &OptArgs) -> Outcome {
    let pattern = load_pattern(&args.pattern)?;
    if let Some(omega) = args.omega {
        let yes = match args.measure {
            Measure::Cost => dec_c_sched(&pattern, args.checkpoint, omega)?,
            Measure::Tasks => dec_t_sched(&pattern, args.checkpoint, omega)?,
        };
        println!("{}", if yes { "TRUE" } else { "FALSE" });
        return Ok(if yes { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let result = opt_brute_force(&pattern, args.checkpoint)?;
    println!("min_pending_cost={}", result.min_pending_cost);
    println!("min_pending_tasks={}", result.min_pending_tasks);
    println!("min_pending_lmax={}", result.min_pending_lmax);
    if let Some(path) = &args.witness {
        write(path, &schedule_to_csv(&result.cost_witness))?;
        println!("witness={}", path.display());
    }
    if let Some(path) = &args.tasks_witness {
        write(path, &schedule_to_csv(&result.tasks_witness))?;
        println!("tasks_witness={}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "pattern".into());
    out.with_file_name(format!("{stem}.checkpoint.json"))
}

fn reduce(args: &ReduceArgs) -> Outcome {
    let set: Vec<u64> = args
        .set
        .split(',')
        .map(|x| parse_int(x.trim()))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::usage(format!("--set: {e}")))?;
    let instance = reduce_partition(&set)?;
    write(&args.out, &pattern_to_json(&instance.pattern))?;
    let sidecar = CheckpointSidecar { checkpoint: instance.checkpoint, omega: instance.omega };
    let sidecar_file = sidecar_path(&args.out);
    write(&sidecar_file, &serde_json::to_string(&sidecar).expect("sidecar serializes"))?;
    println!("checkpoint={} omega={} sidecar={}", instance.checkpoint, instance.omega, sidecar_file.display());
    if args.solve {
        let yes = dec_c_sched(&instance.pattern, instance.checkpoint, instance.omega)?;
        println!("{}", if yes { "TRUE" } else { "FALSE" });
        return Ok(if yes { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs) -> Outcome {
    let config = load_source(&args.source)?;
    check_horizon(&config.pattern, config.horizon)?;
    let (kind, pattern) = resolve(&config);
    let mut reference: Box<dyn Reference> = match &args.schedule {
        Some(path) => {
            let runs = schedule_from_csv(&read(path)?).map_err(|e| Failure::usage(e.to_string()))?;
            let off = run_offline_reference(&pattern, &runs, config.horizon)?;
            Box::new(TraceReference::new(&off, pattern.params.lmax)?)
        }
        None => Box::new(BruteForceReference::new(&pattern, Default::default())),
    };
    let (_, reports, incidents) = verify_instance(kind, &pattern, config.horizon, reference.as_mut())?;
    for report in &reports {
        println!("{}", report.to_json());
    }
    let (threshold, _) = audit_rule(kind, &pattern.params);
    println!("{}", json!({"audit": "redundancy", "threshold": threshold, "incidents": incidents.len()}));
    let ok = reports.iter().all(|r| r.holds) && incidents.is_empty();
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn fuzz(args: &FuzzArgs) -> Outcome {
    if !(1..=u64::from(FUZZ_MAX_PROCS)).contains(&args.n) {
        return Err(Failure::usage(format!("--n must be between 1 and {FUZZ_MAX_PROCS}, got {}", args.n)));
    }
    if !(1..=FUZZ_MAX_TASKS as u64).contains(&args.tasks) {
        return Err(Failure::usage(format!("--tasks must be between 1 and {FUZZ_MAX_TASKS}, got {}", args.tasks)));
    }
    let kind = args.scheduler.fuzz();
    let config = FuzzConfig::new(kind, args.n as u32, args.tasks as usize, args.trials, args.seed);
    let regimes = if kind == FuzzScheduler::Burst { crashsched::fuzz::burst_regimes() } else { Vec::new() };
    if args.dump_all || args.trials > 0 {
        fs::create_dir_all(&args.dump)
            .map_err(|e| Failure::usage(format!("cannot create {}: {e}", args.dump.display())))?;
    }
    for trial in 0..args.trials {
        let outcome = run_trial(&config, trial, &regimes)?;
        let pattern = &outcome.instance.pattern;
        let reports: Vec<serde_json::Value> =
            outcome.reports.iter().map(|r| serde_json::to_value(r).expect("report serializes")).collect();
        println!(
            "{}",
            json!({
                "trial": trial,
                "n": pattern.params.n,
                "tasks": pattern.tasks().count(),
                "events": pattern.events.len(),
                "reports": reports,
                "incidents": outcome.incidents.len(),
            })
        );
        let clean = outcome.clean();
        if args.dump_all || !clean {
            let dump = ConfigFile { pattern: pattern.clone(), scheduler: kind.spec(), horizon: outcome.instance.horizon };
            let path = args.dump.join(format!("fuzz-{kind}-seed{}-trial{trial}.json", args.seed));
            write(&path, &config_to_json(&dump))?;
            if !clean {
                println!("violation in trial {trial}; replay with: crashsched verify --config {}", path.display());
                return Ok(ExitCode::from(1));
            }
        }
    }
    println!("trials={} violations=0", args.trials);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Adversary(a) => adversary(a),
        Command::Opt(a) => opt(a),
        Command::ReducePartition(a) => reduce(a),
        Command::Verify(a) => verify(a),
        Command::Fuzz(a) => fuzz(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
