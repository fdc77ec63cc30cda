use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use pomdp_shield::analysis::{maximal_winning_region, AnalysisError, OracleScope, DEFAULT_NODE_CAP};
use pomdp_shield::benchmarks::random::{random_instance, RandomParams};
use pomdp_shield::benchmarks::{emit_explicit, generate, parse_explicit, BenchmarkParams, Family, Instance};
use pomdp_shield::jani::{export_jani_with, JaniOptions};
use pomdp_shield::sim::{evaluate, render_trace, simulate, Agent, SimConfig, Trace, DEFAULT_MAX_STEPS};
use pomdp_shield::synthesis::{run, DriverConfig, Goal, Mode};
use pomdp_shield::{BeliefSupport, Shield, StateSet, WinningRegionStore};

const EXIT_NOT_WINNING: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "pomdp-shield", version, about = "Winning regions and shields for almost-sure reach-avoid POMDPs")]
struct Cli {
    /// Log verbosity on stderr (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark model in the explicit format.
    Gen(GenArgs),
    /// Compute a winning region.
    Solve(SolveArgs),
    /// Audit a region file against a model.
    CheckRegion(CheckArgs),
    /// Run seeded agents under a shield built from a region.
    ShieldSimulate(SimArgs),
    /// Export the belief-support MDP as JANI.
    ExportJani(JaniArgs),
    /// Explicit maximal winning region.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Benchmark family, or `random` for a seeded random model.
    #[arg(long)]
    family: String,
    /// Grid size N.
    #[arg(long)]
    grid: Option<usize>,
    /// Battery capacity (refuel).
    #[arg(long)]
    battery: Option<usize>,
    /// View radius (evade, intercept, avoid).
    #[arg(long)]
    radius: Option<usize>,
    /// Seed for `random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// Model in the explicit format.
    model: PathBuf,
    /// Override the initial states (comma-separated state indices).
    #[arg(long, value_delimiter = ',')]
    initial: Option<Vec<usize>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    NaiveExplicit,
    NaiveIncremental,
    Incremental,
    Oneshot,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::NaiveExplicit => Mode::NaiveExplicit,
            ModeArg::NaiveIncremental => Mode::NaiveIncremental,
            ModeArg::Incremental => Mode::Incremental,
            ModeArg::Oneshot => Mode::Oneshot,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GoalArg {
    Fixpoint,
    Initial,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "incremental")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "fixpoint")]
    goal: GoalArg,
    /// Memory cells (oneshot).
    #[arg(short, long, default_value_t = 1)]
    memory: usize,
    /// Rank bound (oneshot); defaults to the product size.
    #[arg(short = 'k', long)]
    rank_bound: Option<usize>,
    /// Rebuild the encoding every this many outer iterations.
    #[arg(long, default_value_t = 50)]
    refresh_period: usize,
    /// Per-check timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Global budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Region file to write.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// JSON-lines progress log.
    #[arg(long)]
    log_file: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    region: PathBuf,
    /// Node cap for the oracle comparison.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    cap: usize,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Region file; synthesized with the incremental fixpoint if omitted.
    #[arg(long)]
    region: Option<PathBuf>,
    /// Simulate without a shield.
    #[arg(long, conflicts_with = "region")]
    unshielded: bool,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed of the first run; run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Only safety is claimed for the region.
    #[arg(long)]
    safety_only: bool,
    /// JSON-lines file receiving every trace.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Print the first run as ASCII frames (grid benchmarks only).
    #[arg(long)]
    dump: bool,
    /// Grid family the model came from, for --dump.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    battery: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
}

#[derive(Args)]
struct JaniArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Fix the probability constant to 1/|observations|.
    #[arg(long)]
    pin_p: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    cap: usize,
    /// Explore only supports reachable from the initial support.
    #[arg(long)]
    from_initial: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: EXIT_INTERNAL, error: e.into() }
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

type CmdResult = Result<u8, Failure>;

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(args: &ModelArgs) -> Result<Instance, Failure> {
    let text = fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))
        .map_err(usage)?;
    let (mut pomdp, spec) = parse_explicit(&text)
        .with_context(|| format!("parsing {}", args.model.display()))
        .map_err(usage)?;
    if let Some(states) = &args.initial {
        let n = pomdp.num_states();
        if let Some(bad) = states.iter().find(|&&s| s >= n) {
            return Err(usage(anyhow::anyhow!("initial state {bad} out of range (model has {n} states)")));
        }
        pomdp = pomdp.with_initial(StateSet::from_iter_with_width(n, states.iter().copied()));
    }
    Ok(Instance { pomdp, spec, layout: None })
}

fn load_region(path: &Path, inst: &Instance) -> Result<WinningRegionStore, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
    WinningRegionStore::from_text(&text, &inst.pomdp)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn params(family: &str, grid: Option<usize>, battery: Option<usize>, radius: Option<usize>) -> Result<BenchmarkParams, Failure> {
    let family: Family = family.parse().map_err(|e: pomdp_shield::benchmarks::BenchmarkError| usage(e.into()))?;
    Ok(BenchmarkParams { grid, battery, radius, ..BenchmarkParams::new(family) })
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let (inst, comment) = if args.family == "random" {
        (random_instance(args.seed, &RandomParams::default()), format!("random seed {}", args.seed))
    } else {
        let p = params(&args.family, args.grid, args.battery, args.radius)?;
        let inst = generate(&p).map_err(|e| usage(e.into()))?;
        let mut comment = p.family.to_string();
        for (k, v) in [("N", p.grid), ("E", p.battery), ("R", p.radius)] {
            if let Some(v) = v {
                comment.push_str(&format!(" {k}={v}"));
            }
        }
        (inst, comment)
    };
    write_out(args.output.as_deref(), &emit_explicit(&inst.pomdp, &inst.spec, Some(&comment)))?;
    Ok(0)
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, Failure> {
    s.map(|v| Duration::try_from_secs_f64(v).map_err(|e| usage(anyhow::anyhow!("bad duration {v}: {e}"))))
        .transpose()
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let inst = load(&args.model)?;
    let mode: Mode = args.mode.into();
    let goal = match args.goal {
        GoalArg::Fixpoint => Goal::Fixpoint,
        GoalArg::Initial => Goal::Initial,
    };
    if args.memory == 0 || args.rank_bound == Some(0) {
        return Err(usage(anyhow::anyhow!("memory and rank bound must be at least 1")));
    }
    let cfg = DriverConfig {
        memory: args.memory,
        rank_bound: args.rank_bound,
        refresh_period: args.refresh_period.max(1),
        check_timeout: seconds(args.timeout)?,
        budget: seconds(args.budget)?,
        max_iterations: args.max_iterations,
        ..DriverConfig::new(mode, goal)
    };
    let out = run(&inst.pomdp, &inst.spec, &cfg)?;
    if let Some(p) = &args.output {
        fs::write(p, out.store.to_text(&inst.pomdp)).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.log_file {
        fs::write(p, out.log_json_lines()).with_context(|| format!("writing {}", p.display()))?;
    }
    let size = out.store.region_size();
    eprintln!(
        "{mode}: {} iterations, {} solver calls, {} live entries",
        out.stats.iterations, out.stats.solver_calls, size.live_entries
    );
    let claims_initial = goal == Goal::Initial || mode == Mode::Oneshot;
    if out.initial_winning {
        println!("winning");
        Ok(0)
    } else if out.partial {
        println!("unknown (budget exhausted)");
        Ok(EXIT_BUDGET)
    } else if claims_initial {
        println!("not winning with these parameters");
        Ok(EXIT_NOT_WINNING)
    } else {
        println!("not winning");
        Ok(0)
    }
}

fn cmd_check(args: CheckArgs) -> CmdResult {
    let inst = load(&args.model)?;
    let store = load_region(&args.region, &inst)?;
    let deadlock_free = store.is_deadlock_free(&inst.pomdp);
    let productive = store.is_productive(&inst.pomdp, &inst.spec);
    println!("deadlock-free: {deadlock_free}");
    println!("productive: {productive}");
    let mut ok = deadlock_free && productive;
    match maximal_winning_region(&inst.pomdp, &inst.spec, args.cap, OracleScope::Full) {
        Ok(max) => {
            let sound = store.is_subregion_of(&max);
            println!("inside maximal region: {sound}");
            println!("maximal: {}", store.covers_same(&max));
            ok &= sound;
        }
        Err(AnalysisError::BudgetExceeded(cap)) => println!("oracle skipped: more than {cap} supports"),
    }
    Ok(if ok { 0 } else { EXIT_NOT_WINNING })
}

fn cmd_simulate(args: SimArgs) -> CmdResult {
    let mut inst = load(&args.model)?;
    if let Some(f) = &args.family {
        let generated = generate(&params(f, args.grid, args.battery, args.radius)?).map_err(|e| usage(e.into()))?;
        if generated.pomdp.num_states() == inst.pomdp.num_states() {
            inst.layout = generated.layout;
        }
    }
    if args.dump && inst.layout.is_none() {
        return Err(usage(anyhow::anyhow!("--dump needs --family and size flags matching the model")));
    }
    let store = match (&args.region, args.unshielded) {
        (_, true) => None,
        (Some(p), false) => Some(load_region(p, &inst)?),
        (None, false) => Some(run(&inst.pomdp, &inst.spec, &DriverConfig::default())?.store),
    };
    let shield = store.as_ref().map(|s| Shield::new(s, &inst.pomdp));
    if let Some(sh) = &shield {
        let init = BeliefSupport::new(&inst.pomdp, inst.pomdp.initial().clone())
            .ok_or_else(|| usage(anyhow::anyhow!("initial states span several observations")))?;
        if !sh.store.is_winning(&init) {
            println!("not winning");
            return Ok(EXIT_NOT_WINNING);
        }
    }
    let cfg = SimConfig { max_steps: args.max_steps, safety_only: args.safety_only };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs.max(1)).build()?;
    let traces: Vec<Trace> = pool.install(|| {
        (0..args.runs)
            .into_par_iter()
            .map(|i| simulate(&inst.pomdp, &inst.spec, shield.as_ref(), &Agent::UniformRandom, args.seed + i, &cfg))
            .collect::<Result<_, _>>()
    })?;
    if let Some(p) = &args.traces {
        let mut text = String::new();
        for t in &traces {
            text.push_str(&t.to_json());
            text.push('\n');
        }
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    if args.dump {
        if let (Some(t), Some(layout)) = (traces.first(), &inst.layout) {
            print!("{}", render_trace(t, layout));
        }
    }
    let summary = evaluate(&traces);
    print!("{}", summary.table());
    Ok(if shield.is_none() || summary.holds(args.safety_only) { 0 } else { EXIT_NOT_WINNING })
}

fn cmd_jani(args: JaniArgs) -> CmdResult {
    let inst = load(&args.model)?;
    let doc = export_jani_with(&inst.pomdp, &inst.spec, JaniOptions { pin_probability: args.pin_p });
    write_out(args.output.as_deref(), &doc.text)?;
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> CmdResult {
    let inst = load(&args.model)?;
    let scope = if args.from_initial { OracleScope::FromInitial } else { OracleScope::Full };
    let max = match maximal_winning_region(&inst.pomdp, &inst.spec, args.cap, scope) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_BUDGET);
        }
    };
    let text = max.to_text(&inst.pomdp);
    write_out(args.output.as_deref(), &text)?;
    let winning = BeliefSupport::new(&inst.pomdp, inst.pomdp.initial().clone()).is_some_and(|b| max.is_winning(&b));
    eprintln!("{} maximal supports; initial support {}", max.live_count(), if winning { "winning" } else { "not winning" });
    Ok(0)
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::CheckRegion(a) => cmd_check(a),
        Command::ShieldSimulate(a) => cmd_simulate(a),
        Command::ExportJani(a) => cmd_jani(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let filter = tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
