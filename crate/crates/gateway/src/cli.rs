//! Command line entry points.
//!
//! Exit status: 0 on success, 1 on a domain error (missing file, unknown
//! landmark, no path, episode not reaching its goal), 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridpilot::bundled;
use gridpilot::dcip::{run_episode, Episode, EpisodeConfig, Outcome};
use gridpilot::harness::{comparison_csv, comparison_markdown, run_comparison, scaling_study, ScalingConfig};
use gridpilot::instruct::{parse_instruction, NluBackend, RuleBased, StrategyProfile};

use crate::api::{serve, ServeConfig, DEFAULT_STRATEGY};
use crate::sources::{self, SourceError};

#[derive(Debug, Parser)]
#[command(name = "gridpilot", version, about = "Instruction-driven grid navigation: plan, simulate, benchmark, serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an instruction, apply it and print the plan with its metrics.
    Plan(PlanArgs),
    /// Run the closed loop to completion and write the episode log (JSONL).
    Simulate(SimulateArgs),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Start the HTTP session service.
    Serve(ServeArgs),
    /// Check scenario files.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Scenario file, or the name of a bundled scenario.
    pub scenario: String,
    #[arg(long, short)]
    pub instruction: String,
    #[arg(long, short, default_value = DEFAULT_STRATEGY)]
    pub strategy: String,
    /// rule, remote, or replay:<label|file>.
    #[arg(long, short, default_value = "rule")]
    pub backend: String,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Print the plan result as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Replan on every tick.
    #[arg(long)]
    pub literal_loop: bool,
    #[arg(long)]
    pub step_limit: Option<usize>,
    /// Write the log here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Strategy/backend comparison against the baseline search.
    Compare(CompareArgs),
    /// Grid-scaling study.
    Scale(ScaleArgs),
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(default_value = "warehouse")]
    pub scenario: String,
    #[arg(long, short, default_value = bundled::PICK_INSTRUCTION)]
    pub instruction: String,
    /// Comma-separated strategy names.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "Navigate Quickly,Maximize Safety,Balance Efficiency and Safety"
    )]
    pub strategies: Vec<String>,
    /// Comma-separated backend specs.
    #[arg(long, value_delimiter = ',', default_value = "rule,replay:mistral,replay:llama3,replay:llama3.1")]
    pub backends: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    #[arg(default_value = "warehouse")]
    pub scenario: String,
    #[arg(long, default_value_t = 10)]
    pub max_scale: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Profile of the instruction-driven planner.
    #[arg(long, default_value = DEFAULT_STRATEGY)]
    pub strategy: String,
    /// Instruction whose avoid/prefer edits are applied to every scaled map.
    #[arg(long)]
    pub instruction: Option<String>,
    /// `csv` writes one row per sample; `markdown` writes per-scale means.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, short, default_value_t = 8080)]
    pub port: u16,
    /// Directory for session snapshots.
    #[arg(long, env = "GRIDPILOT_STATE_DIR")]
    pub state_dir: Option<PathBuf>,
    /// Built web console to serve under `/`.
    #[arg(long, env = "GRIDPILOT_CONSOLE_DIR", default_value = "console/dist")]
    pub console_dir: PathBuf,
}

/// A failure reported on stderr as `error[code]: message`.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<SourceError> for Failure {
    fn from(e: SourceError) -> Self {
        Failure::new(e.code(), e.to_string())
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new("io_error", e.to_string())
}

fn emit(text: &str, out_path: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out_path {
        Some(path) => std::fs::write(path, text).map_err(io_failure),
        None => stdout.write_all(text.as_bytes()).map_err(io_failure),
    }
}

fn cmd_plan(args: &PlanArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let p = &args.pipeline;
    let source = sources::read_scenario(&p.scenario)?;
    let world = sources::load_world(&source)?;
    let profile = sources::strategy(&p.strategy)?;
    let backend = sources::backend(&p.backend)?;
    let mut episode = Episode::new(world, profile.clone(), EpisodeConfig::default(), backend.label());
    episode
        .instruct(&p.instruction, backend.as_ref())
        .map_err(|e| Failure::new(episode_code(&e), e.to_string()))?;
    let result = &episode.active().expect("plan in force").result;
    let actions = &episode.log().plans.last().expect("plan logged").actions;
    let text = if args.json {
        serde_json::to_string_pretty(&serde_json::json!({
            "strategy": profile.name.label(),
            "backend": backend.label(),
            "actions": actions,
            "plan": result,
        }))
        .expect("plan serializes")
            + "\n"
    } else {
        let path: Vec<String> = result.path.cells().iter().map(|(x, y)| format!("{x},{y}")).collect();
        format!(
            "strategy: {}\nbackend: {}\nactions: {}\nnodes_expanded: {}\nsearch_time_s: {:.6}\npath_cost: {}\npath_length: {}\nturns: {}\npath: {}\n",
            profile.name.label(),
            backend.label(),
            actions.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("; "),
            result.nodes_expanded,
            result.search_time_s,
            result.path_cost,
            result.path_length,
            result.turns,
            path.join(" ")
        )
    };
    stdout.write_all(text.as_bytes()).map_err(io_failure)
}

fn episode_code(e: &gridpilot::dcip::EpisodeError) -> String {
    use gridpilot::dcip::EpisodeError;
    match e {
        EpisodeError::Instruction(i) => serde_json::to_value(i)
            .ok()
            .and_then(|v| v.get("code").and_then(|c| c.as_str()).map(str::to_string))
            .unwrap_or_else(|| "instruction_error".into()),
        EpisodeError::Action { .. } => "action_failed".into(),
        EpisodeError::Plan(gridpilot::planner::PlanError::NoPath { .. }) => "no_path".into(),
        EpisodeError::Plan(_) => "plan_failed".into(),
    }
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let p = &args.pipeline;
    let source = sources::read_scenario(&p.scenario)?;
    let world = sources::load_world(&source)?;
    let profile = sources::strategy(&p.strategy)?;
    let backend = sources::backend(&p.backend)?;
    let config = EpisodeConfig {
        step_limit: args.step_limit,
        literal_loop: args.literal_loop,
    };
    let log = run_episode(&p.instruction, world, &profile, backend.as_ref(), config);
    emit(&log.to_jsonl(), args.out.as_ref(), stdout)?;
    let _ = writeln!(
        stderr,
        "outcome: {}, ticks: {}, replans: {}, executed cost: {}",
        log.outcome.map_or_else(|| "none".to_string(), |o| format!("{o:?}")),
        log.totals.ticks, log.totals.replans, log.totals.executed_cost
    );
    match log.outcome {
        Some(Outcome::GoalReached) => Ok(()),
        other => Err(Failure::new(
            match other {
                Some(Outcome::NoPath) => "no_path",
                Some(Outcome::StepLimit) => "step_limit",
                _ => "instruction_error",
            },
            log.note.unwrap_or_else(|| "episode did not reach its goal".into()),
        )),
    }
}

fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let source = sources::read_scenario(&args.scenario)?;
    let world = sources::load_world(&source)?;
    let strategies = args
        .strategies
        .iter()
        .map(|s| sources::strategy(s))
        .collect::<Result<Vec<StrategyProfile>, _>>()?;
    let backends = args
        .backends
        .iter()
        .map(|b| sources::backend(b))
        .collect::<Result<Vec<Box<dyn NluBackend>>, _>>()?;
    let refs: Vec<&dyn NluBackend> = backends.iter().map(|b| b.as_ref()).collect();
    let rows = run_comparison(&world, &args.instruction, &strategies, &refs)
        .map_err(|e| Failure::new("empty_config", e.to_string()))?;
    let text = match args.format {
        Format::Csv => comparison_csv(&rows),
        Format::Markdown => comparison_markdown(&rows),
    };
    emit(&text, args.out.as_ref(), stdout)
}

fn cmd_scale(args: &ScaleArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let source = sources::read_scenario(&args.scenario)?;
    let world = sources::load_world(&source)?;
    let mut config = ScalingConfig::new(args.max_scale, args.trials, args.seed);
    config.profile = sources::strategy(&args.strategy)?;
    if let Some(text) = &args.instruction {
        config.actions = parse_instruction(text, world.registry(), &RuleBased)
            .map_err(|e| Failure::new("instruction_error", e.to_string()))?
            .actions;
    }
    let report = scaling_study(&world, &config).map_err(|e| Failure::new("invalid_config", e.to_string()))?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Markdown => report.summary_markdown(),
    };
    emit(&text, args.out.as_ref(), stdout)
}

fn cmd_validate(scenarios: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let mut failures = 0;
    for arg in scenarios {
        match sources::read_scenario(arg).and_then(|s| sources::load_world(&s)) {
            Ok(world) => {
                let _ = writeln!(
                    stdout,
                    "ok {arg}: {}x{}, {} landmarks, {} pedestrians, {} events",
                    world.grid().width(),
                    world.grid().height(),
                    world.registry().len(),
                    world.pedestrians().len(),
                    world.pending_events().len()
                );
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(stderr, "error[{}]: {arg}: {e}", e.code());
            }
        }
    }
    if failures == 0 {
        Ok(())
    } else {
        Err(Failure::new("invalid_scenario", format!("{failures} scenario(s) failed validation")))
    }
}

fn cmd_serve(args: &ServeArgs) -> Result<(), Failure> {
    let runtime = tokio::runtime::Runtime::new().map_err(io_failure)?;
    runtime
        .block_on(serve(ServeConfig {
            addr: SocketAddr::new(args.host, args.port),
            state_dir: args.state_dir.clone(),
            console_dir: Some(args.console_dir.clone()),
        }))
        .map_err(io_failure)
}

/// Parses `argv` and runs the command. Returns the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Plan(args) => cmd_plan(args, stdout),
        Command::Simulate(args) => cmd_simulate(args, stdout, stderr),
        Command::Bench(BenchCommand::Compare(args)) => cmd_compare(args, stdout),
        Command::Bench(BenchCommand::Scale(args)) => cmd_scale(args, stdout),
        Command::Serve(args) => cmd_serve(args),
        Command::Validate { scenarios } => cmd_validate(scenarios, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error[{}]: {}", f.code, f.message);
            1
        }
    }
}
