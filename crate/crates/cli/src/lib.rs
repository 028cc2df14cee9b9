//! Command-line front end for staged bandit experiments.
//!
//! Exit status is 0 on success, 2 for unreadable or invalid input and 3
//! when a run breaks a simulation invariant.

pub mod config;
pub mod run;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use smab_core::analysis::{enumerate_fixed_sequences, theorem_bounds};
use smab_core::engine::Coupling;
use smab_core::policies::MaskMode;
use smab_core::NoiseFamily;
use thiserror::Error;

use config::{
    load_env, noise_from_flags, ConfigFile, DeltaMode, EnvSource, PolicyConfig, ScenarioName, ScenarioParams,
    DEFAULT_DELTA, DEFAULT_FAL_SIGMA,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("invariant violated during the run: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "smab",
    version,
    about = "Simulate and analyze staged multi-armed bandits",
    after_help = "Set SMAB_LOG (error, warn, info, debug, trace) to control log output."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an environment and print its dimensions.
    Validate(EnvArgs),
    /// Print the gain table (ex-ante values, gains, gaps, deviation gaps) as JSON.
    Gains(GainsArgs),
    /// Run a learner against the benchmark and write the regret curve.
    Run(Box<RunArgs>),
    /// Evaluate the regret bounds and assumption flags of an environment.
    Bounds(BoundsArgs),
    /// List every fixed action sequence by expected value.
    EnumerateFixed(EnumerateArgs),
    /// Scenario utilities.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// Write a scenario's environment document to a file.
    Emit {
        #[arg(value_enum)]
        name: ScenarioName,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ScenarioFlags,
    },
}

/// Where the environment comes from.
#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// Environment document (JSON).
    #[arg(long, conflicts_with = "scenario")]
    pub env: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioName>,
    #[command(flatten)]
    pub params: ScenarioFlags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioFlags {
    /// Outcome noise level of the worked example (default 0.5).
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Outcome noise family of the worked example: gaussian or bounded-uniform.
    #[arg(long, value_parser = kebab::<NoiseFamily>)]
    pub noise_family: Option<NoiseFamily>,
    /// Seed of the synthetic screening cohort (default 2024).
    #[arg(long)]
    pub cohort_seed: Option<u64>,
    /// JSON file with screening or coverage scenario parameters.
    #[arg(long)]
    pub scenario_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GainsArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment configuration (JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub env: EnvArgs,
    /// Learner: benchmark, fal, fixed, guideline or cbb.
    #[arg(long)]
    pub policy: Option<String>,
    /// Horizon (rounds per replication).
    #[arg(long)]
    pub n: Option<usize>,
    /// Independent replications (default 1).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; required here or in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// FAL confidence level δ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// `fixed` keeps δ; `one-over-n` sets δ = 1/n.
    #[arg(long, value_enum)]
    pub delta_mode: Option<DeltaMode>,
    /// Sub-Gaussian parameter FAL assumes.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Optimistic bias added to the stop index.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// none or once-per-round.
    #[arg(long, value_parser = kebab::<MaskMode>)]
    pub mask: Option<MaskMode>,
    /// Action names of the fixed policy, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seq: Option<Vec<String>>,
    /// independent or common-random-numbers.
    #[arg(long, value_parser = kebab::<Coupling>)]
    pub coupling: Option<Coupling>,
    /// Rounds at which the summary reports regret, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
    /// Worker threads for replications.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Skip the confidence audit of FAL runs.
    #[arg(long)]
    pub no_audit: bool,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON summary output path.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Sub-Gaussian parameter (default: the environment's noise level, or 0.5).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Horizon for the expected-regret bounds.
    #[arg(long)]
    pub n: Option<usize>,
    /// Print the full report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Print only the best `top` sequences.
    #[arg(long)]
    pub top: Option<usize>,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Runs a parsed command line and returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(env) => validate(&env),
        Command::Gains(args) => {
            let env = load_env(&env_source(&args.env)?)?;
            let text = serde_json::to_string_pretty(&env.gain_table().to_json(env.model())).expect("json");
            emit(args.out.as_deref(), &text)
        }
        Command::Run(args) => run_command(*args),
        Command::Bounds(args) => bounds(&args),
        Command::EnumerateFixed(args) => enumerate(&args),
        Command::Scenario {
            command: ScenarioCommand::Emit { name, out, params },
        } => {
            let env = load_env(&EnvSource::Scenario(Box::new(scenario_params(name, &params)?)))?;
            emit(out.as_deref(), &env.spec().to_json_pretty())
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn scenario_params(name: ScenarioName, flags: &ScenarioFlags) -> Result<ScenarioParams, CliError> {
    let mut params = ScenarioParams::named(name);
    params.noise = noise_from_flags(flags.noise_sigma, flags.noise_family);
    params.cohort_seed = flags.cohort_seed;
    if let Some(path) = &flags.scenario_config {
        let text = config::read(path)?;
        let bad = |e: serde_json::Error| CliError::Config(format!("{}: {e}", path.display()));
        match name {
            ScenarioName::Screening => params.screening = Some(serde_json::from_str(&text).map_err(bad)?),
            ScenarioName::Coverage => params.coverage = Some(serde_json::from_str(&text).map_err(bad)?),
            ScenarioName::WorkedExample => {
                return Err(CliError::Config("the worked example takes no scenario configuration".into()))
            }
        }
    }
    Ok(params)
}

fn env_source_opt(args: &EnvArgs) -> Result<Option<EnvSource>, CliError> {
    Ok(match (&args.env, args.scenario) {
        (Some(path), _) => Some(EnvSource::File(path.clone())),
        (None, Some(name)) => Some(EnvSource::Scenario(Box::new(scenario_params(name, &args.params)?))),
        (None, None) => None,
    })
}

fn env_source(args: &EnvArgs) -> Result<EnvSource, CliError> {
    env_source_opt(args)?.ok_or_else(|| CliError::Config("give an environment with --env or --scenario".into()))
}

fn validate(args: &EnvArgs) -> Result<(), CliError> {
    let env = load_env(&env_source(args)?)?;
    let model = env.model();
    println!(
        "valid: l_max={} states={} actions={} feedbacks={} triplets={} reachable stage-states={}",
        model.l_max(),
        model.num_states(),
        model.num_actions(),
        model.num_feedbacks(),
        model.triplet_count(),
        model.reachable().len()
    );
    Ok(())
}

fn bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let env = load_env(&env_source(&args.env)?)?;
    let noise = env.spec().noise.sigma;
    let sigma = args.sigma.unwrap_or(if noise > 0.0 { noise } else { DEFAULT_FAL_SIGMA });
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CliError::Config(format!("sigma must be positive, got {sigma}")));
    }
    if !(args.delta > 0.0 && args.delta < 1.0) {
        return Err(CliError::Config(format!("delta must lie in (0, 1), got {}", args.delta)));
    }
    let table = env.gain_table();
    let report = theorem_bounds(env.model(), &table, sigma, args.delta, args.n);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("json"));
        return Ok(());
    }
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    println!("sigma = {sigma}, delta = {}, K = {}", args.delta, report.k);
    println!("suboptimal triplets: {}", report.caps.len());
    println!("thm1 (high probability): {:.4}", report.thm1_total);
    println!("thm2 (expected, delta = 1/n): {}", opt(report.thm2_total));
    println!("cor2 (expected, early deviations): {}", opt(report.cor2_total));
    println!("omega_max: {:.4}", report.omega_max);
    println!("assumption 2 satisfied: {}", report.assumption_2_satisfied);
    println!("assumption 3 satisfied: {}", report.assumption_3_satisfied);
    Ok(())
}

fn enumerate(args: &EnumerateArgs) -> Result<(), CliError> {
    let env = load_env(&env_source(&args.env)?)?;
    let values = enumerate_fixed_sequences(env.model()).map_err(|e| CliError::Config(e.to_string()))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for v in values.iter().take(args.top.unwrap_or(usize::MAX)) {
        let names = if v.names.is_empty() { "(stop)".to_string() } else { v.names.join(",") };
        let _ = writeln!(out, "{:.6}\t{names}", v.value);
    }
    Ok(())
}

/// Merges the configuration file and flags of a `run` invocation.
pub fn run_config(args: &RunArgs) -> Result<config::ExperimentConfig, CliError> {
    let mut file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(env) = env_source_opt(&args.env)? {
        file.env = Some(env);
    }
    if let Some(kind) = &args.policy {
        let same_kind = file.policy.as_ref().is_some_and(|p| policy_kind(p) == kind);
        if !same_kind {
            file.policy = Some(match kind.as_str() {
                "benchmark" => PolicyConfig::Benchmark,
                "fal" => PolicyConfig::Fal {
                    delta: DEFAULT_DELTA,
                    sigma: None,
                    epsilon: 0.0,
                    mask: None,
                },
                "fixed" => PolicyConfig::Fixed { seq: Vec::new() },
                "guideline" => PolicyConfig::Guideline,
                "cbb" => PolicyConfig::Cbb,
                other => return Err(CliError::Config(format!("unknown policy `{other}`"))),
            });
        }
    }
    match &mut file.policy {
        Some(PolicyConfig::Fal {
            delta,
            sigma,
            epsilon,
            mask,
        }) => {
            *delta = args.delta.unwrap_or(*delta);
            *sigma = args.sigma.or(*sigma);
            *epsilon = args.epsilon.unwrap_or(*epsilon);
            *mask = args.mask.or(*mask);
        }
        Some(PolicyConfig::Fixed { seq }) => {
            if let Some(s) = &args.seq {
                *seq = s.clone();
            }
        }
        _ => {}
    }
    let is_fal = matches!(file.policy, None | Some(PolicyConfig::Fal { .. }));
    if !is_fal && (args.delta.is_some() || args.sigma.is_some() || args.epsilon.is_some() || args.mask.is_some()) {
        return Err(CliError::Config("--delta, --sigma, --epsilon and --mask apply only to the fal policy".into()));
    }
    if file.policy.is_none() && (args.delta.is_some() || args.sigma.is_some() || args.epsilon.is_some() || args.mask.is_some()) {
        file.policy = Some(PolicyConfig::Fal {
            delta: args.delta.unwrap_or(DEFAULT_DELTA),
            sigma: args.sigma,
            epsilon: args.epsilon.unwrap_or(0.0),
            mask: args.mask,
        });
    }
    file.horizon = args.n.or(file.horizon);
    file.replications = args.reps.or(file.replications);
    file.seed = args.seed.or(file.seed);
    file.coupling = args.coupling.or(file.coupling);
    file.delta_mode = args.delta_mode.or(file.delta_mode);
    file.jobs = args.jobs.or(file.jobs);
    if args.checkpoints.is_some() {
        file.checkpoints = args.checkpoints.clone();
    }
    if args.no_audit {
        file.audit = Some(false);
    }
    if args.csv.is_some() {
        file.output.csv = args.csv.clone();
    }
    if args.json.is_some() {
        file.output.json = args.json.clone();
    }
    file.finish()
}

fn policy_kind(p: &PolicyConfig) -> &'static str {
    match p {
        PolicyConfig::Benchmark => "benchmark",
        PolicyConfig::Fal { .. } => "fal",
        PolicyConfig::Fixed { .. } => "fixed",
        PolicyConfig::Guideline => "guideline",
        PolicyConfig::Cbb => "cbb",
    }
}

fn run_command(args: RunArgs) -> Result<(), CliError> {
    let config = run_config(&args)?;
    let output = run::execute(&config)?;
    let write_error = |e: io::Error| CliError::Config(format!("cannot write the CSV output: {e}"));
    match &config.output.csv {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
            output
                .result
                .write_csv(io::BufWriter::new(file))
                .map_err(|e| write_error(e.into()))?;
        }
        None => {
            let stdout = io::stdout();
            output
                .result
                .write_csv(io::BufWriter::new(stdout.lock()))
                .map_err(|e| write_error(e.into()))?;
        }
    }
    if let Some(path) = &config.output.json {
        let text = serde_json::to_string_pretty(&output.summary(&config)).expect("json");
        emit(Some(path), &text)?;
    }
    eprint!("{}", output.table());
    Ok(())
}
