use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use llmo_cli::config::{BaselineKind, Scenario};
use llmo_cli::{analyze_rates, run_experiment, CliError, ExperimentConfig, Overrides, RunOptions};
use llmo_core::SamplerKind;
use llmo_wireless::ConstraintMode;

#[derive(Parser)]
#[command(
    name = "llmo",
    version,
    about = "LLM-optimizer experiments on wireless and synthetic rewards"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write CSV artifacts.
    Run(RunArgs),
    /// Fit semilog convergence rates in a finished run directory.
    Analyze { dir: PathBuf },
    /// Run the exact Markov-chain acceptance checks.
    VerifyTheory {
        config: PathBuf,
        /// Directory for the report files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Permit http agents to reach their endpoints.
    #[arg(long)]
    allow_network: bool,
    /// Also write every population as JSON next to the per-seed CSVs.
    #[arg(long)]
    dump_populations: bool,
    /// Validate and print the canonical config without running.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, value_parser = parse_kebab::<Scenario>)]
    scenario: Option<Scenario>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_kebab::<SamplerKind>)]
    samplers: Option<Vec<SamplerKind>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_kebab::<BaselineKind>)]
    baselines: Option<Vec<BaselineKind>>,
    #[arg(long, value_delimiter = ',')]
    ensemble_sizes: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_kebab::<ConstraintMode>)]
    constraint: Option<ConstraintMode>,
    #[arg(long)]
    max_retries: Option<usize>,
    /// Number of Rayleigh channel fixtures.
    #[arg(long)]
    fixtures: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_kebab<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn run(args: RunArgs) -> Result<bool, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    config.apply(&Overrides {
        scenario: args.scenario,
        dim: args.dim,
        population: args.population,
        iterations: args.iterations,
        seeds: args.seeds,
        samplers: args.samplers,
        baselines: args.baselines,
        ensemble_sizes: args.ensemble_sizes,
        constraint: args.constraint,
        max_retries: args.max_retries,
        fixtures: args.fixtures,
        output: args.output,
    })?;
    // A dry run never contacts an endpoint, so it does not need the flag.
    config.validate(args.allow_network || args.dry_run)?;
    if args.dry_run {
        println!("# config_hash: {}\n{}", config.hash(), config.canonical());
        return Ok(true);
    }
    let options = RunOptions {
        allow_network: args.allow_network,
        dump_populations: args.dump_populations,
    };
    let outcome = run_experiment(&config, options)?;
    println!("config {} -> {}", outcome.hash, config.output.display());
    for s in outcome.summaries() {
        println!(
            "{:<20} runs {:>5}  final best {:.6}  gap {:.3e}  violation {:.3e}  reached {}/{}  held at end {}/{}",
            s.curve,
            s.runs,
            s.mean_final_best,
            s.mean_final_gap,
            s.mean_final_violation,
            s.found,
            s.runs,
            s.held,
            s.runs
        );
    }
    println!("wall time {:.2}s", outcome.wall_time_s);
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Analyze { dir } => analyze_rates(&dir).map(|report| {
            for line in report.lines() {
                println!("{line}");
            }
            true
        }),
        Command::VerifyTheory { config, out } => llmo_cli::theory::load_setup(&config)
            .and_then(|setup| llmo_cli::theory::verify_theory(&setup, out.as_deref()))
            .map(|report| {
                for c in &report.criteria {
                    println!("{}", c.line());
                }
                report.passed()
            }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
