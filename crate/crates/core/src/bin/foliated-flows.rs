use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use foliated_flows::harness::{self, ExperimentConfig, ExperimentKind};
use foliated_flows::Error;

/// Run foliated-flow experiments from a TOML config.
///
/// Without --config the built-in defaults for the subcommand are used.
/// Worker threads can be set with FOLIATED_FLOWS_THREADS.
#[derive(Parser)]
#[command(name = "foliated-flows", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate n-point motions and measure leaf invariance
    Simulate(RunArgs),
    /// Check kernel properties on a discretized cylinder
    KernelCheck(RunArgs),
    /// Averaging errors and pathwise decompositions over an eps grid
    Average(RunArgs),
    /// Averaging errors plus a fitted convergence rate
    Rates(RunArgs),
    /// Coalescing circle motions
    Coalesce(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Do not print the report
    #[arg(long)]
    quiet: bool,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default_for(kind),
    };
    if config.kind != kind {
        return Err(Error::Validation(vec![format!(
            "config kind {} does not match subcommand {}",
            config.kind.name(),
            kind.name()
        )]));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if args.replicas.is_some() {
        config.replicas = args.replicas;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::KernelCheck(a) => (ExperimentKind::KernelCheck, a),
        Command::Average(a) => (ExperimentKind::Average, a),
        Command::Rates(a) => (ExperimentKind::Rates, a),
        Command::Coalesce(a) => (ExperimentKind::Coalesce, a),
    };
    let level = if args.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match load(kind, args).and_then(|c| harness::run(&c)) {
        Ok(report) => {
            if !args.quiet {
                match report.to_json() {
                    Ok(json) => println!("{json}"),
                    Err(e) => return fail(&e),
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    let violations = match e {
        Error::Validation(v) => v.clone(),
        _ => Vec::new(),
    };
    let record = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "violations": violations,
    });
    eprintln!("{record}");
    ExitCode::from(2)
}
