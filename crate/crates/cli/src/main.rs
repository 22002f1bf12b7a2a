use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinnet_cli::{CliError, Command, OutputFormat, Overrides, WORKERS_ENV};

/// Spin-photon network simulator.
#[derive(Parser)]
#[command(name = "spinnet", version = env!("SPINNET_BUILD"))]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Figures of merit of an emitter (and optionally a fiber link).
    InterfaceReport(RunArgs),
    /// Success and error of a Bell-state analyzer, with a Monte-Carlo check.
    BsaBench(RunArgs),
    /// Emit a GHZ or linear cluster state and report its stabilizers.
    ClusterGen(RunArgs),
    /// Two-way repeater chain.
    #[command(name = "repeater-2way")]
    Repeater2Way(RunArgs),
    /// One-way repeater chain with a parity code.
    #[command(name = "repeater-1way")]
    Repeater1Way(RunArgs),
    /// Sweep one parameter of the command named in `[sweep]`.
    Sweep(RunArgs),
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .map(Some)
            .ok_or_else(|| {
                CliError::Validation(vec![spinnet_cli::Diagnostic::new(
                    WORKERS_ENV,
                    format!("must be a positive integer, got `{v}`"),
                )])
            }),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let (command, args) = match cli.command {
        Sub::InterfaceReport(a) => (Command::InterfaceReport, a),
        Sub::BsaBench(a) => (Command::BsaBench, a),
        Sub::ClusterGen(a) => (Command::ClusterGen, a),
        Sub::Repeater2Way(a) => (Command::Repeater2Way, a),
        Sub::Repeater1Way(a) => (Command::Repeater1Way, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Validate { config } => {
            spinnet_cli::validate_config(&read(&config)?).map_err(CliError::Validation)?;
            println!("{}: ok", config.display());
            return Ok(());
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        trials: args.trials,
        output_path: args.output,
        output_format: args.format,
    };
    let cfg = spinnet_cli::load(&read(&args.config)?, command, &overrides)?;
    let text = match workers()? {
        Some(n) => spinnet_cli::execute_with_workers(&cfg, n)?,
        None => spinnet_cli::execute(&cfg)?,
    };
    if let Some(text) = spinnet_cli::emit(&cfg, text)? {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
