//! Batch front-end for the spinnet simulators: TOML configs, sweeps and
//! deterministic CSV / JSON output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::run;
pub use config::{parse, validate_config, Command, Diagnostic, OutputFormat, RunConfig, SweepAxis};
pub use output::{render_csv, render_json, Cell, Row, Table};

/// Environment variable fixing the number of worker threads.
pub const WORKERS_ENV: &str = "SPINNET_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", list(.0))]
    Validation(Vec<Diagnostic>),
    #[error("simulation failed: {0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn list(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    /// 1 for invalid input, 2 for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) | CliError::Io { .. } => 2,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<OutputFormat>,
}

/// Parses `text`, pins the command and applies overrides.
pub fn load(text: &str, command: Command, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = config::parse(text).map_err(|d| CliError::Validation(vec![d]))?;
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Validation(vec![Diagnostic::new(
                "command",
                format!("config declares `{c}` but `{command}` was invoked"),
            )]));
        }
    }
    cfg.command = Some(command);
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(p) = &o.output_path {
        cfg.output_path = Some(p.clone());
    }
    if let Some(f) = o.output_format {
        cfg.output_format = f;
    }
    let diags = cfg.check();
    if !diags.is_empty() {
        return Err(CliError::Validation(diags));
    }
    Ok(cfg)
}

/// Runs and renders in the configured format.
pub fn execute(cfg: &RunConfig) -> Result<String, CliError> {
    let table = run(cfg)?;
    Ok(match cfg.output_format {
        OutputFormat::Csv => render_csv(&table, cfg),
        OutputFormat::Json => render_json(&table, cfg),
    })
}

/// [`execute`] on a dedicated pool of `workers` threads.
pub fn execute_with_workers(cfg: &RunConfig, workers: usize) -> Result<String, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| execute(cfg))
}

/// Writes to `cfg.output_path`, or returns the text for stdout.
pub fn emit(cfg: &RunConfig, text: String) -> Result<Option<String>, CliError> {
    match &cfg.output_path {
        Some(p) => std::fs::write(p, text)
            .map(|_| None)
            .map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            }),
        None => Ok(Some(text)),
    }
}
