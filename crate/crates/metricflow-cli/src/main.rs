//! metricflow: batch runner for flow verification experiments.
//!
//! `metricflow run <config.toml>` executes the configured suite and
//! writes one deterministic CSV or JSON table. Exit code 0 means every
//! row passed; 1 means at least one row failed; 2 is a config error;
//! 3 is a numerical or IO failure.

mod config;
mod emit;
mod registry;
mod suites;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::Format;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<metricflow::Error> for Failure {
    fn from(e: metricflow::Error) -> Self {
        Failure::numeric(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "metricflow",
    version,
    about = "Run convergence verification suites for local metric-space flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a TOML config file
    Run {
        /// Path to the experiment config
        config: PathBuf,
        /// Directory the output file is written into
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads for row evaluation (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the built-in flows and their certified parameters
    ListFlows,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            output_dir,
            jobs,
        } => match run(&config, output_dir.as_deref(), jobs) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(f) => {
                eprintln!("error: {}", f.message);
                ExitCode::from(f.code)
            }
        },
        Command::ListFlows => {
            print!("{}", registry::list_flows());
            ExitCode::SUCCESS
        }
    }
}

fn run(config_path: &Path, output_dir: Option<&Path>, jobs: Option<usize>) -> Result<bool, Failure> {
    let started = Instant::now();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("cannot size the worker pool: {e}")))?;
    }
    let text = fs::read_to_string(config_path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = config::parse(&text).map_err(Failure::config)?;
    config::validate_shape(&cfg).map_err(Failure::config)?;
    let seed = match std::env::var("METRICFLOW_SEED") {
        Ok(v) => v.trim().parse::<u64>().map_err(|_| {
            Failure::config(format!("METRICFLOW_SEED must be an unsigned integer, got {v:?}"))
        })?,
        Err(_) => cfg.seed,
    };
    let loaded = registry::load(&cfg, seed)?;
    config::validate_window(&cfg, loaded.flow.delta(), loaded.flow.horizon())
        .map_err(Failure::config)?;
    let rows = suites::execute(&cfg, &loaded, seed)?;
    let body = match cfg.output.format {
        Format::Csv => emit::to_csv(&rows),
        Format::Json => emit::to_json(&rows),
    };
    let out_path = match output_dir {
        Some(dir) => dir.join(&cfg.output.path),
        None => PathBuf::from(&cfg.output.path),
    };
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| Failure::numeric(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(&out_path, body)
        .map_err(|e| Failure::numeric(format!("cannot write {}: {e}", out_path.display())))?;
    let passed = rows.iter().filter(|r| r.pass).count();
    eprintln!(
        "{} [{}]: {passed}/{} rows passed, wrote {} in {:.2} s",
        cfg.suite.name(),
        loaded.kind,
        rows.len(),
        out_path.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(passed == rows.len())
}
