//! `qdmet` - batch driver for embedding calculations over FCIDUMP files and
//! built-in lattice models.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use qdmet_cli::config::{Method, RunConfig};
use qdmet_cli::runner::{execute_entry, execute_scan, rows_to_csv, RunRow};

#[derive(Parser)]
#[command(name = "qdmet", version, about = "quantum-embedding batch driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the single configured input.
    Run(CommonArgs),
    /// Execute every entry of the configured input list.
    Scan(ScanArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML configuration.
    config: PathBuf,
    /// Override the configured method (rhf|fci|vqe|dmet-fci|dmet-esvqe).
    #[arg(long)]
    method: Option<Method>,
    /// Override the configured CSV output path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Exit zero even when rows are unconverged or failed.
    #[arg(long)]
    allow_unconverged: bool,
    /// Log verbosity (off|error|warn|info|debug|trace).
    #[arg(long, default_value = "warn")]
    log_level: String,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Run entries on up to N worker threads.
    #[arg(long)]
    parallel: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let exit = match cli.command {
        Command::Run(args) => run_command(&args, None),
        Command::Scan(args) => run_command(&args.common, Some(args.parallel.unwrap_or(1))),
    };
    match exit {
        Ok(code) => std::process::exit(code),
        Err(error) => {
            eprintln!("error: {error:#}");
            std::process::exit(2);
        }
    }
}

fn run_command(args: &CommonArgs, scan_workers: Option<usize>) -> Result<i32> {
    env_logger::Builder::new()
        .parse_filters(&args.log_level)
        .try_init()
        .ok();

    let mut config = RunConfig::from_path(&args.config)?;
    if let Some(method) = args.method {
        config.method = method;
        config.validate()?;
    }
    if let Some(output) = &args.output {
        config.output.csv = Some(output.clone());
    }
    if log::log_enabled!(log::Level::Debug) {
        log::debug!("effective configuration:\n{}", config.to_toml()?);
    }
    let method = config.method;

    let rows: Vec<RunRow> = match scan_workers {
        None => {
            let input = config.single_input()?;
            vec![execute_entry(&input, &config, method)]
        }
        Some(workers) => {
            let inputs = config.scan_inputs();
            execute_scan(&inputs, &config, method, Some(workers))?
        }
    };

    for row in &rows {
        match &row.error {
            Some(error) => log::warn!("{}: failed: {error}", row.label),
            None => log::info!(
                "{}: E = {:.10} Ha ({} qubits, {:.3} s)",
                row.label,
                row.energy.unwrap_or(f64::NAN),
                row.n_qubits.unwrap_or(0),
                row.wall_seconds
            ),
        }
    }

    let csv = rows_to_csv(&rows)?;
    match &config.output.csv {
        Some(path) => {
            std::fs::write(path, &csv)
                .with_context(|| format!("cannot write {}", path.display()))?;
            let log_path = jsonl_path(path);
            let lines: Vec<&str> = rows
                .iter()
                .flat_map(|r| r.log_lines.iter().map(|s| s.as_str()))
                .collect();
            let mut body = lines.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            std::fs::write(&log_path, body)
                .with_context(|| format!("cannot write {}", log_path.display()))?;
        }
        None => {
            print!("{csv}");
        }
    }

    let all_good = rows.iter().all(RunRow::is_ok_and_converged);
    if all_good || args.allow_unconverged {
        Ok(0)
    } else {
        Ok(1)
    }
}

fn jsonl_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("jsonl")
}
