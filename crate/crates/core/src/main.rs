//! Command-line front end: run a scenario, print a builtin configuration or
//! run the acceptance suite.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use mechaudit::builtin::{builtin_scenario_with, BuiltinOptions};
use mechaudit::config::{config_schema, load_config};
use mechaudit::report::{canonical_json, emit_csv};
use mechaudit::runner::{default_workers, run_scenario, Timing};
use mechaudit::{acceptance, AuditError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mechaudit", version, about = "Audit mechanisms for privacy and truthfulness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Base seed; overrides the configuration.
    #[arg(long, env = "MECHAUDIT_SEED")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving privacy.csv and truthfulness.csv.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Exact-enumeration state budget.
    #[arg(long)]
    budget_states: Option<u64>,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    mc_samples: Option<u64>,
    /// Add wall-clock metadata to the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the audits of a configuration file (or a builtin) and write a report.
    Run {
        /// Scenario configuration (JSON).
        #[arg(required_unless_present = "builtin")]
        config: Option<PathBuf>,
        /// Run a builtin scenario instead of a file.
        #[arg(long, conflicts_with = "config")]
        builtin: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print the configuration of a builtin scenario.
    Example {
        name: String,
        #[arg(long)]
        players: Option<usize>,
        /// Candidate count (voting only).
        #[arg(long)]
        candidates: Option<usize>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the JSON schema of configuration files.
    Schema {
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite; exits 2 when a criterion fails.
    Verify {
        /// Criteria to run (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

const VERIFY_FAILED: u8 = 2;

fn write_text(path: Option<&PathBuf>, text: &str) -> Result<(), AuditError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn apply_flags(config: &mut ScenarioConfig, flags: &RunFlags) -> Result<(), AuditError> {
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(w) = flags.workers {
        config.workers = Some(w);
    }
    if let Some(b) = flags.budget_states {
        config.budgets.enumeration_states = b;
    }
    if let Some(m) = flags.mc_samples {
        config.budgets.mc_samples = m;
    }
    config.validate()?;
    Ok(())
}

fn run(config: Option<PathBuf>, builtin: Option<String>, flags: RunFlags) -> Result<(), AuditError> {
    let mut config = match (config, builtin) {
        (Some(path), _) => load_config(&path)?,
        (None, Some(name)) => builtin_scenario_with(&name, &BuiltinOptions::default())?,
        (None, None) => {
            return Err(AuditError::config(
                "config",
                "a configuration path or --builtin is required",
            ))
        }
    };
    apply_flags(&mut config, &flags)?;
    let start = Instant::now();
    let mut doc = run_scenario(&config)?;
    if flags.timing {
        doc.timing = Some(Timing {
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            workers: config.workers.unwrap_or_else(default_workers),
        });
    }
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    write_text(flags.out.as_ref(), &canonical_json(&doc)?)?;
    if let Some(dir) = &flags.csv {
        emit_csv(&doc, dir)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, builtin, flags } => run(config, builtin, flags),
        Command::Example {
            name,
            players,
            candidates,
            out,
        } => builtin_scenario_with(&name, &BuiltinOptions { players, candidates })
            .and_then(|c| c.to_json())
            .and_then(|text| write_text(out.as_ref(), &(text + "\n"))),
        Command::Schema { out } => config_schema().and_then(|text| write_text(out.as_ref(), &text)),
        Command::Verify { only } => {
            let ids: Vec<usize> = if only.is_empty() {
                acceptance::CRITERIA.iter().map(|c| c.0).collect()
            } else {
                only
            };
            let mut all = true;
            for id in ids {
                let outcome = acceptance::run_criterion(id);
                println!("{outcome}");
                all &= outcome.pass;
            }
            if !all {
                return ExitCode::from(VERIFY_FAILED);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
