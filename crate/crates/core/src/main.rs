use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use refprime::runner::{cmd_analyze, cmd_report, cmd_run, cmd_validate, RunConfig, RunError};
use refprime::stimuli::Experiment;
use refprime::validation::{Suite, ValidationOptions};

#[derive(Parser)]
#[command(name = "refprime", version, about = "Referential-priming experiments on language models")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config, or a run manifest.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    experiment: Option<Experiment>,
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the simulated participant instead of a remote endpoint.
    #[arg(long, global = true)]
    mock: bool,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Continue a run in an existing directory, skipping completed participants.
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every session of the configured experiment.
    Run,
    /// Fit the experiment's model and write draws, summary and report.
    Analyze {
        /// Records table; defaults to trials.csv in the run directory.
        records: Option<PathBuf>,
    },
    /// Run the built-in oracle suites.
    Validate {
        /// gradient, grid, recovery, pmap, levene; all when omitted.
        suites: Vec<Suite>,
        #[arg(long, default_value_t = 20)]
        replications: usize,
    },
    /// Re-render the report from stored records and summary.
    Report {
        /// Other run directories to compare participant variance against.
        #[arg(long)]
        compare: Vec<PathBuf>,
    },
}

fn load_config(c: &Common) -> Result<RunConfig, RunError> {
    let mut config = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::for_experiment(c.experiment.unwrap_or(Experiment::E1a)),
    };
    if let Some(e) = c.experiment {
        config.experiment = e;
    }
    if let Some(s) = c.seed {
        config.seed = s;
    }
    if c.mock {
        config.mock = true;
    }
    if let Some(out) = &c.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Validate { suites, replications } => {
            let options = ValidationOptions {
                seed: cli.common.seed.unwrap_or(1),
                replications,
                ..Default::default()
            };
            let reports = cmd_validate(&suites, &options);
            for r in &reports {
                println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.suite);
                for d in &r.details {
                    println!("    {d}");
                }
            }
            Ok(i32::from(reports.iter().any(|r| !r.passed)))
        }
        Command::Run => {
            let config = load_config(&cli.common)?;
            let summary = cmd_run(&config, cli.common.resume)?;
            println!(
                "{} sessions run, {} skipped, {} failed, {} records in {}",
                summary.executed,
                summary.skipped,
                summary.failed.len(),
                summary.records,
                config.trials_path().display()
            );
            for (id, err) in &summary.failed {
                println!("failed {id}: {err}");
            }
            Ok(summary.exit_code())
        }
        Command::Analyze { records } => {
            let config = load_config(&cli.common)?;
            let out = cmd_analyze(&config, records.as_deref())?;
            print!("{}", out.report.to_markdown());
            Ok(0)
        }
        Command::Report { compare } => {
            let config = load_config(&cli.common)?;
            let report = cmd_report(&config, &compare)?;
            print!("{}", report.to_markdown());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
