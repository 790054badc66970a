use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use coeffinv::experiment::{self, ExperimentConfig, RunOptions, SuiteOptions, SUITES};
use coeffinv::par::{self, Execution};

#[derive(Parser)]
#[command(name = "coeffinv", version, about = "Coefficient inversion experiments")]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave wall-clock columns empty.
        #[arg(long)]
        no_timing: bool,
    },
    /// Run a predefined experiment suite.
    Suite {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        id: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Leave wall-clock columns empty.
        #[arg(long)]
        no_timing: bool,
    },
    /// Compare adjoint gradients with central differences.
    CheckGradients {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.sequential {
        par::set_execution(Execution::Sequential);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, out, no_timing } => {
            let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let outcome = experiment::run_experiment(&cfg, RunOptions { timing: !no_timing })?;
            println!("{}", experiment::ResultRow::HEADER);
            println!("{}", outcome.row.to_csv());
            Ok(outcome.row.completed())
        }
        Command::Suite {
            id,
            out,
            workers,
            no_timing,
        } => {
            let mut opts = SuiteOptions {
                run: RunOptions { timing: !no_timing },
                ..SuiteOptions::default()
            };
            if let Some(w) = workers {
                opts.workers = w;
            }
            let report = experiment::run_suite(&id, &out, opts)?;
            print!("{}", std::fs::read_to_string(&report.table)?);
            Ok(report.all_completed())
        }
        Command::CheckGradients {
            samples,
            seed,
            tolerance,
        } => {
            let checks = experiment::check_gradients(samples, seed)?;
            let mut ok = true;
            for c in &checks {
                let pass = c.max_rel_err <= tolerance;
                ok &= pass;
                println!("{:<24} {:.3e} {}", c.case, c.max_rel_err, if pass { "ok" } else { "FAIL" });
            }
            let worst = checks.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
            println!("max relative error {worst:.3e}");
            Ok(ok)
        }
    }
}
