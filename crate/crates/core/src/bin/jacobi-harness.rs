use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use jacobi_core::harness::{list_experiments, run, ExperimentConfig, HarnessError};

/// Environment variable read when --threads is not given.
const THREADS_ENV: &str = "JACOBI_THREADS";

#[derive(Parser)]
#[command(name = "jacobi-harness", version, about = "Run Jacobi analysis experiments and write CSV results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: $JACOBI_THREADS, else all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List registered experiments
    List,
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?)),
        Err(_) => Ok(None),
    }
}

fn run_command(config: PathBuf, out: Option<PathBuf>, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let cfg = match ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(threads)? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building the thread pool")?;
    match pool.install(|| run(&cfg, out.as_deref())) {
        Ok(o) => {
            println!("{}: all {} checks passed", cfg.experiment, o.report.checks.len());
            println!("wrote {}", o.table_path.display());
            println!("wrote {}", o.plot_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ HarnessError::Failed { .. }) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out, threads } => run_command(config, out, threads),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
