//! Command-line front end: run sweeps, validate configs, summarise CSVs.

use clap::{Parser, Subcommand};
use ratsteer::{load_config, read_csv, run_sweep, summarize, write_csv, Algorithm};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ratsteer", version, about = "Multi-RAT traffic steering simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write KPI rows as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Restrict the sweep to one algorithm.
        #[arg(long)]
        algo: Option<Algorithm>,
        /// Restrict the sweep to one seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; defaults to the config's `output`, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady-state means and DQN deltas from a KPI CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_CONFIG, e),
        },
        Command::Run { config, algo, seed, out } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            if let Some(a) = algo {
                cfg.algorithms = vec![a];
            }
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            let outcome = match run_sweep(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let written = match out.or(cfg.output.clone()) {
                Some(path) => File::create(&path)
                    .map_err(ratsteer::metrics::MetricsError::from)
                    .and_then(|f| write_csv(&outcome.rows, BufWriter::new(f))),
                None => write_csv(&outcome.rows, io::stdout().lock()),
            };
            if let Err(e) = written {
                return fail(EXIT_CONFIG, e);
            }
            for f in &outcome.failures {
                eprintln!("diverged: {f}");
            }
            if outcome.diverged() {
                ExitCode::from(EXIT_DIVERGED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Summarize { input } => {
            let rows = match File::open(&input).map_err(Into::into).and_then(read_csv) {
                Ok(r) => r,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            match summarize(&rows) {
                Ok(s) => {
                    let _ = write!(io::stdout().lock(), "{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_CONFIG, e),
            }
        }
    }
}
