//! `bundletc`: typecheck bundle-typed tensor expressions, run geodesic,
//! harmonic-flow and variation solvers from JSON configs, and run the
//! verification suites.

mod commands;
mod config;
mod failure;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bundletc::bundle::Telescope;
use bundletc::verify::suites::Suite;
use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::RunConfig;
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "bundletc", version, about = "Typed tensor calculus on pullback bundles")]
struct Cli {
    /// How much bundle decoration appears in types and diagnostics.
    #[arg(long, global = true, env = "BUNDLETC_TELESCOPE", default_value = "mid")]
    telescope: Telescope,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Typecheck a DSL file; prints each typed expression and its type.
    Typecheck { file: PathBuf },
    /// Integrate a geodesic; CSV of t, coordinates, speed and Hamiltonian.
    Geodesic {
        /// JSON run configuration.
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run the harmonic-map heat flow; CSV of the sup tension per step.
    Harmonic {
        /// JSON run configuration.
        #[arg(short, long)]
        config: PathBuf,
        /// Also write the final configuration as CSV to this path.
        #[arg(long)]
        field_out: Option<PathBuf>,
    },
    /// First and second variation report for a configuration, as JSON.
    Variation {
        /// JSON run configuration.
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run verification criteria and print a pass/fail table.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Typecheck { file } => commands::typecheck(file, cli.telescope),
        Command::Geodesic { config } => commands::geodesic(&RunConfig::load(config)?),
        Command::Harmonic { config, field_out } => commands::harmonic(&RunConfig::load(config)?, field_out.as_deref()),
        Command::Variation { config } => commands::variation(&RunConfig::load(config)?),
        Command::Verify { suite, seed } => Ok(commands::verify(*suite, *seed)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("bundletc: {f}");
            return ExitCode::from(f.exit_code());
        }
    };
    for (path, contents) in &outcome.files {
        if let Err(e) = std::fs::write(path, contents) {
            eprintln!("bundletc: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(outcome.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(2);
    }
    eprint!("{}", outcome.stderr);
    ExitCode::from(outcome.code)
}
