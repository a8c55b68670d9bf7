//! `qwp`: validate predicates and programs, compute weakest preconditions,
//! verify Hoare triples and run property campaigns.
//!
//! Exit status: 0 ok, 1 IO or parse error, 2 semantic error, 3 a triple or
//! property campaign failed.

mod commands;
mod io;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qwp_core::campaign::Suite;
use qwp_core::tolerance::ToleranceConfig;

use commands::Context;
use io::CliError;

#[derive(Parser)]
#[command(name = "qwp", version, about = "Weakest preconditions for quantum programs with POVM predicates")]
struct Cli {
    /// Seed for every sampled check.
    #[arg(long, env = "QWP_SEED", default_value_t = 0, global = true)]
    seed: u64,
    /// Slack for PSD and Loewner-order decisions.
    #[arg(long, global = true)]
    eig_tol: Option<f64>,
    /// Slack for entrywise and trace equality checks.
    #[arg(long, global = true)]
    residual_tol: Option<f64>,
    /// Budget for sampled checks; also the default trial count of `properties`.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a predicate or program file.
    Validate { path: PathBuf },
    /// Compute WP(C)F. With --out, also writes a `.report.json` sidecar.
    Wp { program: PathBuf, predicate: PathBuf },
    /// Decide a {pre} prog {post} triple.
    Verify { triple: PathBuf },
    /// Satisfaction weights Tr(ρ F_a) of a state (matrix JSON) against a predicate.
    Sat { state: PathBuf, predicate: PathBuf },
    /// Run a property campaign: duality, weakest, compose, orders or all.
    Properties {
        suite: Suite,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        dims: Vec<usize>,
        /// Trials per dimension (defaults to --samples).
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn tolerance(cli: &Cli) -> Result<ToleranceConfig, CliError> {
    let d = ToleranceConfig::default();
    ToleranceConfig::new(
        cli.eig_tol.unwrap_or(d.eig_tol),
        cli.residual_tol.unwrap_or(d.residual_tol),
        cli.samples.unwrap_or(d.sample_count),
    )
    .map_err(CliError::from)
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let ctx = Context {
        tol: tolerance(&cli)?,
        seed: cli.seed,
        out: cli.out.clone(),
    };
    match &cli.command {
        Command::Validate { path } => commands::validate(&ctx, path),
        Command::Wp { program, predicate } => commands::wp(&ctx, program, predicate),
        Command::Verify { triple } => commands::verify(&ctx, triple),
        Command::Sat { state, predicate } => commands::sat_cmd(&ctx, state, predicate),
        Command::Properties { suite, dims, trials } => commands::properties(&ctx, *suite, dims, *trials),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            let _ = std::io::stdout().flush();
            eprint!("{}", outcome.stderr);
            ExitCode::from(outcome.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status)
        }
    }
}
