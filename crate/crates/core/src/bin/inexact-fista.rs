use std::path::PathBuf;

use clap::{Parser, Subcommand};
use inexact_fista::cli::{cmd_solve, cmd_sweep, cmd_verify, CliOptions};

/// Inexact FISTA with certified error budgets.
///
/// Exit codes: 0 success, 1 I/O, parse or oracle error, 2 budget breach.
#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Args {
    /// Directory for trace, report and sweep files (default: current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Only print errors and failures.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one spec file; writes <name>.trace.csv and <name>.report.txt.
    Solve { spec: PathBuf },
    /// Run a spec once per value of one parameter and print a summary table.
    Sweep {
        spec: PathBuf,
        /// One of r, omega-fill, seed, L.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
    /// Run the invariant suites over a directory of .inst files.
    Verify {
        corpus: PathBuf,
        /// prox, optimality, descent, fb, gradient, momentum, budget or bounds.
        #[arg(long)]
        suite: Option<String>,
    },
}

fn main() {
    let args = Args::parse();
    let level = if args.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let opts = CliOptions {
        out_dir: args.out_dir,
        quiet: args.quiet,
    };
    let code = match args.command {
        Command::Solve { spec } => cmd_solve(&spec, &opts),
        Command::Sweep { spec, param, values } => cmd_sweep(&spec, &param, &values, &opts),
        Command::Verify { corpus, suite } => cmd_verify(&corpus, suite.as_deref(), &opts),
    };
    std::process::exit(code);
}
