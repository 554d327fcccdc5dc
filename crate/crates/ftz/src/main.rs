use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use ftz::cli::{run, CommandKind, ExperimentConfig};
use ftz::Error;

/// Fock-space Toeplitz experiment runner.
#[derive(Parser)]
#[command(name = "ftz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for reports and tables.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    /// Optional JSON configuration (the selftest ignores the symbol).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for reports and tables.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier round trip, heat semigroup, and Parseval checks.
    Transform(RunArgs),
    /// Build the Toeplitz matrix, check the Berezin identity, cache it.
    Toeplitz(RunArgs),
    /// Frequency decomposition with residuals and tail weights.
    Decompose(RunArgs),
    /// Schur, main, and chain norm bounds against the measured norm.
    Bounds(RunArgs),
    /// Schatten norms and their symbol/kernel/product bounds.
    Schatten(RunArgs),
    /// Two-sided Carleson comparison for the symbol's modulus.
    Carleson(RunArgs),
    /// Run every closed-form identity check; exits 0 iff all pass.
    Selftest(SelftestArgs),
}

fn init_thread_pool() {
    let threads = std::env::var("FTZ_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0);
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Format(_) => 3,
        Error::Config(_)
        | Error::InvalidGrid(_)
        | Error::InvalidParameter(_)
        | Error::Precondition(_)
        | Error::DomainMismatch(_)
        | Error::GridMismatch(_)
        | Error::NonFinite(_) => 2,
        Error::Numerical(_) => 1,
    }
}

fn selftest_config() -> ExperimentConfig {
    serde_json::from_str(r#"{"symbol": {"kind": "constant"}}"#).expect("static config")
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let (kind, config, out) = match &cli.command {
        Command::Transform(a) => (CommandKind::Transform, Some(&a.config), a.out.clone()),
        Command::Toeplitz(a) => (CommandKind::Toeplitz, Some(&a.config), a.out.clone()),
        Command::Decompose(a) => (CommandKind::Decompose, Some(&a.config), a.out.clone()),
        Command::Bounds(a) => (CommandKind::Bounds, Some(&a.config), a.out.clone()),
        Command::Schatten(a) => (CommandKind::Schatten, Some(&a.config), a.out.clone()),
        Command::Carleson(a) => (CommandKind::Carleson, Some(&a.config), a.out.clone()),
        Command::Selftest(a) => (CommandKind::Selftest, a.config.as_ref(), a.out.clone()),
    };

    let config = match (kind, config) {
        (CommandKind::Selftest, None) => Ok(selftest_config()),
        (_, Some(path)) => ExperimentConfig::from_file(path),
        _ => unreachable!("clap enforces --config"),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ftz: {e}");
            return ExitCode::from(2);
        }
    };

    match run(kind, &config, &out) {
        Ok(outcome) => {
            if outcome.pass {
                eprintln!("ftz: all assertions passed ({})", outcome.report_path.display());
                ExitCode::SUCCESS
            } else {
                eprintln!("ftz: assertion failure ({})", outcome.report_path.display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("ftz: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
