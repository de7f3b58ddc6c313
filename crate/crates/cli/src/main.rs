//! Command-line front end: configuration parsing, experiment execution,
//! CSV and structured-text artifacts.
//!
//! Exit codes: 0 on success/pass, 2 on quantitative failure (an --expect
//! mismatch or a failed intrinsic check), 1 on any error. Errors are
//! reported as a single-line JSON record on stderr.

mod commands;
mod config;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::Expectation;
use config::Config;
use girsanov_lab::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "girsanov-lab",
    version,
    about = "Simulate SDE ensembles and verify path-independence of the Girsanov density"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path ensemble and write states plus density process to CSV
    Simulate(CommonArgs),
    /// Run the coupled refinement study and curl test; render a verdict
    Verify(CommonArgs),
    /// Solve the time-reversed equation backward from terminal data (constant sigma)
    KpzSolve(CommonArgs),
    /// Scan the 1D generalized Burgers residual over a space-time grid
    BurgersCheck(CommonArgs),
    /// Test the gradient-form necessary condition (Jacobian symmetry of a^-1 b)
    GradientCheck(CommonArgs),
    /// Empirical martingale check: mean of e^{-Zhat_T} against 1
    MartingaleCheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV and report artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Expected outcome; exit code 2 when the run disagrees
    #[arg(long, value_enum)]
    expect: Option<ExpectArg>,
    /// Override the seed from the configuration file
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensemble simulation (0 = library default);
    /// observable outputs never depend on this
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExpectArg {
    Independent,
    Dependent,
}

impl From<ExpectArg> for Expectation {
    fn from(e: ExpectArg) -> Self {
        match e {
            ExpectArg::Independent => Expectation::Independent,
            ExpectArg::Dependent => Expectation::Dependent,
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::SingularMatrix { .. } => "SingularMatrix",
        Error::DimensionMismatch(_) => "DimensionMismatch",
        Error::NonFiniteValue { .. } => "NonFiniteValue",
        Error::SyntaxError { .. } => "SyntaxError",
        Error::UnknownIdentifier { .. } => "UnknownIdentifier",
        Error::ArityError { .. } => "ArityError",
        Error::DomainError(_) => "DomainError",
        Error::UnboundVariable { .. } => "UnboundVariable",
        Error::NonFiniteState { .. } => "NonFiniteState",
        Error::UnstableParameters { .. } => "UnstableParameters",
        Error::NonPositiveW => "NonPositiveW",
        Error::ZeroDiffusion { .. } => "ZeroDiffusion",
        Error::QuadratureFailure(_) => "QuadratureFailure",
        Error::ConfigError(_) => "ConfigError",
        Error::TooFewPaths { .. } => "TooFewPaths",
    }
}

fn report_error(kind: &str, message: &str) {
    let record = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{record}");
}

fn run(args: &CommonArgs, f: impl FnOnce(&Config, &std::path::Path) -> Result<commands::Outcome, Error>) -> Result<i32, Error> {
    if args.threads > 0 {
        // outputs are scheduling-independent; the pool size only affects speed
        let _ = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global();
    }
    let cfg = Config::load(&args.config, args.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| {
        Error::ConfigError(format!("cannot create output directory {}: {e}", args.out.display()))
    })?;
    let outcome = f(&cfg, &args.out)?;
    println!("runtime: {:.3}s", outcome.report.runtime_seconds);
    Ok(outcome.exit_code)
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Simulate(args) => run(&args, commands::simulate),
        Command::Verify(args) => {
            let expect = args.expect.map(Expectation::from);
            run(&args, move |c, o| commands::verify(c, o, expect))
        }
        Command::KpzSolve(args) => run(&args, commands::kpz_solve),
        Command::BurgersCheck(args) => run(&args, commands::burgers_check),
        Command::GradientCheck(args) => {
            let expect = args.expect.map(Expectation::from);
            run(&args, move |c, o| commands::gradient_check(c, o, expect))
        }
        Command::MartingaleCheck(args) => run(&args, commands::martingale),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            report_error("CliError", &e.to_string().replace('\n', " "));
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            report_error(error_kind(&e), &e.to_string());
            ExitCode::from(1)
        }
    }
}
