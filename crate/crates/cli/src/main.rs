use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use palatini_cli::config::{load_file_config, FileConfig};
use palatini_cli::{resolve, run, write_artifacts, CliError, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "palatini", version, about = "Run gauge-theory collar scenarios and report tolerance checks")]
struct Cli {
    #[command(subcommand)]
    scenario: Command,
    /// TOML config; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scenario tolerance (`tolerances.check`).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// su2, abelian:N or lorentz:D
    #[arg(long, global = true)]
    algebra: Option<String>,
    /// Comma-separated couplings for lambda-sweep.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    lambdas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    steps: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    YmEvolve,
    PalatiniEvolve,
    PcaAnalyze,
    CheckInvariants,
    LambdaSweep,
    ReductionReport,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Scenario {
        match c {
            Command::YmEvolve => Scenario::YmEvolve,
            Command::PalatiniEvolve => Scenario::PalatiniEvolve,
            Command::PcaAnalyze => Scenario::PcaAnalyze,
            Command::CheckInvariants => Scenario::CheckInvariants,
            Command::LambdaSweep => Scenario::LambdaSweep,
            Command::ReductionReport => Scenario::ReductionReport,
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let file = match &cli.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    let over = Overrides { seed: cli.seed, out: cli.out, tol: cli.tol, algebra: cli.algebra, lambdas: cli.lambdas, steps: cli.steps };
    let cfg = resolve(cli.scenario.into(), file, over)?;
    let report = run(&cfg)?;
    write_artifacts(&cfg, &report)?;
    print!("{}", report.summary(&cfg));
    Ok(report.passed())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
