mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neckpinch_core::ErrorCategory;

use config::{AnalysisArgs, BryantArgs, Config, FamilyArgs, FormalArgs, RunArgs, SearchArgs, SolverArgs};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Precondition(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Precondition(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) | CliError::Precondition(m) => write!(f, "{m}"),
        }
    }
}

impl From<neckpinch_core::Error> for CliError {
    fn from(e: neckpinch_core::Error) -> Self {
        match e.category() {
            ErrorCategory::Config => CliError::Config(e.to_string()),
            ErrorCategory::Numerical => CliError::Numerical(e.to_string()),
            ErrorCategory::Precondition => CliError::Precondition(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "neckpinch", version, about = "Simulate and analyze rotationally symmetric neckpinches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve an initial profile and classify its singularity
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fit the asymptotic regions to the snapshots of a run directory
    Analyze {
        /// Directory written by `simulate` or `formal`
        dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        bryant: BryantArgs,
    },
    /// Tabulate the steady soliton profile
    Bryant {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        bryant: BryantArgs,
    },
    /// Evaluate the composite formal solution and its residual
    Formal {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        formal: FormalArgs,
        #[command(flatten)]
        bryant: BryantArgs,
    },
    /// Bisect a family for the boundary between pinching and shrinking
    Search {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        bryant: BryantArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { run, family, solver } => {
            let mut c = Config::load(run.config.as_deref())?;
            run.apply(&mut c);
            family.apply(&mut c);
            solver.apply(&mut c);
            commands::simulate(&c)
        }
        Command::Analyze { dir, run, analysis, bryant } => {
            let mut c = Config::load(run.config.as_deref())?;
            run.apply(&mut c);
            analysis.apply(&mut c);
            bryant.apply(&mut c);
            commands::analyze_dir(&c, &dir)
        }
        Command::Bryant { run, bryant } => {
            let mut c = Config::load(run.config.as_deref())?;
            run.apply(&mut c);
            bryant.apply(&mut c);
            commands::bryant(&c)
        }
        Command::Formal { run, formal, bryant } => {
            let mut c = Config::load(run.config.as_deref())?;
            run.apply(&mut c);
            formal.apply(&mut c);
            bryant.apply(&mut c);
            commands::formal(&c)
        }
        Command::Search { run, family, solver, search, bryant } => {
            let mut c = Config::load(run.config.as_deref())?;
            run.apply(&mut c);
            family.apply(&mut c);
            solver.apply(&mut c);
            search.apply(&mut c);
            bryant.apply(&mut c);
            commands::search(&c)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
