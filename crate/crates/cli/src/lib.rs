//! Scenario-driven front end: functionals of a stored distribution,
//! inequality suites and solver runs.

mod error;
mod functional;
mod io;
mod solve;
mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use landau_core::functionals::DissipationForm;

pub use error::CliError;
pub use solve::{RunConfig, GridConfig};
pub use verify::{SuiteKind, VerifyConfig, VerifyEntry};

#[derive(Debug, Parser)]
#[command(name = "landau", version, about = "Landau collision operator toolkit")]
pub struct Cli {
    /// Worker threads for the library's parallel loops.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Nodes per axis, overriding the input or config.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Functionals of a distribution file.
    Functional {
        #[arg(long)]
        input: PathBuf,
        /// `coulomb`, `power_law:<gamma>` or a JSON kernel object.
        #[arg(long, default_value = "coulomb")]
        psi: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Form::Projected)]
        form: Form,
    },
    /// Inequality suites over a family by resolution matrix.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Solver run with diagnostics.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Projected,
    Pairdiff,
}

impl From<Form> for DissipationForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Projected => DissipationForm::Projected,
            Form::Pairdiff => DissipationForm::Pairdiff,
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else {
        return Ok(());
    };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failed(format!("cannot start {n} threads: {e}")))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if cli.resolution == Some(0) {
        return Err(CliError::Usage("--resolution must be positive".into()));
    }
    match cli.command {
        Command::Functional { input, psi, out, form } => {
            init_threads(cli.threads)?;
            functional::run(&input, &psi, &out, form.into(), cli.resolution)
        }
        Command::Verify { config, out_dir } => {
            let mut cfg: VerifyConfig = io::read_config(&config)?;
            cfg.threads = cli.threads.or(cfg.threads);
            if let Some(n) = cli.resolution {
                cfg.resolutions = vec![n];
            }
            init_threads(cfg.threads)?;
            verify::run(&cfg, &out_dir)
        }
        Command::Solve { config, out_dir } => {
            let mut cfg: RunConfig = io::read_config(&config)?;
            cfg.threads = cli.threads.or(cfg.threads);
            if let Some(n) = cli.resolution {
                cfg.grid.nodes_per_axis = n;
            }
            init_threads(cfg.threads)?;
            solve::run(&cfg, &out_dir)
        }
    }
}
