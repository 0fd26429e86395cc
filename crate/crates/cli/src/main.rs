//! `pathvar` command line: non-variationality checks and Lagrangian
//! verification for path structures.

mod commands;
mod input;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Report;

#[derive(Parser, Debug)]
#[command(name = "pathvar", version, about = "Inverse variational problem toolkit for path structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// `catalog:<id>` or a path to a structure file.
    pub source: String,
    /// Dimension for parametric catalog entries.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampler seed; the VG_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide non-variationality from the rank of the fundamental system.
    Check {
        #[command(flatten)]
        common: Common,
        /// Prolongation levels; defaults to 1 for n >= 3 and 2 for n = 2.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Verify that a Lagrangian generates the given structure.
    Verify {
        #[command(flatten)]
        common: Common,
        /// `catalog` for the entry's own Lagrangian, a catalog id, or a file.
        #[arg(long)]
        lagrangian: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print the 1-homogeneous extension of a first-order Lagrangian.
    Homogenize {
        #[command(flatten)]
        common: Common,
    },
    /// Restrict a 1-homogeneous Lagrangian to the chart u0 = 1.
    Dehomogenize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Velocity Hessian of a Lagrangian and its determinant.
    Hessian {
        #[command(flatten)]
        common: Common,
    },
    /// Sample eigenvalue signs of the velocity Hessian of L^2.
    Convexity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Reduce a second-order Lagrangian affine in accelerations.
    Reduce2 {
        #[command(flatten)]
        common: Common,
    },
}

fn seed_override(common: &mut Common) -> Result<(), report::CliError> {
    if let Ok(s) = std::env::var("VG_SEED") {
        common.seed = s
            .trim()
            .parse()
            .map_err(|_| report::CliError::Input(format!("VG_SEED must be an unsigned integer, got `{s}`")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Report, report::CliError> {
    match cli.command {
        Command::Check { mut common, levels, trials } => {
            seed_override(&mut common)?;
            commands::check(&common, levels, trials)
        }
        Command::Verify { mut common, lagrangian, trials, tol } => {
            seed_override(&mut common)?;
            commands::verify(&common, &lagrangian, trials, tol)
        }
        Command::Homogenize { mut common } => {
            seed_override(&mut common)?;
            commands::homogenize(&common)
        }
        Command::Dehomogenize { mut common, trials } => {
            seed_override(&mut common)?;
            commands::dehomogenize(&common, trials)
        }
        Command::Hessian { mut common } => {
            seed_override(&mut common)?;
            commands::hessian(&common)
        }
        Command::Convexity { mut common, trials } => {
            seed_override(&mut common)?;
            commands::convexity(&common, trials)
        }
        Command::Reduce2 { mut common } => {
            seed_override(&mut common)?;
            commands::reduce2(&common)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match &cli.command {
        Command::Check { common, .. }
        | Command::Verify { common, .. }
        | Command::Homogenize { common }
        | Command::Dehomogenize { common, .. }
        | Command::Hessian { common }
        | Command::Convexity { common, .. }
        | Command::Reduce2 { common } => common.format,
    };
    match run(cli) {
        Ok(r) => {
            r.print(format);
            ExitCode::from(r.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
