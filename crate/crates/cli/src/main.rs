//! `twendo`: orbit tables, endoscopic data and lifting checks from the command line.
//!
//! Exit codes: 0 when every check passes, 1 on a verification mismatch, 2 on invalid
//! input.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twendo_core::lifting::Gl2Mutation;

use crate::config::Loaded;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "twendo", version, about = "Exact twisted endoscopy computations for real groups")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for cached orbit tables.
    #[arg(long, global = true, env = "TWENDO_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mutation {
    SignFlip,
    OffDiagonal,
}

#[derive(Subcommand)]
enum Command {
    /// Elliptic twisted endoscopic data of GL(N).
    EndoData {
        #[arg(long = "N", short = 'N', visible_alias = "n")]
        n: Option<usize>,
    },
    /// Orbit table for the configured parameter.
    Orbits,
    /// Closure relation of the orbit table.
    Closure,
    /// Lifting identity for configured tables and microlocal data.
    Lift,
    /// The twisted GL(2) example end to end.
    VerifyGl2 {
        /// Inject a defect to exercise the checkpoints.
        #[arg(long, value_enum)]
        mutation: Option<Mutation>,
    },
    /// Equivariance of the torus correspondence: the configured torus, or a full sweep.
    EquivarianceCheck {
        #[arg(long, default_value_t = 2)]
        max_rank: usize,
        #[arg(long)]
        bound: Option<u32>,
    },
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    let loaded = Loaded::from_path(cli.config.as_deref())?;
    let cache = cli.cache_dir.as_deref();
    match &cli.command {
        Command::EndoData { n } => commands::endo_data(*n, &loaded),
        Command::Orbits => commands::orbits(&loaded, cache),
        Command::Closure => commands::closure(&loaded, cache),
        Command::Lift => commands::lift(&loaded, cache),
        Command::VerifyGl2 { mutation } => commands::verify_gl2_cmd(mutation.map(|m| match m {
            Mutation::SignFlip => Gl2Mutation::SignFlip,
            Mutation::OffDiagonal => Gl2Mutation::OffDiagonal,
        })),
        Command::EquivarianceCheck { max_rank, bound } => commands::equivariance_check(&loaded, *max_rank, *bound),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let text = match cli.format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&out.document()).expect("serializable")),
                Format::Table => out.render_table(),
            };
            // A closed pipe downstream is not an error of ours.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
