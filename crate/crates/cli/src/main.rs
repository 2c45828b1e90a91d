//! `degenlab` experiment runner.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 invalid input,
//! 3 solver nonconvergence, 4 certification failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use degenlab::flat::Convention;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Certification(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "degenlab",
    version,
    about = "Length spectra, flat surfaces and harmonic maps along degenerating families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `convention` from the config.
    #[arg(long, global = true, value_parser = parse_convention)]
    convention: Option<Convention>,
}

fn parse_convention(s: &str) -> Result<Convention, String> {
    s.parse()
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Trace-coordinate and translation-length spectra of a representation.
    Spectrum,
    /// Flat length spectrum, zeros and norms of a square-tiled surface.
    Flat,
    /// Harmonic maps and spectra along a degenerating family.
    Maintheorem,
    /// Fold validity tables and a fold on a random tree.
    FoldLab,
    /// Two solves from independent random starts, compared by Hopf sample.
    HopfUniqueness,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => config::Config::load(p)?,
        None => match cli.command {
            Command::FoldLab => config::Config { genus: 2, ..Default::default() },
            _ => return Err(CliError::Validation("--config is required for this subcommand".into())),
        },
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(c) = cli.convention {
        cfg.convention = c;
    }
    let mut out = output::Output::new(&cli.out, cfg.hash(), cfg.seed)?;
    out.json("config.json", &cfg)?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::Flat => commands::flat(&cfg, &mut out),
        Command::Maintheorem => commands::maintheorem(&cfg, &cli.out, &mut out),
        Command::FoldLab => commands::fold_lab(&cfg, &mut out),
        Command::HopfUniqueness => commands::hopf_uniqueness(&cfg, &cli.out, &mut out),
    }?;
    Ok(out.written().to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("degenlab: {e}");
            ExitCode::from(e.code())
        }
    }
}
