//! `fano`: scans, spectra, closed-form profiles and fits from a TOML config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use output::{sha256_hex, RunMeta};

#[derive(Debug, Parser)]
#[command(name = "fano", version, about = "Dissipative Fano model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Seed for synthetic noise
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check the configuration and print reduced parameters
    Validate,
    /// Excited population over a laser scan, against the closed form
    AbsorptionScan,
    /// Emission spectrum at one laser frequency, with component fits
    EmissionSpectrum,
    /// Closed-form population, extinction and per-process profiles
    AnalyticProfile,
    /// Fit Fano-type models to a CSV column pair or to synthetic data
    Fit,
    /// Standard and shifted Fano fits of the full profile over η
    CompareModels,
    /// Invert measured prefactors into model parameters
    ExtractParams,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::AbsorptionScan => "absorption-scan",
            Command::EmissionSpectrum => "emission-spectrum",
            Command::AnalyticProfile => "analytic-profile",
            Command::Fit => "fit",
            Command::CompareModels => "compare-models",
            Command::ExtractParams => "extract-params",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(&path).map_err(|source| output::IoError::Fs { path: path.clone(), source })?;
    let cfg = config::parse_config(&text)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out_dir = cli.out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let meta = RunMeta { command: cli.command.name().to_string(), config_sha256: sha256_hex(&text), seed: cli.seed };
    commands::run(&meta.command, &cfg, &meta, &out_dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
