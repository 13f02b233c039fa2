use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use twist_green_cli::report::{finish, unix_seconds, OutputDir};
use twist_green_cli::{run, CliError, Command, ExperimentConfig};

/// Minimizing orbits, Green bundles, Lyapunov spectra and weak KAM
/// solutions of twist maps.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for all randomness; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    let started = unix_seconds();
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => return Err(CliError::Config("--config is required".into())),
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut dir = OutputDir::create(&out)?;
    let result = run(cli.command, &cfg, seed, &mut dir)?;
    finish(
        &dir,
        cli.command.name(),
        &cfg,
        seed,
        &result,
        started,
        rayon::current_num_threads(),
    )?;
    println!(
        "{}: {} ({})",
        cli.command.name(),
        result.verdict.as_str(),
        out.join("report.json").display()
    );
    Ok(result.verdict.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
