use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bloom::{Command, Config};
use clap::Parser;

/// Cyanobacteria bloom model: ODE, stability, 1D/2D simulation and Sobol' sensitivity.
///
/// Any config value can be overridden with BLOOM_<SECTION>__<KEY>, for example
/// BLOOM_PARAMS__P_h=0 or BLOOM_SIM1D__NX=41.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON config; defaults are used for anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the sampling design; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for `sobol`.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let env = std::env::vars();
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path, env).with_context(|| format!("loading {}", path.display()))?,
        None => Config::from_env(env)?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if cli.threads == Some(0) {
        anyhow::bail!("--threads must be at least 1");
    }
    let report = bloom::run(cli.command, &cfg, &cli.out, cli.threads)?;
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let mut stdout = std::io::stdout().lock();
    for line in &report.summary {
        let _ = writeln!(stdout, "{line}");
    }
    let _ = writeln!(stdout, "outputs: {}", cli.out.display());
    Ok(())
}
