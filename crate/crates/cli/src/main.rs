use clap::{Parser, Subcommand};
use fixfit_cli::commands;
use fixfit_cli::config::{load_config, LoadedConfig};
use fixfit_cli::error::{CliError, CliResult};
use std::path::PathBuf;

/// Model-reduction pipeline: generate data, find the minimal latent
/// dimension, analyze sensitivities, and fit latent parameters.
#[derive(Parser)]
#[command(name = "fixfit", version, about)]
struct Cli {
    /// Pipeline configuration file (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Artifact directory; overrides FIXFIT_WORKDIR and the config.
    #[arg(long, global = true, value_name = "DIR")]
    workdir: Option<PathBuf>,

    /// Override one config value, e.g. --set train.max_epochs=200.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Cap the worker thread count.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample parameters, simulate, filter, and persist the dataset.
    Generate,
    /// Train replicated bottleneck models and select the minimal width.
    Sweep,
    /// Compute uncorrelated input-to-latent sensitivities.
    Sensitivity {
        /// Weight file; defaults to the sweep's best replicate.
        #[arg(long, value_name = "FILE")]
        weights: Option<PathBuf>,
    },
    /// Fit latent parameters to a raw target vector file.
    Fit {
        /// Target file: JSON array or comma/whitespace separated decimals.
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
        /// Weight file; defaults to the sweep's best replicate.
        #[arg(long, value_name = "FILE")]
        weights: Option<PathBuf>,
    },
    /// Render the consolidated report bundle from existing artifacts.
    Report,
}

/// Workdir precedence: --workdir flag, FIXFIT_WORKDIR, config workdir,
/// then the current directory.
fn resolve_workdir(flag: Option<PathBuf>, config: Option<&LoadedConfig>) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Some(dir) = std::env::var_os("FIXFIT_WORKDIR") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    if let Some(dir) = config.and_then(|l| l.config.workdir.clone()) {
        return dir;
    }
    PathBuf::from(".")
}

fn require_config(loaded: &Option<LoadedConfig>) -> CliResult<&LoadedConfig> {
    loaded
        .as_ref()
        .ok_or_else(|| CliError::config("this subcommand needs --config <FILE>"))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        // A second build_global in one process is harmless; keep the first.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let loaded = match &cli.config {
        Some(path) => Some(load_config(path, &cli.set)?),
        None if !cli.set.is_empty() => {
            return Err(CliError::config("--set needs --config <FILE>"));
        }
        None => None,
    };
    let workdir = resolve_workdir(cli.workdir.clone(), loaded.as_ref());
    match &cli.command {
        Command::Generate => commands::cmd_generate(require_config(&loaded)?, &workdir),
        Command::Sweep => commands::cmd_sweep(require_config(&loaded)?, &workdir),
        Command::Sensitivity { weights } => commands::cmd_sensitivity(
            require_config(&loaded)?,
            &workdir,
            weights.as_deref(),
        ),
        Command::Fit { target, weights } => commands::cmd_fit(
            require_config(&loaded)?,
            &workdir,
            target,
            weights.as_deref(),
        ),
        Command::Report => commands::cmd_report(&workdir).map(|_| ()),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
