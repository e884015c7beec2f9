//! `hyperfield`: synthesize, mask, fit, reconstruct, sample adaptively,
//! evaluate and run the trend suite. Every command writes a manifest next to
//! its outputs.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::EvalInputs;
use crate::config::Sources;
use crate::error::{CliError, CliResult};
use crate::manifest::Run;

#[derive(Debug, Parser)]
#[command(name = "hyperfield", version, about = "Neural-field reconstruction of sparse 2DIR hypercubes")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Manifest of an earlier run to replay; the config file and --set apply on top.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Override one configuration key, e.g. --set net.iterations=2000.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads; 1 is the bit-stable reference mode.
    #[arg(long, global = true, env = "HYPERFIELD_THREADS")]
    threads: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic ground truth in time and frequency domains.
    Synth,
    /// Build a sampling plan and measure it (synthetic oracle or a stored cube).
    Mask {
        /// Noiseless time-domain cube to sample instead of the synthetic oracle.
        #[arg(long)]
        cube: Option<PathBuf>,
    },
    /// Fit the network to measurements and write the dense reconstruction.
    Fit {
        #[arg(long)]
        measured: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Rebuild the dense reconstruction from a checkpoint.
    Reconstruct {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        measured: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Loss-driven acquisition along t2 against the synthetic oracle or a replayed cube.
    Adaptive {
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Compare a reconstruction against a reference cube.
    Eval {
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Time-domain prediction, for the error off the sampled lattice.
        #[arg(long)]
        pred_time: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run the synthetic trend experiments listed in eval.trends.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Mask { .. } => "mask",
            Command::Fit { .. } => "fit",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Adaptive { .. } => "adaptive",
            Command::Eval { .. } => "eval",
            Command::Report => "report",
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => rayon::current_num_threads(),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let loaded = config::load(&Sources {
        manifest: cli.manifest,
        config: cli.config,
        overrides: cli.set,
    })?;
    if let Some(recorded) = loaded.recorded.get("run.command") {
        if recorded != cli.command.name() {
            return Err(CliError::Usage(format!(
                "manifest belongs to '{recorded}', not '{}'",
                cli.command.name()
            )));
        }
    }
    let cfg = loaded.config;
    cfg.validate()?;
    let mut out = Run::new(cli.command.name(), &cfg, threads, loaded.recorded)?;
    match cli.command {
        Command::Synth => commands::synth(&cfg, &mut out)?,
        Command::Mask { cube } => commands::mask(&cfg, &mut out, cube)?,
        Command::Fit { measured, plan } => commands::fit_cmd(&cfg, &mut out, measured, plan)?,
        Command::Reconstruct {
            checkpoint,
            measured,
            plan,
        } => commands::reconstruct_cmd(&cfg, &mut out, checkpoint, measured, plan)?,
        Command::Adaptive { replay } => commands::adaptive(&cfg, &mut out, replay)?,
        Command::Eval {
            pred,
            reference,
            pred_time,
            plan,
        } => commands::eval(
            &mut out,
            EvalInputs {
                pred,
                reference,
                pred_time,
                plan,
            },
        )?,
        Command::Report => commands::report(&cfg, &mut out)?,
    }
    let path = out.finish()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hyperfield: {e}");
            e.exit_code()
        }
    }
}
