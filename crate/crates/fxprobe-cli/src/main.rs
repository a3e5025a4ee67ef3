//! fxprobe: render an effect-augmented corpus, extract embeddings, and
//! quantify how much effect information survives in them.

mod config;
mod encode;
mod features;
mod layout;
mod render;
mod reports;
mod sweep;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::RunConfig;
use fxprobe::represent::FeatureMode;
use layout::Layout;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fxprobe", version, about = "audio-effect representation probing pipeline")]
struct Cli {
    /// Run configuration JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-clip stages (default: CPU count).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render normalized sources and all ten effect variants per source.
    Render,
    /// Encode every rendered clip into the embedding exchange format.
    Encode,
    /// Fit a 3-component PCA over the corpus features and emit coordinates.
    Project(ModeOpt),
    /// Train and evaluate the ten-way effect classifier.
    Probe(ModeOpt),
    /// Per-dimension masking sweep over the nine effect-vs-clean tasks.
    Mask(ModeOpt),
    /// Render parameter sweeps and measure trajectory straightness.
    Sweep,
}

#[derive(Args)]
struct ModeOpt {
    /// Collapse embedding sequences by time-averaging or flattening.
    #[arg(long, value_enum, default_value_t = ModeArg::Timeavg)]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Timeavg,
    Flatten,
}

impl From<ModeArg> for FeatureMode {
    fn from(mode: ModeArg) -> FeatureMode {
        match mode {
            ModeArg::Timeavg => FeatureMode::TimeAvg,
            ModeArg::Flatten => FeatureMode::Flatten,
        }
    }
}

/// Exit codes: 0 success, 1 validation (config or arguments), 2 runtime.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn validation(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn runtime(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(failure) => {
            log::error!("{:#}", failure.error);
            std::process::exit(failure.code);
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(validation(anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| runtime(anyhow!("worker pool: {e}")))?;
    }
    let config_path = cli
        .config
        .ok_or_else(|| validation(anyhow!("--config <path> is required")))?;
    let mut config = RunConfig::load(&config_path).map_err(validation)?;
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    let layout = Layout::new(&config.output_dir);
    std::fs::create_dir_all(&layout.root)
        .map_err(|e| runtime(anyhow!("creating {}: {e}", layout.root.display())))?;

    match cli.command {
        Cmd::Render => render::cmd_render(&config, &layout),
        Cmd::Encode => encode::cmd_encode(&config, &layout),
        Cmd::Project(m) => reports::cmd_project(&config, &layout, m.mode.into()),
        Cmd::Probe(m) => reports::cmd_probe(&config, &layout, m.mode.into()),
        Cmd::Mask(m) => reports::cmd_mask(&config, &layout, m.mode.into()),
        Cmd::Sweep => sweep::cmd_sweep(&config, &layout),
    }
    .map_err(runtime)
}
