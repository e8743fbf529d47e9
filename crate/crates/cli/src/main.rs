use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod draw;

/// Default output root comes from this variable when --out is omitted.
pub const OUT_ENV: &str = "GELSIM_OUT";

#[derive(Parser)]
#[command(name = "gelsim", version, about = "Gel-sensor simulation and resting-state prediction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate episodes and write a dataset.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the scenario seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model on a generated dataset.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset root produced by `generate`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the training seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from an existing checkpoint directory.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Train a single-modality baseline: visual | tactile | pose.
        #[arg(long)]
        unimodal: Option<String>,
    },
    /// Score checkpoints on the validation split and emit the results table.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Final-step checkpoint directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Fixed-step checkpoint used for the recursive multi-step columns.
        #[arg(long)]
        rollout_checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of side-by-side prediction strips to render.
        #[arg(long, default_value_t = 4)]
        strips: usize,
    },
    /// Summarize a dataset or one episode.
    Inspect {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        id: Option<u64>,
    },
    /// Render a demonstration tactile/visual frame pair.
    RenderDemo {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Finite-difference check of the analytic gradients on a toy model.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Resolve the output directory: flag, then $GELSIM_OUT, then the cwd.
pub fn resolve_out(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Generate { config, seed, workers, out } => {
            commands::generate::run(config.as_deref(), seed, workers, resolve_out(out))
        }
        Cmd::Train { config, data, out, seed, resume, unimodal } => commands::train_cmd::run(
            config.as_deref(),
            &data,
            resolve_out(out),
            seed,
            resume.as_deref(),
            unimodal.as_deref(),
        ),
        Cmd::Eval { config, checkpoint, rollout_checkpoint, data, out, strips } => {
            commands::eval_cmd::run(
                config.as_deref(),
                checkpoint.as_deref(),
                rollout_checkpoint.as_deref(),
                &data,
                resolve_out(out),
                strips,
            )
        }
        Cmd::Inspect { data, id } => commands::misc::inspect(&data, id),
        Cmd::RenderDemo { out, config } => {
            commands::misc::render_demo(config.as_deref(), resolve_out(out))
        }
        Cmd::Gradcheck { seed } => commands::misc::gradcheck(seed),
    }
}

fn main() -> ExitCode {
    // exit codes: 0 success, 1 usage error, 2 runtime failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
