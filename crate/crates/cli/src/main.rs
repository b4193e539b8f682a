//! `partgen`: generate synthetic detection datasets, inspect them, preview
//! single scenes and score detector output.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

mod commands;
mod overlay;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "partgen", version, about = "Domain-randomized synthetic data for manufacturing object detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset from a JSON config.
    Generate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        threads: Threads,
    },
    /// Score predictions against YOLO ground-truth labels.
    Evaluate {
        /// Label directory (train/val subdirectories are included).
        ground_truth: PathBuf,
        /// Directory of per-image prediction files, or one file with an image id per line.
        predictions: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        iou: f64,
        #[arg(long, default_value_t = 0.5)]
        conf: f64,
        /// dataset.yaml, or a text file with one class name per line.
        #[arg(long)]
        names: Option<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long, default_value = "evaluation.json")]
        report: PathBuf,
    },
    /// Summarize a generated dataset.
    Stats {
        manifest: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Render one scene of a config with its mask and labelled overlay.
    Preview {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        image_index: usize,
        #[arg(long, value_enum, default_value_t = PreviewBackend::Both)]
        backend: PreviewBackend,
        #[arg(long, default_value = "preview")]
        output: PathBuf,
        #[command(flatten)]
        threads: Threads,
    },
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct Threads {
    /// Worker threads; all hardware threads when unset.
    #[arg(long, env = "PARTGEN_THREADS")]
    threads: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PreviewBackend {
    PathTraced,
    Rasterized,
    Both,
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            config,
            seed,
            count,
            output,
            threads,
        } => commands::generate(&config, seed, count, output, threads.threads),
        Command::Evaluate {
            ground_truth,
            predictions,
            iou,
            conf,
            names,
            report,
        } => commands::evaluate(&ground_truth, &predictions, iou, conf, names.as_deref(), &report),
        Command::Stats { manifest, json } => commands::stats(&manifest, json),
        Command::Preview {
            config,
            seed,
            image_index,
            backend,
            output,
            threads,
        } => {
            let backends = match backend {
                PreviewBackend::PathTraced => vec![partgen::render::Backend::PathTraced],
                PreviewBackend::Rasterized => vec![partgen::render::Backend::Rasterized],
                PreviewBackend::Both => vec![partgen::render::Backend::PathTraced, partgen::render::Backend::Rasterized],
            };
            commands::preview(&config, seed, image_index, &backends, &output, threads.threads)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
