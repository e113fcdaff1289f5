//! `normalforge` command line: synthesis, reconstruction, training,
//! prediction and both evaluations, each writing `run.json` next to its
//! outputs. Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod config;
mod svg;

pub use config::{
    AmbiguityRun, PredictRun, ReconstructRun, RecognitionRun, SynthRun, TrainRun, RUN_FILE,
    SEED_ENV,
};
pub use commands::{split_folds, FoldEntry, FoldPlan, FOLDS_FILE};
pub use svg::{line_chart_svg, scatter_svg, Series};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}
runtime_from!(
    crate::imaging::ImagingError,
    crate::photometric::PhotometricError,
    crate::neural::NeuralError,
    crate::evaluation::EvalError
);

#[derive(Debug, Parser)]
#[command(name = "normalforge", version, about = "Photometric stereo and cGAN normal-map toolkit")]
pub struct Cli {
    /// JSON file with option values; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads. Computation is single-threaded, so any value gives
    /// bit-identical results; the value is recorded in run.json.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: u32,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a procedural multi-light dataset with ground truth.
    Synth(SynthFlags),
    /// Recover normal and albedo maps from every object's image stack.
    Reconstruct(ReconstructFlags),
    /// Train the conditional GAN on a manifest.
    Train(TrainFlags),
    /// Predict a normal image from one photograph.
    Predict(PredictFlags),
    /// SSIM and PCA ambiguity comparison of color and normal images.
    EvalAmbiguity(AmbiguityFlags),
    /// Few-shot recognition under degradations.
    EvalRecognition(RecognitionFlags),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthFlags {
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub lights: Option<usize>,
    #[arg(long)]
    pub elevation: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructFlags {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory; defaults to the manifest's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainFlags {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lambda_cos: Option<f64>,
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub base_channels: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train one model per fold on the other folds' objects.
    #[arg(long)]
    pub split_folds: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictFlags {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Output PNG path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AmbiguityFlags {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `folds.json` written by `train --split-folds`.
    #[arg(long)]
    pub folds: Option<PathBuf>,
    /// Use the color image as its own "normal image" (null control).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub identity: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also draw SVG charts from the CSV reports.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
pub struct RecognitionFlags {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated degradation kinds.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Comma-separated amounts in [0, 1].
    #[arg(long, value_delimiter = ',')]
    pub amounts: Option<Vec<f64>>,
    /// `encoder` or `grad_hist`.
    #[arg(long)]
    pub extractor: Option<String>,
    /// SVM regularization constant.
    #[arg(long)]
    pub c: Option<f64>,
    /// Also draw SVG charts from the CSV reports.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
