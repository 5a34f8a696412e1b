//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{
    dynamic_model, embed, ingest, synth, validate, window_model, Context, DynamicArgs, EmbedArgs, IngestArgs,
    SynthArgs, ValidateArgs, WindowArgs,
};
use crate::config::PipelineConfig;
use crate::error::{AppError, AppResult};
use crate::report::{report, ReportArgs};

#[derive(Debug, Parser)]
#[command(name = "dyntopic", version, about = "Two-layer NMF dynamic topic modeling")]
pub struct Cli {
    /// Pipeline configuration (TOML, or JSON by `.json` extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for embedding training and corpus synthesis.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Root directory for every artifact.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for per-window fitting.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted synthetic corpus with its ground truth.
    Synth(SynthArgs),
    /// Read speeches, preprocess them and partition them into windows.
    Ingest(IngestArgs),
    /// Train or import the word embeddings used for coherence.
    Embed(EmbedArgs),
    /// Fit a coherence-selected topic model in every window.
    WindowModel(WindowArgs),
    /// Fit the dynamic layer over all window topics.
    DynamicModel(DynamicArgs),
    /// Stability, clustering and taxonomy matching of dynamic topics.
    Validate(ValidateArgs),
    /// Render the HTML report.
    Report(ReportArgs),
}

impl Cli {
    /// The config file (or defaults) with command-line overrides applied.
    pub fn context(&self) -> AppResult<Context> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            config.out_dir = dir.clone();
        }
        if let Some(n) = self.threads {
            config.threads = Some(n);
        }
        config.validate().map_err(AppError::Usage)?;
        Ok(Context::new(config))
    }
}

pub fn run(cli: &Cli) -> AppResult<()> {
    let ctx = cli.context()?;
    if let Some(n) = ctx.config.threads {
        // only fails when a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Embed(a) => embed(&ctx, a),
        Command::WindowModel(a) => window_model(&ctx, a),
        Command::DynamicModel(a) => dynamic_model(&ctx, a),
        Command::Validate(a) => validate(&ctx, a),
        Command::Report(a) => report(&ctx.out_dir, a),
    }
}
