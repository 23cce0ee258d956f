//! Command-line pipeline: scene graphs, question generation, statistics,
//! evaluation and a pooling demo.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sgqa_core::{CropVariant, PoolStrategy};

pub use commands::{
    cmd_baseline, cmd_build_graphs, cmd_evaluate, cmd_generate, cmd_pool_demo, cmd_stats, cmd_synth_scenes,
    config_hash, load_scene_dir, BuildSummary, GenerateSummary, Inputs, SceneDir,
};
pub use config::{Overrides, Paths, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "sgqa", version, about = "Scene-graph question generation and evaluation")]
pub struct Cli {
    /// TOML run configuration; flags and SGQA_* variables override it.
    #[arg(long, global = true, env = "SGQA_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long, env = "SGQA_SEED")]
    pub seed: Option<u64>,
    /// Directory of scene annotation files (*.json).
    #[arg(long, env = "SGQA_SCENES")]
    pub scenes: Option<PathBuf>,
    /// Template registry file; the shipped registry by default.
    #[arg(long, env = "SGQA_REGISTRY")]
    pub registry: Option<PathBuf>,
    /// Blacklist file of `status,category` lines.
    #[arg(long, env = "SGQA_BLACKLIST")]
    pub blacklist: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "SGQA_OUT")]
    pub out: Option<PathBuf>,
    /// Fraction of scenes in the train split.
    #[arg(long, env = "SGQA_SPLIT")]
    pub split: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "SGQA_WORKERS")]
    pub workers: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            split: self.split,
            workers: self.workers,
            scenes: self.scenes.clone(),
            registry: self.registry.clone(),
            blacklist: self.blacklist.clone(),
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate scene files and write one graph file per scene.
    BuildGraphs(RunArgs),
    /// Generate, balance and split a question-answer dataset.
    Generate(RunArgs),
    /// Length, answer, type and prefix statistics of dataset files.
    Stats {
        /// Dataset files (JSON lines).
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Prefix depth in words.
        #[arg(long, default_value_t = 4, env = "SGQA_K")]
        k: usize,
        /// Also write the report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        preds: PathBuf,
        /// Also write the metrics table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Question-only majority predictions, fitted on a training file.
    Baseline {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool a BEV grid over projected boxes.
    PoolDemo {
        #[arg(long)]
        grid: PathBuf,
        /// JSON array of `{"id", "box"}` records, or a scene file.
        #[arg(long)]
        boxes: PathBuf,
        #[arg(long, default_value = "mean", env = "SGQA_STRATEGY")]
        strategy: PoolStrategy,
        #[arg(long, default_value = "rotated", env = "SGQA_CROP")]
        crop: CropVariant,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write seeded synthetic scenes.
    SynthScenes {
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0, env = "SGQA_SEED")]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_config(path: Option<&PathBuf>, args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply(&args.overrides());
    config.check_paths()?;
    Ok(config)
}

fn required(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    path.clone().ok_or_else(|| CliError::Usage(format!("missing {flag} (flag, environment or config)")))
}

/// Runs one parsed invocation, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config_path = cli.config.as_ref();
    let text = match cli.command {
        Command::BuildGraphs(args) => {
            let config = run_config(config_path, &args)?;
            let scenes = required(&config.paths.scenes, "--scenes")?;
            let out = required(&config.paths.out, "--out")?;
            let summary = cmd_build_graphs(&scenes, &out, &config)?;
            let mut text = format!("wrote {} graph files to {}\n", summary.written.len(), out.display());
            for e in &summary.errors {
                text.push_str(&format!("error: {e}\n"));
            }
            if !summary.errors.is_empty() {
                write_out(stdout, &text)?;
                return Err(CliError::Data(anyhow::anyhow!("{} scene file(s) failed validation", summary.errors.len())));
            }
            text
        }
        Command::Generate(args) => {
            let config = run_config(config_path, &args)?;
            let inputs = Inputs {
                scenes: required(&config.paths.scenes, "--scenes")?,
                out: required(&config.paths.out, "--out")?,
            };
            let summary = cmd_generate(&inputs, &config)?;
            summary.to_string()
        }
        Command::Stats { datasets, k, out } => cmd_stats(&datasets, k, out.as_deref())?,
        Command::Evaluate { gt, preds, out } => cmd_evaluate(&gt, &preds, out.as_deref())?,
        Command::Baseline { train, questions, out } => cmd_baseline(&train, &questions, &out)?,
        Command::PoolDemo { grid, boxes, strategy, crop, out } => {
            let config = run_config(config_path, &RunArgs::default())?;
            cmd_pool_demo(&grid, &boxes, strategy, crop, &out, &config)?
        }
        Command::SynthScenes { count, seed, out } => cmd_synth_scenes(count, seed, &out)?,
    };
    write_out(stdout, &text)
}

fn write_out(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::Data(e.into()))
}
