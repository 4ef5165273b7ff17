//! Command-line pipeline over `cliffmask-core` and `cliffmask-model`.
//!
//! Every subcommand reads a [`RunConfig`], works inside one output
//! directory, and leaves the effective configuration and a [`RunRecord`]
//! under `runs/` next to its artifacts.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod record;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cliffmask_core::bench::BenchError;
use cliffmask_core::chem::{SmilesError, VocabError};
use cliffmask_core::depict::DepictError;
use cliffmask_core::fragment::{MotifVocabError, RuleError};
use cliffmask_model::ModelError;
use serde::Serialize;

pub use commands::{execute, Summary};
pub use config::RunConfig;
pub use record::RunRecord;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("missing artifact {} (run `{producer}` first)", path.display())]
    MissingArtifact { path: PathBuf, producer: &'static str },
    #[error("malformed artifact {}: {message}", path.display())]
    BadArtifact { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Depict(#[from] DepictError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Smiles(#[from] SmilesError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    MotifVocab(#[from] MotifVocabError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Body of the error report printed on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid(_) => "config_invalid",
            CliError::MissingArtifact { .. } => "missing_artifact",
            CliError::BadArtifact { .. } => "bad_artifact",
            CliError::Model(_) => "model",
            CliError::Depict(_) => "depict",
            CliError::Bench(_) => "bench",
            CliError::Smiles(_) => "smiles",
            CliError::Vocab(_) | CliError::MotifVocab(_) => "vocab",
            CliError::Rules(_) => "rules",
            CliError::Csv(_) | CliError::Json(_) | CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            CliError::MissingArtifact { .. } => 3,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cliffmask", version, about = "Masked molecular-image pre-training and activity-cliff benchmarks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seeds the run and every seeded stage (encoder, pre-training, fine-tuning).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on the count.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory (`paths.out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Canvas edge in pixels for both depiction and encoder.
    #[arg(long, global = true)]
    pub image_size: Option<u32>,
    /// Override any configuration key, e.g. `--set optimizer.lr=0.01`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    /// Masking ratio (`depict.gamma`).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Run once per masking ratio, in `<stage>_gamma_<value>` directories.
    #[arg(long, value_delimiter = ',')]
    pub gamma_list: Vec<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build atom and motif vocabularies from the corpus.
    Vocab,
    /// Render masked pretext samples and their manifest.
    Masks(SweepArgs),
    /// Pre-train the encoder on the masked samples.
    Pretrain(SweepArgs),
    /// Fine-tune a regression head on potency data.
    Finetune {
        /// Starting checkpoint; the pre-training checkpoint by default.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Score the fine-tuned model on the test partition.
    Eval,
    /// Mine activity-cliff pairs from potency data.
    Cliffs,
    /// Split potency data into train, valid and test partitions.
    Split,
    /// Attribute fine-tuned predictions to fragments by whitening them.
    Attribute {
        /// Molecules to explain; the test partition by default.
        #[arg(long)]
        smiles: Vec<String>,
    },
    /// Export classification-token features of the potency molecules.
    Embed {
        /// The pre-training checkpoint by default.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Project embeddings to 2D and summarize distance against similarity.
    Collapse,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Vocab => "vocab",
            Command::Masks(_) => "masks",
            Command::Pretrain(_) => "pretrain",
            Command::Finetune { .. } => "finetune",
            Command::Eval => "eval",
            Command::Cliffs => "cliffs",
            Command::Split => "split",
            Command::Attribute { .. } => "attribute",
            Command::Embed { .. } => "embed",
            Command::Collapse => "collapse",
        }
    }

    fn sweep(&self) -> Option<&SweepArgs> {
        match self {
            Command::Masks(s) | Command::Pretrain(s) => Some(s),
            _ => None,
        }
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

impl Cli {
    /// Flag overrides as dotted assignments, applied after `--set`.
    pub fn overrides(&self) -> Vec<String> {
        let g = &self.global;
        let mut out = g.set.clone();
        if let Some(s) = g.seed {
            for key in ["seed", "encoder.seed", "pretrain.seed", "finetune.seed"] {
                out.push(format!("{key}={s}"));
            }
        }
        if let Some(w) = g.workers {
            out.push(format!("workers={w}"));
        }
        if let Some(o) = &g.out {
            out.push(format!("paths.out={}", toml_string(&o.to_string_lossy())));
        }
        if let Some(size) = g.image_size {
            out.push(format!("depict.render.image_size={size}"));
            out.push(format!("encoder.image_size={size}"));
        }
        if let Some(gamma) = self.command.sweep().and_then(|s| s.gamma) {
            out.push(format!("depict.gamma={gamma:?}"));
        }
        out
    }

    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(self.global.config.as_deref(), &self.overrides())
    }

    /// Loads the configuration and runs the subcommand on a pool of
    /// `workers` threads.
    pub fn run(&self) -> Result<Summary, CliError> {
        let cfg = self.load_config()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| CliError::ConfigInvalid(format!("workers: {e}")))?;
        pool.install(|| execute(&cfg, &self.command))
    }
}
