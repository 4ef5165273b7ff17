//! Patch-transformer encoder for molecular depictions: masked-pixel pretext
//! heads and losses, SGD training, regression fine-tuning, whitening-based
//! substructure attribution and feature export.
//!
//! Parameters live in one flat vector (see [`params::ParamLayout`]) and the
//! reverse pass is written out by hand, so the same code runs in `f32` for
//! training and in `f64` for gradient checks.

pub mod attribution;
pub mod checkpoint;
pub mod data;
pub mod embed;
pub mod encoder;
pub mod finetune;
pub mod loss;
pub mod objective;
pub mod optim;
pub mod params;
pub mod pretrain;
pub mod scalar;

pub use attribution::{attribute_image, sme_attribution, Attribution};
pub use checkpoint::{checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint, TrainState};
pub use data::{image_input, load_pretext, patchify, PretextExample};
pub use embed::{embed, read_embeddings, write_embeddings};
pub use encoder::{Encoded, EncoderConfig, Head, HeadConfig, Model, TargetScale};
pub use finetune::{finetune, finetune_grid, regression_loss, write_finetune_log, FinetuneConfig, FinetuneReport, RegressionExample};
pub use objective::{loss_ampp, loss_bmpp, loss_mmpp, total_loss, LossRecord, PatchTarget, TaskStats};
pub use optim::{OptimizerConfig, Schedule, Sgd};
pub use pretrain::{pretrain, PretrainConfig, PretrainReport, Trainer};
pub use scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("sample has no masked patches")]
    EmptyOmega,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: u32, classes: usize },
    #[error("model has no {0:?} head")]
    MissingHead(Head),
    #[error("non-finite loss at step {step} (molecules {molecules:?})")]
    NonFiniteLoss { step: usize, molecules: Vec<usize> },
    #[error("substructure selects no atoms or bonds")]
    EmptySubstructure,
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Depict(#[from] cliffmask_core::depict::DepictError),
    #[error(transparent)]
    Bench(#[from] cliffmask_core::bench::BenchError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
