//! Activity-cliff benchmark: potency ingestion, cliff mining, splits,
//! regression metrics, and embedding analyses.

mod cliffs;
mod embed;
mod ingest;
mod metrics;
mod split;

pub use cliffs::{
    featurize, find_cliff_pairs, similarity_triad, write_cliff_pairs, CliffConfig, CliffPair, CliffReport, Criteria,
    MolFeatures, DELTA_TOLERANCE,
};
pub use embed::{cliff_distance, collapse_curve, pca_2d, CurvePoint, Pca, DEFAULT_BIN_EDGES};
pub use ingest::{ingest, records_from_pk, ColumnMap, IngestReport, PotencyRecord, Reject, Unit};
pub use metrics::{kld, mae, rmse, rmse_cliff, silverman_bandwidth, KlDirection, Metrics, KDE_GRID};
pub use split::{
    leader_clusters, random_split, scaffold_split, stratified_cluster_split, DatasetSplit, Partition, SplitKind,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("row {0}: potency must be positive")]
    NonPositivePotency(usize),
    #[error("row {0}: unparsable SMILES")]
    UnparsableSmiles(usize),
    #[error("inputs have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("no cliff compounds in the evaluation set")]
    NoCliffCompounds,
    #[error("need at least {0} samples")]
    TooFewSamples(usize),
    #[error("no embedding for molecule {0}")]
    MissingEmbedding(usize),
    #[error("embeddings have inconsistent dimensions")]
    RaggedEmbeddings,
    #[error(transparent)]
    Fingerprint(#[from] crate::chem::FingerprintError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
