//! Molecular image masking and activity-cliff benchmarking toolkit.
//!
//! - [`chem`]: molecular graphs, SMILES parsing and canonicalization,
//!   fingerprints, scaffolds, string similarity.
//! - [`fragment`]: retrosynthetic bond cleavage and motif vocabularies.
//! - [`depict`]: 2D layout, rasterization, green highlighting, HSV mask
//!   extraction and masked-sample generation.
//! - [`bench`]: potency ingestion, cliff mining, splits, metrics and
//!   embedding-space analyses.
//! - [`desk`]: seeded synthetic corpora and potency series for offline runs.

pub mod bench;
pub mod chem;
pub mod depict;
pub mod desk;
pub mod fragment;
