//! Artifact names inside the output directory, and their readers.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use cliffmask_core::bench::{ingest, records_from_pk, DatasetSplit, PotencyRecord, SplitKind};
use cliffmask_core::chem::{parse_smiles, AtomVocab, Element};
use cliffmask_core::depict::{layout_2d, render, DepictError};
use cliffmask_core::desk::{drug_like_corpus, potency_series};
use cliffmask_core::fragment::CleavageRuleTable;
use cliffmask_model::patchify;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

pub const CORPUS: &str = "corpus.smi";
pub const ATOM_VOCAB: &str = "atom_vocab.csv";
pub const MOTIF_VOCAB: &str = "motif_vocab.csv";
pub const MASKS_DIR: &str = "masks";
pub const PRETRAIN_DIR: &str = "pretrain";
pub const FINETUNE_DIR: &str = "finetune";
pub const EVAL_DIR: &str = "eval";
pub const COLLAPSE_DIR: &str = "collapse";
pub const RUNS_DIR: &str = "runs";
pub const RECORDS: &str = "records.csv";
pub const CLIFF_PAIRS: &str = "cliff_pairs.csv";
pub const SPLIT: &str = "split.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const METRICS: &str = "metrics.json";
pub const SUMMARY: &str = "summary.json";
pub const ATTRIBUTIONS: &str = "attributions.csv";
pub const EMBEDDINGS: &str = "embeddings.csv";
pub const CHECKPOINT: &str = cliffmask_model::pretrain::BEST_CHECKPOINT;

/// Directory of one point of a masking-ratio sweep.
pub fn sweep_dir(stage: &str, gamma: Option<f64>) -> String {
    match gamma {
        Some(g) => format!("{stage}_gamma_{g}"),
        None => stage.to_string(),
    }
}

/// `path`, or a missing-artifact error naming the producing subcommand.
pub fn require(path: PathBuf, producer: &'static str) -> Result<PathBuf, CliError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact { path, producer })
    }
}

fn bad(path: &Path, message: impl Into<String>) -> CliError {
    CliError::BadArtifact {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// First token of each non-empty, non-comment line.
pub fn read_smiles_file(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_whitespace().next().map(str::to_string))
        .collect())
}

/// The configured corpus file, or the seeded desk corpus.
pub fn source_corpus(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    match &cfg.paths.corpus {
        Some(p) => read_smiles_file(p),
        None => {
            info!("generating a desk corpus of {} molecules", cfg.desk.molecules);
            Ok(drug_like_corpus(cfg.desk.molecules, cfg.seed))
        }
    }
}

pub fn rules(cfg: &RunConfig) -> Result<CleavageRuleTable, CliError> {
    Ok(match &cfg.paths.rules {
        Some(p) => CleavageRuleTable::load(p)?,
        None => CleavageRuleTable::brics_default(),
    })
}

#[derive(Serialize, Deserialize)]
struct AtomRow {
    label_id: u32,
    symbol: String,
    count: u64,
}

pub fn write_atom_vocab(path: &Path, vocab: &AtomVocab) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, (e, count)) in vocab.entries().iter().enumerate() {
        w.serialize(AtomRow {
            label_id: i as u32,
            symbol: e.symbol().to_string(),
            count: *count,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_atom_vocab(path: &Path) -> Result<AtomVocab, CliError> {
    let mut entries = Vec::new();
    for (i, row) in csv::Reader::from_path(path)?.deserialize::<AtomRow>().enumerate() {
        let row = row?;
        if row.label_id as usize != i {
            return Err(bad(path, format!("row {i} has label id {}", row.label_id)));
        }
        let e = Element::from_symbol(&row.symbol).ok_or_else(|| bad(path, format!("unknown element {}", row.symbol)))?;
        entries.push((e, row.count));
    }
    Ok(AtomVocab::from_entries(entries)?)
}

/// Potency records from the configured CSV, or seeded desk series.
pub fn potency_records(cfg: &RunConfig) -> Result<Vec<PotencyRecord>, CliError> {
    match &cfg.paths.potency {
        Some(p) => {
            let rep = ingest(p, &cfg.columns)?;
            if !rep.rejects.is_empty() || rep.duplicates > 0 {
                warn!(
                    "{}: {} rows rejected, {} duplicates dropped",
                    p.display(),
                    rep.rejects.len(),
                    rep.duplicates
                );
            }
            Ok(rep.records)
        }
        None => Ok(records_from_pk(&potency_series(
            cfg.desk.series,
            cfg.desk.per_series,
            cfg.seed,
        ))),
    }
}

#[derive(Serialize)]
struct RecordRow<'a> {
    id: &'a str,
    smiles: &'a str,
    canonical: &'a str,
    pk: f64,
}

pub fn write_records(path: &Path, records: &[PotencyRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(RecordRow {
            id: &r.id,
            smiles: &r.smiles,
            canonical: &r.canonical,
            pk: r.pk,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn id_index(records: &[PotencyRecord]) -> HashMap<&str, usize> {
    records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect()
}

/// Cliff membership of each record from `cliff_pairs.csv`, plus the pairs
/// as record indices.
pub fn read_cliffs(path: &Path, records: &[PotencyRecord]) -> Result<(Vec<bool>, Vec<(usize, usize)>), CliError> {
    #[derive(Deserialize)]
    struct Row {
        i: String,
        j: String,
    }
    let index = id_index(records);
    let mut flags = vec![false; records.len()];
    let mut pairs = Vec::new();
    for row in csv::Reader::from_path(path)?.deserialize::<Row>() {
        let row = row?;
        let look = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| bad(path, format!("unknown record id {id}")))
        };
        let (i, j) = (look(&row.i)?, look(&row.j)?);
        flags[i] = true;
        flags[j] = true;
        pairs.push((i, j));
    }
    Ok((flags, pairs))
}

pub fn read_split(path: &Path, records: &[PotencyRecord], kind: SplitKind) -> Result<DatasetSplit, CliError> {
    let index = id_index(records);
    let mut split = DatasetSplit {
        kind,
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
    };
    let mut seen = vec![false; records.len()];
    for row in csv::Reader::from_path(path)?.records() {
        let row = row?;
        let (id, part) = (row.get(0).unwrap_or(""), row.get(1).unwrap_or(""));
        let &i = index.get(id).ok_or_else(|| bad(path, format!("unknown record id {id}")))?;
        seen[i] = true;
        match part {
            "train" => split.train.push(i),
            "valid" => split.valid.push(i),
            "test" => split.test.push(i),
            other => return Err(bad(path, format!("unknown partition {other}"))),
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(bad(path, "does not cover every potency record"));
    }
    Ok(split)
}

/// Unmasked depiction of each record, patchified for the encoder.
pub fn depict_records(records: &[PotencyRecord], cfg: &RunConfig) -> Result<Vec<Vec<u8>>, CliError> {
    let patch = cfg.encoder.patch_size;
    records
        .par_iter()
        .map(|r| {
            let g = parse_smiles(&r.canonical)?;
            let layout = layout_2d(&g, cfg.seed).map_err(DepictError::from)?;
            let img = render(&g, &layout, None, &cfg.depict.render).image;
            Ok(patchify(&img, patch)?)
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
