//! Run configuration: a TOML file, dotted-key overrides, validation.

use std::path::{Path, PathBuf};

use cliffmask_core::bench::{CliffConfig, ColumnMap, SplitKind};
use cliffmask_core::chem::DEFAULT_ATOM_VOCAB_SIZE;
use cliffmask_core::depict::DepictConfig;
use cliffmask_core::fragment::{DEFAULT_MIN_ATOMS, DEFAULT_MOTIF_VOCAB_SIZE};
use cliffmask_model::{EncoderConfig, FinetuneConfig, OptimizerConfig, PretrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Artifact directory shared by all subcommands.
    pub out: PathBuf,
    /// One SMILES per line; a desk corpus is generated when unset.
    pub corpus: Option<PathBuf>,
    /// Potency CSV; desk potency series are generated when unset.
    pub potency: Option<PathBuf>,
    /// Cleavage rules file; the built-in retrosynthetic table when unset.
    pub rules: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            out: PathBuf::from("cliffmask-out"),
            corpus: None,
            potency: None,
            rules: None,
        }
    }
}

/// Sizes of the generated stand-in data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeskConfig {
    pub molecules: usize,
    pub series: usize,
    pub per_series: usize,
}

impl Default for DeskConfig {
    fn default() -> Self {
        DeskConfig {
            molecules: 2000,
            series: 40,
            per_series: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VocabConfig {
    pub atom_size: usize,
    pub motif_size: usize,
    /// Fragments with fewer heavy atoms are not counted as motifs.
    pub min_atoms: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            atom_size: DEFAULT_ATOM_VOCAB_SIZE,
            motif_size: DEFAULT_MOTIF_VOCAB_SIZE,
            min_atoms: DEFAULT_MIN_ATOMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub kind: SplitKind,
    /// Train, valid and test shares for scaffold and random splits.
    pub fractions: [f64; 3],
    /// Train share of each stratum in the stratified cluster split.
    pub train_fraction: f64,
    /// Tanimoto level at which a molecule joins a cluster leader.
    pub cluster_threshold: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            kind: SplitKind::StratifiedCluster,
            fractions: [0.8, 0.1, 0.1],
            train_fraction: 0.8,
            cluster_threshold: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Threads for rendering and mining; outputs do not depend on it.
    pub workers: usize,
    pub precision: Precision,
    pub paths: Paths,
    pub columns: ColumnMap,
    pub desk: DeskConfig,
    pub vocab: VocabConfig,
    pub depict: DepictConfig,
    pub encoder: EncoderConfig,
    pub optimizer: OptimizerConfig,
    pub pretrain: PretrainConfig,
    pub finetune: FinetuneConfig,
    pub finetune_optimizer: OptimizerConfig,
    /// Pick the fine-tuning batch size and learning rate by grid search.
    pub finetune_grid: bool,
    pub cliffs: CliffConfig,
    pub split: SplitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let encoder = EncoderConfig::small();
        let mut depict = DepictConfig::default();
        depict.render.image_size = encoder.image_size as u32;
        depict.patch_size = encoder.patch_size as u32;
        RunConfig {
            seed: 0,
            workers: 1,
            precision: Precision::F32,
            paths: Paths::default(),
            columns: ColumnMap::default(),
            desk: DeskConfig::default(),
            vocab: VocabConfig::default(),
            depict,
            encoder,
            optimizer: OptimizerConfig {
                lr: 0.05,
                batch_size: 32,
                warmup_steps: 100,
                schedule: cliffmask_model::Schedule::Cosine,
                clip_norm: Some(1.0),
                ..Default::default()
            },
            pretrain: PretrainConfig::default(),
            finetune: FinetuneConfig::default(),
            finetune_optimizer: OptimizerConfig {
                lr: 5e-3,
                batch_size: 16,
                clip_norm: Some(1.0),
                ..Default::default()
            },
            finetune_grid: false,
            cliffs: CliffConfig::default(),
            split: SplitConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl RunConfig {
    /// Layers `path` and then `key=value` overrides on dotted keys over the
    /// defaults, then deserializes and validates. Layering over the full
    /// default table keeps a partial section from resetting its siblings to
    /// library defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
        let mut table = toml::Table::try_from(RunConfig::default()).map_err(|e| invalid(e.to_string()))?;
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            merge(&mut table, text.parse::<toml::Table>().map_err(|e| invalid(e.to_string()))?);
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let reason = |e: &dyn std::fmt::Display| invalid(e.to_string());
        self.depict.validate().map_err(|e| reason(&e))?;
        self.encoder.validate().map_err(|e| reason(&e))?;
        self.optimizer.validate().map_err(|e| reason(&e))?;
        self.finetune_optimizer.validate().map_err(|e| reason(&e))?;
        if self.depict.render.image_size as usize != self.encoder.image_size {
            return Err(invalid(format!(
                "depict.render.image_size {} differs from encoder.image_size {}",
                self.depict.render.image_size, self.encoder.image_size
            )));
        }
        if self.depict.patch_size as usize != self.encoder.patch_size {
            return Err(invalid(format!(
                "depict.patch_size {} differs from encoder.patch_size {}",
                self.depict.patch_size, self.encoder.patch_size
            )));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be positive"));
        }
        if self.vocab.atom_size == 0 || self.vocab.atom_size > DEFAULT_ATOM_VOCAB_SIZE {
            return Err(invalid(format!("vocab.atom_size must lie in 1..={DEFAULT_ATOM_VOCAB_SIZE}")));
        }
        if self.vocab.motif_size == 0 {
            return Err(invalid("vocab.motif_size must be positive"));
        }
        let f = &self.split.fractions;
        if f.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("split.fractions must be shares summing to 1"));
        }
        if !(0.0..=1.0).contains(&self.split.train_fraction) {
            return Err(invalid("split.train_fraction must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.pretrain.valid_fraction) || !(0.0..1.0).contains(&self.finetune.valid_fraction)
        {
            return Err(invalid("validation fractions must lie in [0, 1)"));
        }
        self.cliffs.spec().map_err(|e| reason(&e))?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }
}

/// Sets `a.b.c = value` in `table`, creating tables on the way. The value is
/// read as a TOML literal, falling back to a plain string.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("bad override key `{key}`")));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut cur = table;
    for p in path {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| invalid(format!("override key `{key}` crosses a non-table value")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
