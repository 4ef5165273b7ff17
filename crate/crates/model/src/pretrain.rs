//! Pre-training on masked-pixel pretext samples.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cliffmask_core::depict::MaskLevel;
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{save_checkpoint, TrainState};
use crate::data::PretextExample;
use crate::encoder::Model;
use crate::objective::{total_loss, LossRecord, TaskStats};
use crate::optim::{OptimizerConfig, Sgd};
use crate::scalar::Real;
use crate::ModelError;

pub const LOG_FILE: &str = "train_log.csv";
pub const BEST_CHECKPOINT: &str = "checkpoint.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainConfig {
    pub epochs: usize,
    /// Share of molecules held out for validation.
    pub valid_fraction: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 20,
            valid_fraction: 0.05,
            seed: 0,
        }
    }
}

/// One optimizer owner over one model; updates are applied in call order.
#[derive(Debug, Clone)]
pub struct Trainer<T: Real> {
    pub model: Model<T>,
    pub opt: OptimizerConfig,
    sgd: Sgd<T>,
    pub step: usize,
    /// Steps the learning-rate schedule spans.
    pub total_steps: usize,
}

impl<T: Real> Trainer<T> {
    pub fn new(model: Model<T>, opt: OptimizerConfig, total_steps: usize) -> Self {
        let sgd = Sgd::new(&opt, model.param_count());
        Trainer {
            model,
            opt,
            sgd,
            step: 0,
            total_steps,
        }
    }

    /// Gradients of the total pretext loss followed by one SGD update.
    /// A non-finite loss leaves the parameters untouched.
    pub fn backward_and_step(&mut self, batch: &[&PretextExample]) -> Result<LossRecord, ModelError> {
        let mut grads = vec![T::zero(); self.model.param_count()];
        let record = total_loss(&self.model, batch, Some(&mut grads))?;
        if !record.total().is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NonFiniteLoss {
                step: self.step,
                molecules: batch.iter().map(|e| e.molecule_id).collect(),
            });
        }
        let lr = self.opt.lr_at(self.step, self.total_steps);
        self.sgd.step(&mut self.model.params, &grads, lr);
        self.step += 1;
        Ok(record)
    }
}

/// Per-task statistics of one epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub train: [TaskStats; 3],
    pub valid: [TaskStats; 3],
}

fn total_of(stats: &[TaskStats; 3]) -> f64 {
    stats.iter().filter_map(TaskStats::mean_loss).sum()
}

impl EpochSummary {
    /// Sum over tasks of the epoch-mean training loss.
    pub fn train_total(&self) -> f64 {
        total_of(&self.train)
    }

    pub fn valid_total(&self) -> f64 {
        total_of(&self.valid)
    }

    pub fn valid_accuracy(&self, level: MaskLevel) -> Option<f64> {
        self.valid[level.index() as usize].accuracy()
    }
}

#[derive(Debug, Clone)]
pub struct PretrainReport<T: Real> {
    /// Parameters at the best validation epoch.
    pub best: Model<T>,
    /// Parameters after the last epoch.
    pub last: Model<T>,
    /// 1-based; 0 when no epoch ran.
    pub best_epoch: usize,
    pub epochs: Vec<EpochSummary>,
    pub train_samples: usize,
    pub valid_samples: usize,
}

impl<T: Real> PretrainReport<T> {
    pub fn best_summary(&self) -> Option<&EpochSummary> {
        self.epochs.get(self.best_epoch.checked_sub(1)?)
    }
}

/// Seeded hold-out by molecule, so the levels of one molecule share a side.
/// Returns sample indices `(train, valid)`.
pub fn split_by_molecule(examples: &[PretextExample], valid_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let ids: BTreeSet<usize> = examples.iter().map(|e| e.molecule_id).collect();
    let mut ids: Vec<usize> = ids.into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_valid = ((ids.len() as f64 * valid_fraction).round() as usize).min(ids.len());
    let valid: BTreeSet<usize> = ids[..n_valid].iter().copied().collect();
    (0..examples.len()).partition(|&i| !valid.contains(&examples[i].molecule_id))
}

/// Loss and accuracy without updates.
pub fn evaluate<T: Real>(
    model: &Model<T>,
    examples: &[PretextExample],
    indices: &[usize],
    batch_size: usize,
) -> Result<[TaskStats; 3], ModelError> {
    let mut out: [TaskStats; 3] = Default::default();
    for chunk in indices.chunks(batch_size.max(1)) {
        let batch: Vec<&PretextExample> = chunk.iter().map(|&i| &examples[i]).collect();
        let rec = total_loss(model, &batch, None)?;
        for (o, t) in out.iter_mut().zip(&rec.tasks) {
            o.merge(t);
        }
    }
    Ok(out)
}

fn write_rows(w: &mut impl Write, epoch: usize, split: &str, stats: &[TaskStats; 3]) -> std::io::Result<()> {
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for level in MaskLevel::ALL {
        let s = &stats[level.index() as usize];
        if s.samples > 0 {
            writeln!(w, "{epoch},{split},{},{},{}", level.task(), fmt(s.mean_loss()), fmt(s.accuracy()))?;
        }
    }
    writeln!(w, "{epoch},{split},total,{:.6},", total_of(stats))
}

/// Trains on a seeded 1 − `valid_fraction` share of the molecules, logging
/// per-task loss and accuracy each epoch. The checkpoint of the epoch with
/// the lowest validation total (training total without a validation set)
/// is kept and, with `out_dir`, written next to the CSV log.
pub fn pretrain<T: Real>(
    model: Model<T>,
    examples: &[PretextExample],
    opt: &OptimizerConfig,
    cfg: &PretrainConfig,
    out_dir: Option<&Path>,
) -> Result<PretrainReport<T>, ModelError> {
    opt.validate()?;
    if examples.is_empty() {
        return Err(ModelError::ConfigInvalid("no pre-training samples".into()));
    }
    let (mut train, valid) = split_by_molecule(examples, cfg.valid_fraction, cfg.seed);
    let steps_per_epoch = train.len().div_ceil(opt.batch_size);
    let mut trainer = Trainer::new(model, opt.clone(), steps_per_epoch * cfg.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
    let mut log = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut w = BufWriter::new(File::create(dir.join(LOG_FILE))?);
            writeln!(w, "epoch,split,task,loss,accuracy")?;
            Some(w)
        }
        None => None,
    };
    let mut best = trainer.model.clone();
    let mut best_score = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_state = TrainState::default();
    let mut epochs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        train.shuffle(&mut rng);
        let mut summary = EpochSummary {
            epoch,
            ..Default::default()
        };
        for chunk in train.chunks(opt.batch_size) {
            let batch: Vec<&PretextExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let rec = trainer.backward_and_step(&batch)?;
            for (s, t) in summary.train.iter_mut().zip(&rec.tasks) {
                s.merge(t);
            }
        }
        summary.valid = evaluate(&trainer.model, examples, &valid, opt.batch_size)?;
        let score = if valid.is_empty() {
            summary.train_total()
        } else {
            summary.valid_total()
        };
        info!(
            "epoch {epoch}: train {:.4} valid {:.4} acc {:?}",
            summary.train_total(),
            summary.valid_total(),
            MaskLevel::ALL.map(|l| summary.valid_accuracy(l))
        );
        if let Some(w) = log.as_mut() {
            write_rows(w, epoch, "train", &summary.train)?;
            write_rows(w, epoch, "valid", &summary.valid)?;
        }
        if score < best_score {
            best_score = score;
            best_epoch = epoch;
            best = trainer.model.clone();
            best_state = TrainState {
                seed: cfg.seed,
                step: trainer.step as u64,
                epoch: epoch as u64,
                rng_word_pos: rng.get_word_pos().to_string(),
            };
        }
        epochs.push(summary);
    }
    if let Some(mut w) = log {
        w.flush()?;
    }
    if let Some(dir) = out_dir {
        save_checkpoint(&dir.join(BEST_CHECKPOINT), &best, &best_state)?;
    }
    Ok(PretrainReport {
        best,
        last: trainer.model,
        best_epoch,
        epochs,
        train_samples: train.len(),
        valid_samples: valid.len(),
    })
}
