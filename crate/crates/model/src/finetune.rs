//! Regression fine-tuning on unmasked depictions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cliffmask_core::bench::{DatasetSplit, Metrics};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::extend_input;
use crate::encoder::{Head, HeadConfig, Model, TargetScale};
use crate::optim::{OptimizerConfig, Sgd};
use crate::scalar::Real;
use crate::ModelError;

pub const BATCH_GRID: [usize; 4] = [8, 16, 32, 64];
pub const LR_GRID: [f64; 3] = [5e-5, 5e-4, 5e-3];
pub const FINETUNE_LOG: &str = "finetune_log.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinetuneConfig {
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Share of the training partition held out when the split has no
    /// validation partition.
    pub valid_fraction: f64,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            max_epochs: 100,
            patience: 10,
            valid_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Patchified image and its pK.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionExample {
    pub pixels: Vec<u8>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinetuneEpoch {
    pub epoch: usize,
    pub train_mse: f64,
    pub valid_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct FinetuneReport<T: Real> {
    /// Parameters at the best validation epoch.
    pub model: Model<T>,
    /// 0 when the initial parameters were never beaten.
    pub best_epoch: usize,
    pub best_valid_rmse: f64,
    pub log: Vec<FinetuneEpoch>,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
    /// Predictions for `test`, in pK.
    pub predictions: Vec<f64>,
    /// `None` when the test partition is empty.
    pub metrics: Option<Metrics>,
}

/// Writes the training-log CSV: per epoch, train MSE and validation MSE
/// in pK².
pub fn write_finetune_log(path: &Path, log: &[FinetuneEpoch]) -> Result<(), ModelError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,split,task,loss,accuracy")?;
    for e in log {
        writeln!(w, "{},train,regression,{:.6},", e.epoch, e.train_mse)?;
        writeln!(w, "{},valid,regression,{:.6},", e.epoch, e.valid_rmse * e.valid_rmse)?;
    }
    w.flush()?;
    Ok(())
}

/// Predicts pK for the selected examples.
pub fn predict_indices<T: Real>(
    model: &Model<T>,
    examples: &[RegressionExample],
    indices: &[usize],
    batch_size: usize,
) -> Result<Vec<f64>, ModelError> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(batch_size.max(1)) {
        let mut input = Vec::new();
        for &i in chunk {
            extend_input(&examples[i].pixels, &mut input);
        }
        out.extend(model.predict(&input, chunk.len())?);
    }
    Ok(out)
}

fn rmse_on<T: Real>(model: &Model<T>, examples: &[RegressionExample], idx: &[usize], batch: usize) -> Result<f64, ModelError> {
    if idx.is_empty() {
        return Ok(f64::NAN);
    }
    let pred = predict_indices(model, examples, idx, batch)?;
    let sse: f64 = pred.iter().zip(idx).map(|(p, &i)| (p - examples[i].target).powi(2)).sum();
    Ok((sse / idx.len() as f64).sqrt())
}

/// Mean squared error between regression outputs and `targets`, both in
/// head units, with gradients accumulated into `grads` when given.
pub fn regression_loss<T: Real>(
    model: &Model<T>,
    input: &[T],
    targets: &[f64],
    grads: Option<&mut [T]>,
) -> Result<f64, ModelError> {
    let b = targets.len();
    let (enc, cache) = model.forward_cached(input, b)?;
    let cls: Vec<T> = (0..b).flat_map(|k| enc.cls(k).to_vec()).collect();
    let out = model.head_forward(Head::Regression, &cls)?;
    let mut d_head = vec![T::zero(); b];
    let mut mse = 0.0;
    for k in 0..b {
        let r = out[k].f64() - targets[k];
        mse += r * r / b as f64;
        d_head[k] = T::of(2.0 * r / b as f64);
    }
    if let Some(grads) = grads {
        let d_cls = model.head_backward(Head::Regression, &cls, &d_head, grads)?;
        let mut d_out = vec![T::zero(); enc.data.len()];
        for k in 0..b {
            let dst = k * enc.tokens * enc.dim;
            d_out[dst..dst + enc.dim].copy_from_slice(&d_cls[k * enc.dim..(k + 1) * enc.dim]);
        }
        model.backward(&cache, &d_out, grads);
    }
    Ok(mse)
}

/// One step on standardized targets; returns the batch MSE in pK².
fn regression_step<T: Real>(
    model: &mut Model<T>,
    sgd: &mut Sgd<T>,
    examples: &[RegressionExample],
    chunk: &[usize],
    lr: f64,
) -> Result<f64, ModelError> {
    let mut input = Vec::new();
    for &i in chunk {
        extend_input(&examples[i].pixels, &mut input);
    }
    let scale = model.target_scale;
    let targets: Vec<f64> = chunk.iter().map(|&i| (examples[i].target - scale.mean) / scale.std).collect();
    let mut grads = vec![T::zero(); model.param_count()];
    let mse = regression_loss(model, &input, &targets, Some(&mut grads))?;
    if !mse.is_finite() || grads.iter().any(|g| !g.is_finite()) {
        return Err(ModelError::NonFiniteLoss {
            step: 0,
            molecules: chunk.to_vec(),
        });
    }
    sgd.step(&mut model.params, &grads, lr);
    Ok(mse * scale.std * scale.std)
}

/// Trains a regression head on the classification-token feature with the
/// encoder unfrozen, keeping the parameters of the best validation RMSE and
/// stopping after `patience` epochs without improvement. Test metrics use
/// `cliff_flags` (indexed like `examples`) for the cliff subset.
pub fn finetune<T: Real>(
    model: Model<T>,
    examples: &[RegressionExample],
    split: &DatasetSplit,
    cliff_flags: &[bool],
    opt: &OptimizerConfig,
    cfg: &FinetuneConfig,
    out_dir: Option<&Path>,
) -> Result<FinetuneReport<T>, ModelError> {
    opt.validate()?;
    if split.len() != examples.len() || cliff_flags.len() != examples.len() {
        return Err(ModelError::ShapeMismatch {
            expected: examples.len(),
            got: split.len(),
        });
    }
    let mut model = if model.head_config().regression {
        model
    } else {
        model.with_heads(
            HeadConfig {
                regression: true,
                ..Default::default()
            },
            cfg.seed,
        )
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut train, valid) = if split.valid.is_empty() {
        let mut t = split.train.clone();
        t.shuffle(&mut rng);
        let k = ((t.len() as f64 * cfg.valid_fraction).round() as usize).min(t.len().saturating_sub(1));
        let mut v = t.split_off(t.len() - k);
        t.sort_unstable();
        v.sort_unstable();
        (t, v)
    } else {
        (split.train.clone(), split.valid.clone())
    };
    if train.is_empty() {
        return Err(ModelError::ConfigInvalid("empty training partition".into()));
    }
    let targets: Vec<f64> = train.iter().map(|&i| examples[i].target).collect();
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / targets.len() as f64;
    model.target_scale = TargetScale {
        mean,
        std: if var > 0.0 { var.sqrt() } else { 1.0 },
    };

    let steps = train.len().div_ceil(opt.batch_size) * cfg.max_epochs;
    let mut sgd = Sgd::new(opt, model.param_count());
    let mut best = model.clone();
    let mut best_rmse = rmse_on(&model, examples, &valid, opt.batch_size)?;
    let mut best_epoch = 0;
    let mut wait = 0;
    let mut log = Vec::new();
    let mut step = 0;
    for epoch in 1..=cfg.max_epochs {
        train.shuffle(&mut rng);
        let mut sse = 0.0;
        for chunk in train.chunks(opt.batch_size) {
            let lr = opt.lr_at(step, steps);
            sse += regression_step(&mut model, &mut sgd, examples, chunk, lr)? * chunk.len() as f64;
            step += 1;
        }
        let train_mse = sse / train.len() as f64;
        let valid_rmse = rmse_on(&model, examples, &valid, opt.batch_size)?;
        info!("finetune epoch {epoch}: train mse {train_mse:.4} valid rmse {valid_rmse:.4}");
        log.push(FinetuneEpoch {
            epoch,
            train_mse,
            valid_rmse,
        });
        if valid_rmse < best_rmse || best_rmse.is_nan() {
            best_rmse = valid_rmse;
            best = model.clone();
            best_epoch = epoch;
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                break;
            }
        }
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_finetune_log(&dir.join(FINETUNE_LOG), &log)?;
    }
    let test = split.test.clone();
    let predictions = predict_indices(&best, examples, &test, opt.batch_size)?;
    let metrics = if test.is_empty() {
        None
    } else {
        let truth: Vec<f64> = test.iter().map(|&i| examples[i].target).collect();
        let flags: Vec<bool> = test.iter().map(|&i| cliff_flags[i]).collect();
        Some(Metrics::compute(&predictions, &truth, &flags)?)
    };
    Ok(FinetuneReport {
        model: best,
        best_epoch,
        best_valid_rmse: best_rmse,
        log,
        train,
        valid,
        test,
        predictions,
        metrics,
    })
}

/// Runs every batch size and learning rate of the search grid and returns
/// the configuration with the lowest validation RMSE (ties to the earlier
/// grid point) with its report.
pub fn finetune_grid<T: Real>(
    model: &Model<T>,
    examples: &[RegressionExample],
    split: &DatasetSplit,
    cliff_flags: &[bool],
    base: &OptimizerConfig,
    cfg: &FinetuneConfig,
) -> Result<(OptimizerConfig, FinetuneReport<T>), ModelError> {
    let mut best: Option<(OptimizerConfig, FinetuneReport<T>)> = None;
    for &batch_size in &BATCH_GRID {
        for &lr in &LR_GRID {
            let opt = OptimizerConfig {
                batch_size,
                lr,
                ..base.clone()
            };
            let rep = finetune(model.clone(), examples, split, cliff_flags, &opt, cfg, None)?;
            if best.as_ref().is_none_or(|(_, b)| rep.best_valid_rmse < b.best_valid_rmse) {
                best = Some((opt, rep));
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}
