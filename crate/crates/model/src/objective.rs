//! Pretext losses over mixed-task batches.

use cliffmask_core::depict::MaskLevel;
use serde::Serialize;

use crate::data::{extend_input, head_for, PretextExample};
use crate::encoder::{Encoded, Model};
use crate::loss::{argmax, cross_entropy, mean_cross_entropy};
use crate::scalar::Real;
use crate::ModelError;

/// Sums for one task over a batch or an epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TaskStats {
    /// Sum of per-sample losses.
    pub loss_sum: f64,
    pub samples: usize,
    /// Correct argmax predictions, counted per masked patch (per sample for
    /// motifs).
    pub correct: usize,
    pub predictions: usize,
}

impl TaskStats {
    pub fn mean_loss(&self) -> Option<f64> {
        (self.samples > 0).then(|| self.loss_sum / self.samples as f64)
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.predictions > 0).then(|| self.correct as f64 / self.predictions as f64)
    }

    pub fn merge(&mut self, other: &TaskStats) {
        self.loss_sum += other.loss_sum;
        self.samples += other.samples;
        self.correct += other.correct;
        self.predictions += other.predictions;
    }
}

/// Loss of one batch. Tasks with no samples contribute zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LossRecord {
    /// Indexed like [`MaskLevel::ALL`].
    pub tasks: [TaskStats; 3],
    /// Loss of each sample, in batch order.
    pub per_sample: Vec<f64>,
}

impl LossRecord {
    pub fn task(&self, level: MaskLevel) -> &TaskStats {
        &self.tasks[level.index() as usize]
    }

    /// Mean loss of one task, `None` when the batch has none of it.
    pub fn component(&self, level: MaskLevel) -> Option<f64> {
        self.task(level).mean_loss()
    }

    pub fn total(&self) -> f64 {
        MaskLevel::ALL.iter().filter_map(|&l| self.component(l)).sum()
    }
}

/// Features and labels of one patch-level sample.
#[derive(Debug, Clone, Copy)]
pub struct PatchTarget<'a, T> {
    /// `|Ω| × dim` feature rows of the masked patches.
    pub features: &'a [T],
    pub labels: &'a [u32],
}

fn patch_task_loss<T: Real>(model: &Model<T>, level: MaskLevel, samples: &[PatchTarget<'_, T>]) -> Result<f64, ModelError> {
    if samples.is_empty() {
        return Err(ModelError::EmptyOmega);
    }
    let head = head_for(level);
    let classes = model.head_config().width(head);
    let mut total = 0.0;
    for s in samples {
        let logits = model.head_forward(head, s.features)?;
        total += mean_cross_entropy(&logits, classes, s.labels)?.f64();
    }
    Ok(total / samples.len() as f64)
}

/// Atom-level loss: cross-entropy averaged over each sample's masked patches,
/// then over samples.
pub fn loss_ampp<T: Real>(model: &Model<T>, samples: &[PatchTarget<'_, T>]) -> Result<f64, ModelError> {
    patch_task_loss(model, MaskLevel::Atom, samples)
}

/// Bond-level counterpart of [`loss_ampp`].
pub fn loss_bmpp<T: Real>(model: &Model<T>, samples: &[PatchTarget<'_, T>]) -> Result<f64, ModelError> {
    patch_task_loss(model, MaskLevel::Bond, samples)
}

/// Motif loss: one cross-entropy per sample on its classification-token
/// feature, batch-averaged.
pub fn loss_mmpp<T: Real>(model: &Model<T>, samples: &[(&[T], u32)]) -> Result<f64, ModelError> {
    if samples.is_empty() {
        return Err(ModelError::EmptyOmega);
    }
    let mut total = 0.0;
    for (cls, label) in samples {
        let logits = model.head_forward(crate::encoder::Head::Motif, cls)?;
        total += cross_entropy(&logits, *label)?.0.f64();
    }
    Ok(total / samples.len() as f64)
}

/// Concatenated encoder input of a batch.
pub fn batch_input<T: Real>(batch: &[&PretextExample]) -> Vec<T> {
    let mut input = Vec::with_capacity(batch.iter().map(|e| e.pixels.len()).sum());
    for e in batch {
        extend_input(&e.pixels, &mut input);
    }
    input
}

/// Rows of the encoder output that feed each sample's head.
fn target_rows(e: &PretextExample) -> Vec<usize> {
    match e.level {
        MaskLevel::Motif => vec![0],
        _ => e.omega.iter().map(|&p| p + 1).collect(),
    }
}

/// Unweighted sum of the per-task mean losses of a mixed batch, with
/// gradients accumulated into `grads` when given.
pub fn total_loss<T: Real>(
    model: &Model<T>,
    batch: &[&PretextExample],
    grads: Option<&mut [T]>,
) -> Result<LossRecord, ModelError> {
    let (enc, cache) = model.forward_cached(&batch_input(batch), batch.len())?;
    let (record, d_out) = head_losses(model, batch, &enc, grads.is_some())?;
    if let (Some(g), Some(d_out)) = (grads, d_out) {
        let (d_out, head_grads) = d_out;
        for (a, b) in g.iter_mut().zip(&head_grads) {
            *a += *b;
        }
        model.backward(&cache, &d_out, g);
    }
    Ok(record)
}

type OutputGrads<T> = (Vec<T>, Vec<T>);

/// Per-task losses from encoder output and, when asked, the gradient with
/// respect to that output plus the head parameter gradients.
fn head_losses<T: Real>(
    model: &Model<T>,
    batch: &[&PretextExample],
    enc: &Encoded<T>,
    want_grads: bool,
) -> Result<(LossRecord, Option<OutputGrads<T>>), ModelError> {
    let dim = enc.dim;
    let mut record = LossRecord {
        per_sample: vec![0.0; batch.len()],
        ..Default::default()
    };
    let mut counts = [0usize; 3];
    for e in batch {
        counts[e.level.index() as usize] += 1;
    }
    let mut d_out = want_grads.then(|| vec![T::zero(); enc.data.len()]);
    let mut head_grads = want_grads.then(|| vec![T::zero(); model.param_count()]);

    for level in MaskLevel::ALL {
        let members: Vec<usize> = (0..batch.len()).filter(|&i| batch[i].level == level).collect();
        if members.is_empty() {
            continue;
        }
        let head = head_for(level);
        let classes = model.head_config().width(head);
        let mut feats = Vec::new();
        let mut spans = Vec::with_capacity(members.len());
        for &i in &members {
            let rows = target_rows(batch[i]);
            if rows.is_empty() || rows.len() != batch[i].labels.len() {
                return Err(ModelError::EmptyOmega);
            }
            spans.push(rows.clone());
            for r in rows {
                feats.extend_from_slice(enc.row(i, r));
            }
        }
        let logits = model.head_forward(head, &feats)?;
        let mut d_logits = vec![T::zero(); logits.len()];
        let stats = &mut record.tasks[level.index() as usize];
        let n_task = T::of(counts[level.index() as usize] as f64);
        let mut row = 0;
        for (&i, rows) in members.iter().zip(&spans) {
            let scale = T::one() / (T::of(rows.len() as f64) * n_task);
            let mut sample_loss = T::zero();
            for &label in &batch[i].labels {
                let slice = &logits[row * classes..(row + 1) * classes];
                let (l, probs) = cross_entropy(slice, label)?;
                sample_loss += l;
                stats.predictions += 1;
                stats.correct += usize::from(argmax(slice) == label as usize);
                for (k, p) in probs.into_iter().enumerate() {
                    let target = if k == label as usize { T::one() } else { T::zero() };
                    d_logits[row * classes + k] = (p - target) * scale;
                }
                row += 1;
            }
            let mean = sample_loss.f64() / rows.len() as f64;
            record.per_sample[i] = mean;
            stats.loss_sum += mean;
            stats.samples += 1;
        }
        if let (Some(d_out), Some(hg)) = (d_out.as_mut(), head_grads.as_mut()) {
            let d_feats = model.head_backward(head, &feats, &d_logits, hg)?;
            let mut row = 0;
            for (&i, rows) in members.iter().zip(&spans) {
                for &r in rows {
                    let dst = (i * enc.tokens + r) * dim;
                    for k in 0..dim {
                        d_out[dst + k] += d_feats[row * dim + k];
                    }
                    row += 1;
                }
            }
        }
    }
    Ok((record, d_out.zip(head_grads)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, HeadConfig};

    fn example(level: MaskLevel, seed: u8, cfg: &EncoderConfig) -> PretextExample {
        let pixels: Vec<u8> = (0..cfg.input_len()).map(|i| ((i * 31 + seed as usize * 17) % 256) as u8).collect();
        let (omega, labels) = match level {
            MaskLevel::Motif => (vec![], vec![seed as u32 % 5]),
            _ => (vec![0, 3, 7], vec![1, 0, seed as u32 % 4]),
        };
        PretextExample {
            molecule_id: seed as usize,
            level,
            pixels,
            omega,
            labels,
        }
    }

    #[test]
    fn total_is_sum_of_components() {
        let cfg = EncoderConfig::tiny();
        let m: Model<f64> = Model::new(cfg.clone(), HeadConfig::pretext(6, 4, 5)).unwrap();
        let ex: Vec<PretextExample> = (0..6).map(|i| example(MaskLevel::ALL[i % 3], i as u8, &cfg)).collect();
        let refs: Vec<&PretextExample> = ex.iter().collect();
        let rec = total_loss(&m, &refs, None).unwrap();
        let (a, b, c) = (
            rec.component(MaskLevel::Atom).unwrap(),
            rec.component(MaskLevel::Bond).unwrap(),
            rec.component(MaskLevel::Motif).unwrap(),
        );
        assert_eq!(rec.total(), a + b + c);
        // Recompute from per-sample losses.
        for level in MaskLevel::ALL {
            let v: Vec<f64> = (0..6).filter(|i| ex[*i].level == level).map(|i| rec.per_sample[i]).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean - rec.component(level).unwrap()).abs() < 1e-12);
        }
        // Same values through the per-task entry points.
        let enc = m.forward(&batch_input::<f64>(&refs), 6).unwrap();
        let rows = |i: usize| -> Vec<f64> { ex[i].omega.iter().flat_map(|&p| enc.patch(i, p).to_vec()).collect() };
        let f0 = rows(0);
        let f3 = rows(3);
        let ampp = loss_ampp(
            &m,
            &[
                PatchTarget {
                    features: &f0,
                    labels: &ex[0].labels,
                },
                PatchTarget {
                    features: &f3,
                    labels: &ex[3].labels,
                },
            ],
        )
        .unwrap();
        assert!((ampp - a).abs() < 1e-12);
        let mmpp = loss_mmpp(&m, &[(enc.cls(2), ex[2].labels[0]), (enc.cls(5), ex[5].labels[0])]).unwrap();
        assert!((mmpp - c).abs() < 1e-12);
    }

    #[test]
    fn absent_tasks_contribute_zero() {
        let cfg = EncoderConfig::tiny();
        let m: Model<f64> = Model::new(cfg.clone(), HeadConfig::pretext(6, 4, 5)).unwrap();
        let ex = [example(MaskLevel::Atom, 1, &cfg), example(MaskLevel::Atom, 2, &cfg)];
        let rec = total_loss(&m, &[&ex[0], &ex[1]], None).unwrap();
        assert_eq!(rec.component(MaskLevel::Bond), None);
        assert_eq!(rec.total(), rec.component(MaskLevel::Atom).unwrap());
        let mut bad = example(MaskLevel::Motif, 1, &cfg);
        bad.labels = vec![9];
        assert!(matches!(
            total_loss(&m, &[&bad], None),
            Err(ModelError::LabelOutOfRange { label: 9, classes: 5 })
        ));
    }
}
