use crate::scalar::Real;
use crate::ModelError;

pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exp.iter().copied().sum();
    exp.into_iter().map(|v| v / sum).collect()
}

/// Cross-entropy of one logit row against `label`, with the softmax.
pub fn cross_entropy<T: Real>(logits: &[T], label: u32) -> Result<(T, Vec<T>), ModelError> {
    let k = label as usize;
    if k >= logits.len() {
        return Err(ModelError::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + logits.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
    Ok((lse - logits[k], softmax(logits)))
}

/// Mean cross-entropy over the rows of one sample's `rows × classes` logits.
pub fn mean_cross_entropy<T: Real>(logits: &[T], classes: usize, labels: &[u32]) -> Result<T, ModelError> {
    if labels.is_empty() {
        return Err(ModelError::EmptyOmega);
    }
    if logits.len() != labels.len() * classes {
        return Err(ModelError::ShapeMismatch {
            expected: labels.len() * classes,
            got: logits.len(),
        });
    }
    let mut total = T::zero();
    for (row, &l) in logits.chunks_exact(classes).zip(labels) {
        total += cross_entropy(row, l)?.0;
    }
    Ok(total / T::of(labels.len() as f64))
}

/// Index of the largest logit, ties to the lowest index.
pub fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        for k in [4usize, 10, 200] {
            let (l, p) = cross_entropy(&vec![0.3f64; k], 1).unwrap();
            assert!((l - (k as f64).ln()).abs() < 1e-12);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((cross_entropy(&[0.0f64; 4], 0).unwrap().0 - 1.386_294_361_119_890_6).abs() < 1e-12);
        assert!((cross_entropy(&[0.0f64; 200], 0).unwrap().0 - 5.298_317_366_548_036).abs() < 1e-12);
    }

    #[test]
    fn margin_drives_loss_to_zero() {
        let mut last = f64::INFINITY;
        for margin in [1.0, 5.0, 20.0, 60.0] {
            let (l, _) = cross_entropy(&[0.0, margin, 0.0], 1).unwrap();
            assert!(l < last && l >= 0.0);
            last = l;
        }
        assert!(last < 1e-20);
    }

    #[test]
    fn two_patch_fixture() {
        // Rows [1, 2, 3] label 2 and [0.5, -1, 0] label 0.
        let logits = [1.0f64, 2.0, 3.0, 0.5, -1.0, 0.0];
        let r1 = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln() - 3.0;
        let r2 = (0.5f64.exp() + (-1f64).exp() + 1.0).ln() - 0.5;
        let got = mean_cross_entropy(&logits, 3, &[2, 0]).unwrap();
        assert!((got - (r1 + r2) / 2.0).abs() < 1e-12);
        assert!((got - 0.505_868_284_890_554_2).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            cross_entropy(&[0.0f64; 3], 3),
            Err(ModelError::LabelOutOfRange { label: 3, classes: 3 })
        ));
        assert!(matches!(mean_cross_entropy::<f64>(&[], 3, &[]), Err(ModelError::EmptyOmega)));
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[1.0f32, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0f64]), 0);
    }
}
