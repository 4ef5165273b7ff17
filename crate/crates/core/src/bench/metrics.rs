use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;

/// Points in the shared KDE evaluation grid.
pub const KDE_GRID: usize = 512;
const KDE_FLOOR: f64 = 1e-12;
/// Bandwidth used when a sample has no spread.
const DEGENERATE_BANDWIDTH: f64 = 1e-3;

fn check(pred: &[f64], truth: &[f64]) -> Result<(), BenchError> {
    if pred.len() != truth.len() {
        return Err(BenchError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    Ok(())
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64, BenchError> {
    check(pred, truth)?;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64, BenchError> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// RMSE over compounds flagged as cliff members.
pub fn rmse_cliff(pred: &[f64], truth: &[f64], flags: &[bool]) -> Result<f64, BenchError> {
    check(pred, truth)?;
    if flags.len() != pred.len() {
        return Err(BenchError::LengthMismatch(pred.len(), flags.len()));
    }
    let (p, t): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .zip(truth)
        .zip(flags)
        .filter(|(_, &f)| f)
        .map(|((p, t), _)| (*p, *t))
        .unzip();
    if p.is_empty() {
        return Err(BenchError::NoCliffCompounds);
    }
    rmse(&p, &t)
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule, `0.9 · min(sd, IQR/1.34) · n^(−1/5)`, falling back to
/// the sample sd when the IQR is zero and to 1e−3 when all values are equal.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let (_, sd) = mean_sd(x);
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if spread > 0.0 && spread.is_finite() {
        0.9 * spread * (x.len() as f64).powf(-0.2)
    } else {
        DEGENERATE_BANDWIDTH
    }
}

/// Probability mass of a Gaussian KDE in each grid cell (cell `k` centered
/// on `grid[k]`, width `step`), via the normal CDF so narrow kernels between
/// grid points are not lost.
fn kde_mass(x: &[f64], h: f64, grid: &[f64], step: f64) -> Vec<f64> {
    let cdf = |z: f64| 0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2));
    grid.iter()
        .map(|&g| {
            x.iter()
                .map(|&v| cdf((g + step / 2.0 - v) / h) - cdf((g - step / 2.0 - v) / h))
                .sum::<f64>()
                / x.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    #[default]
    TruthPred,
    PredTruth,
}

/// KL divergence in nats between Gaussian KDEs of the two samples, taken as
/// cell masses on one grid spanning the joint range plus three bandwidths.
pub fn kld(pred: &[f64], truth: &[f64], direction: KlDirection) -> Result<f64, BenchError> {
    if pred.len() < 2 || truth.len() < 2 {
        return Err(BenchError::TooFewSamples(2));
    }
    let (hp, ht) = (silverman_bandwidth(pred), silverman_bandwidth(truth));
    let pad = 3.0 * hp.max(ht);
    let lo = pred.iter().chain(truth).copied().fold(f64::INFINITY, f64::min) - pad;
    let hi = pred.iter().chain(truth).copied().fold(f64::NEG_INFINITY, f64::max) + pad;
    let step = (hi - lo) / (KDE_GRID - 1) as f64;
    let grid: Vec<f64> = (0..KDE_GRID).map(|k| lo + step * k as f64).collect();
    let to_pmf = |d: Vec<f64>| {
        let floored: Vec<f64> = d.into_iter().map(|v| v.max(KDE_FLOOR)).collect();
        let total: f64 = floored.iter().sum();
        floored.into_iter().map(|v| v / total).collect::<Vec<f64>>()
    };
    let p = to_pmf(kde_mass(pred, hp, &grid, step));
    let t = to_pmf(kde_mass(truth, ht, &grid, step));
    let (a, b) = match direction {
        KlDirection::TruthPred => (&t, &p),
        KlDirection::PredTruth => (&p, &t),
    };
    Ok(a.iter().zip(b).map(|(x, y)| x * (x / y).ln()).sum::<f64>().max(0.0))
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    /// `None` when the set holds no cliff compound.
    pub rmse_cliff: Option<f64>,
    pub mae: f64,
    /// `None` for fewer than two compounds.
    pub kld: Option<f64>,
    pub n: usize,
    pub n_c: usize,
}

impl Metrics {
    pub fn compute(pred: &[f64], truth: &[f64], flags: &[bool]) -> Result<Metrics, BenchError> {
        let rmse_cliff = match rmse_cliff(pred, truth, flags) {
            Ok(v) => Some(v),
            Err(BenchError::NoCliffCompounds) => None,
            Err(e) => return Err(e),
        };
        Ok(Metrics {
            rmse: rmse(pred, truth)?,
            rmse_cliff,
            mae: mae(pred, truth)?,
            kld: kld(pred, truth, KlDirection::TruthPred).ok(),
            n: pred.len(),
            n_c: flags.iter().filter(|&&f| f).count(),
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<(), BenchError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        let r = rmse(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - (14.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((mae(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(rmse(&[1.0], &[]), Err(BenchError::LengthMismatch(1, 0))));
        assert!(matches!(mae(&[], &[]), Err(BenchError::EmptyInput)));
    }

    #[test]
    fn cliff_rmse() {
        let p = [1.0, 2.0, 3.0, 4.0];
        let t = [1.5, 2.0, 5.0, 4.0];
        assert_eq!(rmse_cliff(&p, &t, &[true; 4]).unwrap(), rmse(&p, &t).unwrap());
        assert!(matches!(rmse_cliff(&p, &t, &[false; 4]), Err(BenchError::NoCliffCompounds)));
        let half = rmse_cliff(&p, &t, &[true, false, true, false]).unwrap();
        assert_eq!(half, rmse(&[1.0, 3.0], &[1.5, 5.0]).unwrap());
        let m = Metrics::compute(&p, &t, &[false; 4]).unwrap();
        assert_eq!(m.rmse_cliff, None);
        assert!(serde_json::to_string(&m).unwrap().contains("\"rmse_cliff\":null"));
    }

    #[test]
    fn kld_identity_and_degenerate() {
        let x = [1.0, 2.0, 2.5, 4.0, 7.0];
        assert!(kld(&x, &x, KlDirection::TruthPred).unwrap() <= 1e-9);
        let flat = [3.0; 6];
        assert_eq!(silverman_bandwidth(&flat), 1e-3);
        assert!(kld(&flat, &flat, KlDirection::TruthPred).unwrap() <= 1e-9);
        assert!(kld(&flat, &x, KlDirection::TruthPred).unwrap() > 1.0);
        assert!(matches!(kld(&[1.0], &x, KlDirection::TruthPred), Err(BenchError::TooFewSamples(2))));
    }
}
