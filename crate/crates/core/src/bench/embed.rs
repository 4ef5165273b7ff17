//! Two-dimensional projections of encoder features and distance summaries.

use serde::Serialize;

use super::BenchError;

/// Tanimoto bin edges 0.0, 0.1, …, 1.0.
pub const DEFAULT_BIN_EDGES: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

const JACOBI_SWEEPS: usize = 100;

/// Fitted two-component projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit loading vectors, largest variance first. The entry of largest
    /// magnitude in each is positive (ties to the lowest index).
    pub components: [Vec<f64>; 2],
    pub variances: [f64; 2],
}

impl Pca {
    pub fn project(&self, x: &[f64]) -> [f64; 2] {
        let centered = x.iter().zip(&self.mean).map(|(v, m)| v - m);
        let mut out = [0.0; 2];
        for (c, o) in self.components.iter().zip(&mut out) {
            *o = centered.clone().zip(c).map(|(v, w)| v * w).sum();
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and eigenvectors as columns of a row-major matrix.
fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Principal components of row-vector features, with their 2D coordinates.
/// Dimensions beyond the data's rank get zero components.
pub fn pca_2d(features: &[Vec<f64>]) -> Result<(Pca, Vec<[f64; 2]>), BenchError> {
    let Some(first) = features.first() else {
        return Err(BenchError::EmptyInput);
    };
    let d = first.len();
    if features.iter().any(|f| f.len() != d) {
        return Err(BenchError::RaggedEmbeddings);
    }
    let n = features.len() as f64;
    let mut mean = vec![0.0; d];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v / n;
        }
    }
    let denom = (n - 1.0).max(1.0);
    let mut cov = vec![0.0; d * d];
    for f in features {
        for i in 0..d {
            let ci = f[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += ci * (f[j] - mean[j]) / denom;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i * d + j] = cov[j * d + i];
        }
    }
    let (vals, vecs) = symmetric_eigen(cov, d);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let component = |rank: usize| -> (Vec<f64>, f64) {
        let Some(&k) = order.get(rank) else {
            return (vec![0.0; d], 0.0);
        };
        let mut c: Vec<f64> = (0..d).map(|i| vecs[i * d + k]).collect();
        let lead = (0..d).fold(0, |best, i| if c[i].abs() > c[best].abs() { i } else { best });
        if d > 0 && c[lead] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        (c, vals[k].max(0.0))
    };
    let (c0, v0) = component(0);
    let (c1, v1) = component(1);
    let pca = Pca {
        mean,
        components: [c0, c1],
        variances: [v0, v1],
    };
    let coords = features.iter().map(|f| pca.project(f)).collect();
    Ok((pca, coords))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Mean 2D distance between the members of each pair.
pub fn cliff_distance(coords: &[[f64; 2]], pairs: &[(usize, usize)]) -> Result<f64, BenchError> {
    if pairs.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let mut total = 0.0;
    for &(i, j) in pairs {
        let a = *coords.get(i).ok_or(BenchError::MissingEmbedding(i))?;
        let b = *coords.get(j).ok_or(BenchError::MissingEmbedding(j))?;
        total += dist(a, b);
    }
    Ok(total / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub center: f64,
    pub mean_distance: f64,
    pub pairs: usize,
}

/// Pairs `(i, j, similarity)` binned by similarity; bins are half-open
/// except the last, which includes its upper edge. Empty bins are omitted.
pub fn collapse_curve(
    coords: &[[f64; 2]],
    pairs: &[(usize, usize, f64)],
    edges: &[f64],
) -> Result<Vec<CurvePoint>, BenchError> {
    let bins = edges.len().saturating_sub(1);
    let mut sums = vec![(0.0, 0usize); bins];
    for &(i, j, s) in pairs {
        let a = *coords.get(i).ok_or(BenchError::MissingEmbedding(i))?;
        let b = *coords.get(j).ok_or(BenchError::MissingEmbedding(j))?;
        let bin = (0..bins).find(|&k| s >= edges[k] && (s < edges[k + 1] || (k + 1 == bins && s <= edges[k + 1])));
        if let Some(k) = bin {
            sums[k].0 += dist(a, b);
            sums[k].1 += 1;
        }
    }
    Ok(sums
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| *c > 0)
        .map(|(k, &(s, c))| CurvePoint {
            center: (edges[k] + edges[k + 1]) / 2.0,
            mean_distance: s / c as f64,
            pairs: c,
        })
        .collect())
}
