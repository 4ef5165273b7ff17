use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cliffs::MolFeatures;
use super::ingest::PotencyRecord;
use super::BenchError;
use crate::chem::tanimoto;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    StratifiedCluster,
    Scaffold,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Valid,
    Test,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Valid => "valid",
            Partition::Test => "test",
        })
    }
}

/// Record indices per partition, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub kind: SplitKind,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    fn new(kind: SplitKind, mut parts: [Vec<usize>; 3]) -> Self {
        for p in &mut parts {
            p.sort_unstable();
        }
        let [train, valid, test] = parts;
        DatasetSplit {
            kind,
            train,
            valid,
            test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Partition of each record index.
    pub fn assignment(&self) -> Vec<Partition> {
        let mut out = vec![Partition::Train; self.len()];
        for &i in &self.valid {
            out[i] = Partition::Valid;
        }
        for &i in &self.test {
            out[i] = Partition::Test;
        }
        out
    }

    /// `split.csv`: record id and partition, in record order.
    pub fn write_csv(&self, path: &Path, records: &[PotencyRecord]) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["id", "partition"])?;
        for (r, p) in records.iter().zip(self.assignment()) {
            w.write_record([r.id.as_str(), &p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Greedy leader clustering in record order: each molecule joins the most
/// similar existing leader at Tanimoto `>= threshold` (ties to the earlier
/// leader) or founds a new cluster. Returns the cluster id of each molecule,
/// numbered by founding order.
pub fn leader_clusters(features: &[MolFeatures], threshold: f64) -> Vec<usize> {
    let mut leaders: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (c, &l) in leaders.iter().enumerate() {
            let s = tanimoto(&f.fp, &features[l].fp).unwrap_or(0.0);
            if s >= threshold && best.is_none_or(|(_, bs)| s > bs) {
                best = Some((c, s));
            }
        }
        match best {
            Some((c, _)) => out.push(c),
            None => {
                out.push(leaders.len());
                leaders.push(i);
            }
        }
    }
    out
}

/// `round(frac · n)` with halves up.
fn train_count(n: usize, frac: f64) -> usize {
    ((frac * n as f64 + 0.5 + 1e-9).floor() as usize).min(n)
}

/// Within each leader cluster, cliff and non-cliff molecules are shuffled
/// separately and a `train_frac` share of each goes to train, the rest to
/// test.
pub fn stratified_cluster_split(
    features: &[MolFeatures],
    cliff_flags: &[bool],
    train_frac: f64,
    threshold: f64,
    seed: u64,
) -> DatasetSplit {
    let clusters = leader_clusters(features, threshold);
    let mut strata: BTreeMap<(usize, bool), Vec<usize>> = BTreeMap::new();
    for (i, &c) in clusters.iter().enumerate() {
        strata.entry((c, cliff_flags[i])).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut members) in strata {
        members.shuffle(&mut rng);
        let k = train_count(members.len(), train_frac);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    DatasetSplit::new(SplitKind::StratifiedCluster, [train, Vec::new(), test])
}

/// Scaffold groups, largest first (ties by scaffold string), each placed in
/// the partition currently least filled relative to its target size. Ties go
/// to the earlier partition.
pub fn scaffold_split(features: &[MolFeatures], fracs: [f64; 3]) -> DatasetSplit {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, f) in features.iter().enumerate() {
        groups.entry(f.scaffold.as_str()).or_default().push(i);
    }
    let mut groups: Vec<(&str, Vec<usize>)> = groups.into_iter().collect();
    groups.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
    let n = features.len() as f64;
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (_, members) in groups {
        let fill = |k: usize| {
            let target = fracs[k] * n;
            if target <= 0.0 {
                f64::INFINITY
            } else {
                parts[k].len() as f64 / target
            }
        };
        let k = (0..3)
            .min_by(|&a, &b| fill(a).total_cmp(&fill(b)).then(a.cmp(&b)))
            .unwrap();
        parts[k].extend(members);
    }
    DatasetSplit::new(SplitKind::Scaffold, parts)
}

/// Seeded shuffle cut at the given fractions; the test share takes the
/// remainder.
pub fn random_split(n: usize, fracs: [f64; 3], seed: u64) -> DatasetSplit {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let a = train_count(n, fracs[0]);
    let b = (a + train_count(n, fracs[1])).min(n);
    DatasetSplit::new(SplitKind::Random, [idx[..a].to_vec(), idx[a..b].to_vec(), idx[b..].to_vec()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::Fingerprint;

    fn feats(fps: Vec<Vec<usize>>, scaffolds: &[&str]) -> Vec<MolFeatures> {
        fps.into_iter()
            .zip(scaffolds)
            .map(|(bits, s)| MolFeatures {
                canonical: String::new(),
                fp: Fingerprint::from_bits(64, bits),
                scaffold_fp: None,
                scaffold: s.to_string(),
            })
            .collect()
    }

    #[test]
    fn single_cluster_stratification() {
        let f = feats(vec![vec![1, 2, 3]; 10], &["x"; 10]);
        let flags: Vec<bool> = (0..10).map(|i| i < 5).collect();
        let s = stratified_cluster_split(&f, &flags, 0.8, 0.6, 3);
        assert_eq!(s.train.len(), 8);
        assert_eq!(s.train.iter().filter(|&&i| flags[i]).count(), 4);
        assert_eq!(s, stratified_cluster_split(&f, &flags, 0.8, 0.6, 3));
    }

    #[test]
    fn leader_assignment() {
        let f = feats(vec![vec![1, 2], vec![1, 2, 3], vec![10, 11], vec![10, 11, 12, 13]], &[""; 4]);
        assert_eq!(leader_clusters(&f, 0.6), vec![0, 0, 1, 2]);
        assert_eq!(leader_clusters(&f, 0.5), vec![0, 0, 1, 1]);
    }

    #[test]
    fn scaffold_fixtures() {
        let one = feats(vec![vec![1]; 7], &["a"; 7]);
        let s = scaffold_split(&one, [0.8, 0.1, 0.1]);
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (7, 0, 0));
        let names: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let ten = feats(vec![vec![1]; 10], &refs);
        let s = scaffold_split(&ten, [0.8, 0.1, 0.1]);
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
        assert_eq!(s.assignment().len(), 10);
    }

    #[test]
    fn random_partition() {
        let s = random_split(20, [0.8, 0.1, 0.1], 1);
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (16, 2, 2));
        let mut all: Vec<usize> = s.train.iter().chain(&s.valid).chain(&s.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }
}
