use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::PotencyRecord;
use super::BenchError;
use crate::chem::{
    canonical_smiles, ecfp, murcko_scaffold, parse_smiles, smiles_similarity, tanimoto, Fingerprint, FingerprintSpec,
};

/// Slack on the potency-gap threshold so gaps that are exactly 1.0 in
/// decimal (6.3 vs 5.3) still count after floating-point subtraction.
pub const DELTA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliffConfig {
    /// A pair is similar when any criterion strictly exceeds this.
    pub similarity: f64,
    /// Minimum absolute pK gap.
    pub delta_pk: f64,
    pub fp_radius: u32,
    pub fp_width: usize,
}

impl Default for CliffConfig {
    fn default() -> Self {
        CliffConfig {
            similarity: 0.9,
            delta_pk: 1.0,
            fp_radius: 2,
            fp_width: 2048,
        }
    }
}

impl CliffConfig {
    pub fn spec(&self) -> Result<FingerprintSpec, BenchError> {
        Ok(FingerprintSpec::new(self.fp_radius, self.fp_width)?)
    }
}

/// Per-molecule inputs to the similarity criteria.
#[derive(Debug, Clone)]
pub struct MolFeatures {
    pub canonical: String,
    pub fp: Fingerprint,
    /// `None` for acyclic molecules.
    pub scaffold_fp: Option<Fingerprint>,
    pub scaffold: String,
}

pub fn featurize(records: &[PotencyRecord], spec: FingerprintSpec) -> Vec<MolFeatures> {
    records
        .par_iter()
        .map(|r| {
            let g = parse_smiles(&r.canonical).expect("records hold parsed SMILES");
            let scaf = murcko_scaffold(&g);
            let empty = scaf.atom_count() == 0;
            MolFeatures {
                canonical: r.canonical.clone(),
                fp: ecfp(&g, spec),
                scaffold_fp: (!empty).then(|| ecfp(&scaf, spec)),
                scaffold: canonical_smiles(&scaf),
            }
        })
        .collect()
}

/// `(substructure, scaffold, smiles)` similarities. Scaffold similarity is 0
/// when either molecule has no ring.
pub fn similarity_triad(a: &MolFeatures, b: &MolFeatures) -> (f64, f64, f64) {
    let sub = tanimoto(&a.fp, &b.fp).unwrap_or(0.0);
    let scaf = match (&a.scaffold_fp, &b.scaffold_fp) {
        (Some(x), Some(y)) => tanimoto(x, y).unwrap_or(0.0),
        _ => 0.0,
    };
    (sub, scaf, smiles_similarity(&a.canonical, &b.canonical))
}

/// Which similarity criteria a pair exceeds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Criteria {
    pub substructure: bool,
    pub scaffold: bool,
    pub smiles: bool,
}

impl Criteria {
    pub fn any(self) -> bool {
        self.substructure || self.scaffold || self.smiles
    }
}

impl fmt::Display for Criteria {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.substructure, "substructure"),
            (self.scaffold, "scaffold"),
            (self.smiles, "smiles"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        f.write_str(&names.join("|"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffPair {
    /// Record indices, `i < j`.
    pub i: usize,
    pub j: usize,
    pub criteria: Criteria,
    /// `|pK_i − pK_j|`.
    pub delta_pk: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CliffReport {
    /// Ordered by `(i, j)`.
    pub pairs: Vec<CliffPair>,
    /// Whether each record belongs to at least one pair.
    pub flags: Vec<bool>,
}

impl CliffReport {
    pub fn cliff_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// All pairs with a pK gap of at least `delta_pk` and some similarity above
/// `similarity`.
pub fn find_cliff_pairs(records: &[PotencyRecord], features: &[MolFeatures], cfg: &CliffConfig) -> CliffReport {
    let n = records.len();
    let pairs: Vec<CliffPair> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).filter_map(move |j| {
                let delta_pk = (records[i].pk - records[j].pk).abs();
                if delta_pk < cfg.delta_pk - DELTA_TOLERANCE {
                    return None;
                }
                let (sub, scaf, smi) = similarity_triad(&features[i], &features[j]);
                let criteria = Criteria {
                    substructure: sub > cfg.similarity,
                    scaffold: scaf > cfg.similarity,
                    smiles: smi > cfg.similarity,
                };
                criteria.any().then_some(CliffPair { i, j, criteria, delta_pk })
            })
        })
        .collect();
    let mut flags = vec![false; n];
    for p in &pairs {
        flags[p.i] = true;
        flags[p.j] = true;
    }
    CliffReport { pairs, flags }
}

#[derive(Serialize)]
struct PairRow<'a> {
    i: &'a str,
    j: &'a str,
    criteria: String,
    delta_pk: f64,
}

/// `cliff_pairs.csv`: record ids, criteria joined by `|`, and the pK gap.
pub fn write_cliff_pairs(path: &Path, records: &[PotencyRecord], pairs: &[CliffPair]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for p in pairs {
        w.serialize(PairRow {
            i: &records[p.i].id,
            j: &records[p.j].id,
            criteria: p.criteria.to_string(),
            delta_pk: p.delta_pk,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::records_from_pk;

    fn recs(data: &[(&str, f64)]) -> Vec<PotencyRecord> {
        records_from_pk(&data.iter().map(|(s, p)| (s.to_string(), *p)).collect::<Vec<_>>())
    }

    #[test]
    fn triad_fixtures() {
        let r = recs(&[
            ("CC(=O)Oc1ccccc1C(=O)O", 5.0),
            ("C", 5.0),
            ("CC12CCC3C(CCC4=CC(=O)CCC34C)C1CCC2O", 5.0),
            ("Clc1ccc(CC2CCNCC2)cc1", 5.0),
            ("Oc1ccc(CC2CCNCC2)cc1", 5.0),
        ]);
        let f = featurize(&r, FingerprintSpec::default());
        assert_eq!(similarity_triad(&f[0], &f[0]), (1.0, 1.0, 1.0));
        let (a, b, c) = similarity_triad(&f[1], &f[2]);
        assert!(a < 0.9 && b < 0.9 && c < 0.9);
        assert_eq!(b, 0.0);
        assert_eq!(similarity_triad(&f[3], &f[4]).1, 1.0);
    }

    #[test]
    fn identical_potency_is_not_a_cliff() {
        let r = recs(&[("Clc1ccc(CC2CCNCC2)cc1", 6.0), ("Brc1ccc(CC2CCNCC2)cc1", 6.0)]);
        let f = featurize(&r, FingerprintSpec::default());
        assert!(find_cliff_pairs(&r, &f, &CliffConfig::default()).pairs.is_empty());
    }

    #[test]
    fn exact_unit_gap_counts() {
        let r = recs(&[("Clc1ccc(CC2CCNCC2)cc1", 6.3), ("Brc1ccc(CC2CCNCC2)cc1", 5.3), ("CCO", 9.0)]);
        let f = featurize(&r, FingerprintSpec::default());
        let rep = find_cliff_pairs(&r, &f, &CliffConfig::default());
        assert_eq!(rep.pairs.len(), 1);
        assert_eq!((rep.pairs[0].i, rep.pairs[0].j), (0, 1));
        assert!(rep.pairs[0].criteria.scaffold);
        assert_eq!(rep.flags, vec![true, true, false]);
        assert_eq!(
            Criteria {
                substructure: true,
                scaffold: false,
                smiles: true
            }
            .to_string(),
            "substructure|smiles"
        );
    }
}
