use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::chem::{canonical_smiles, parse_smiles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    /// Nanomolar concentration, converted as `pK = 9 − log10(value)`.
    Nm,
    /// Already on the negative-log scale.
    P,
}

impl Unit {
    pub fn to_pk(self, value: f64) -> Option<f64> {
        match self {
            Unit::Nm if value > 0.0 && value.is_finite() => Some(9.0 - value.log10()),
            Unit::Nm => None,
            Unit::P => value.is_finite().then_some(value),
        }
    }
}

/// Which CSV columns hold what. With `value` unset, `y` (p-scale) is used
/// when present, else `exp_mean_nm` (nM).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnMap {
    pub smiles: String,
    pub value: Option<String>,
    pub unit: Option<Unit>,
    pub id: Option<String>,
    pub split: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            smiles: "smiles".into(),
            value: None,
            unit: None,
            id: None,
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotencyRecord {
    pub id: String,
    pub smiles: String,
    pub canonical: String,
    pub raw_value: f64,
    pub unit: Unit,
    pub pk: f64,
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based data row, header excluded.
    pub row: usize,
    pub smiles: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<PotencyRecord>,
    pub rejects: Vec<Reject>,
    /// Rows dropped as repeats of an earlier canonical SMILES.
    pub duplicates: usize,
}

impl IngestReport {
    pub fn write_rejects(&self, path: &Path) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rejects {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads potency rows, converting to pK. Bad rows are collected as rejects;
/// only a missing column fails the whole file.
pub fn ingest(path: &Path, map: &ColumnMap) -> Result<IngestReport, BenchError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchError::MissingColumn(name.to_string()))
    };
    let smiles_col = col(&map.smiles)?;
    let (value_col, unit) = match &map.value {
        Some(v) => (col(v)?, map.unit.unwrap_or(Unit::P)),
        None => match (col("y"), col("exp_mean_nm")) {
            (Ok(c), _) => (c, map.unit.unwrap_or(Unit::P)),
            (Err(_), Ok(c)) => (c, map.unit.unwrap_or(Unit::Nm)),
            (Err(e), Err(_)) => return Err(e),
        },
    };
    let id_col = map.id.as_deref().map(col).transpose()?;
    let split_col = map.split.as_deref().map(col).transpose()?;

    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let n = i + 1;
        let smiles = row.get(smiles_col).unwrap_or("").trim().to_string();
        let mut reject = |reason: BenchError| {
            report.rejects.push(Reject {
                row: n,
                smiles: smiles.clone(),
                reason: reason.to_string(),
            })
        };
        let Ok(g) = parse_smiles(&smiles) else {
            reject(BenchError::UnparsableSmiles(n));
            continue;
        };
        let raw: f64 = row.get(value_col).unwrap_or("").trim().parse().unwrap_or(f64::NAN);
        let Some(pk) = unit.to_pk(raw) else {
            reject(BenchError::NonPositivePotency(n));
            continue;
        };
        let canonical = canonical_smiles(&g);
        if !seen.insert(canonical.clone()) {
            report.duplicates += 1;
            continue;
        }
        report.records.push(PotencyRecord {
            id: id_col
                .and_then(|c| row.get(c))
                .map_or_else(|| format!("m{}", n - 1), str::to_string),
            smiles,
            canonical,
            raw_value: raw,
            unit,
            pk,
            split: split_col.and_then(|c| row.get(c)).map(str::to_string),
        });
    }
    Ok(report)
}

/// Records from `(smiles, pK)` pairs, deduplicated like [`ingest`]; ids are
/// `m{index}` over the input. Unparsable SMILES are dropped.
pub fn records_from_pk(data: &[(String, f64)]) -> Vec<PotencyRecord> {
    let mut seen = HashSet::new();
    data.iter()
        .enumerate()
        .filter_map(|(i, (smiles, pk))| {
            let canonical = canonical_smiles(&parse_smiles(smiles).ok()?);
            seen.insert(canonical.clone()).then(|| PotencyRecord {
                id: format!("m{i}"),
                smiles: smiles.clone(),
                canonical,
                raw_value: *pk,
                unit: Unit::P,
                pk: *pk,
                split: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv_file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn nanomolar_conversion() {
        assert!((Unit::Nm.to_pk(5370.0).unwrap() - 5.27).abs() < 0.005);
        assert_eq!(Unit::Nm.to_pk(1.0), Some(9.0));
        assert_eq!(Unit::Nm.to_pk(0.0), None);
        assert_eq!(Unit::Nm.to_pk(-3.0), None);
    }

    #[test]
    fn ingest_rejects_and_dedups() {
        let f = csv_file("smiles,exp_mean_nm\nCCO,1\nOCC,10\nC1CC,5\nCCN,0\nCCC,5370\n");
        let rep = ingest(f.path(), &ColumnMap::default()).unwrap();
        assert_eq!(rep.records.len(), 2);
        assert_eq!(rep.records[0].pk, 9.0);
        assert_eq!(rep.records[1].id, "m4");
        assert_eq!(rep.duplicates, 1);
        assert_eq!(rep.rejects.iter().map(|r| r.row).collect::<Vec<_>>(), vec![3, 4]);
        assert!(rep.rejects[1].reason.contains("positive"));
        let out = tempfile::NamedTempFile::new().unwrap();
        rep.write_rejects(out.path()).unwrap();
        assert_eq!(std::fs::read_to_string(out.path()).unwrap().lines().count(), 3);
    }

    #[test]
    fn column_map() {
        let f = csv_file("name,smi,pki,fold\na,CCO,6.5,train\nb,CCN,7,test\n");
        let map = ColumnMap {
            smiles: "smi".into(),
            value: Some("pki".into()),
            unit: None,
            id: Some("name".into()),
            split: Some("fold".into()),
        };
        let rep = ingest(f.path(), &map).unwrap();
        assert_eq!(rep.records[1].id, "b");
        assert_eq!(rep.records[1].pk, 7.0);
        assert_eq!(rep.records[0].split.as_deref(), Some("train"));
        assert!(matches!(
            ingest(f.path(), &ColumnMap::default()),
            Err(BenchError::MissingColumn(c)) if c == "smiles"
        ));
    }
}
