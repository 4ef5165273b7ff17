use std::collections::{BTreeMap, HashMap};
use std::path::Path;

pub const DEFAULT_MOTIF_VOCAB_SIZE: usize = 200;
pub const DEFAULT_MIN_ATOMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MotifEntry {
    pub smiles: String,
    pub count: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum MotifVocabError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("motif vocabulary file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Motif table; an entry's position is its label id. Counts never increase
/// with the label id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MotifVocab {
    entries: Vec<MotifEntry>,
    index: HashMap<String, u32>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CsvRow {
    label_id: u32,
    canonical_smiles: String,
    count: u64,
}

impl MotifVocab {
    pub(crate) fn from_counts(counts: BTreeMap<String, u64>, k: usize) -> Self {
        let mut ranked: Vec<MotifEntry> = counts
            .into_iter()
            .map(|(smiles, count)| MotifEntry { smiles, count })
            .collect();
        ranked.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.smiles.cmp(&y.smiles)));
        ranked.truncate(k);
        Self::from_entries_unchecked(ranked)
    }

    fn from_entries_unchecked(entries: Vec<MotifEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.smiles.clone(), i as u32))
            .collect();
        MotifVocab { entries, index }
    }

    /// Validates uniqueness and count ordering.
    pub fn from_entries(entries: Vec<MotifEntry>) -> Result<Self, MotifVocabError> {
        if entries.windows(2).any(|w| w[0].count < w[1].count) {
            return Err(MotifVocabError::Format("counts increase with label id".into()));
        }
        let v = Self::from_entries_unchecked(entries);
        if v.index.len() != v.entries.len() {
            return Err(MotifVocabError::Format("duplicate motif".into()));
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MotifEntry] {
        &self.entries
    }

    pub fn label(&self, smiles: &str) -> Option<u32> {
        self.index.get(smiles).copied()
    }

    /// The `k` most frequent motifs; labels are preserved.
    pub fn truncated(&self, k: usize) -> MotifVocab {
        Self::from_entries_unchecked(self.entries.iter().take(k).cloned().collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MotifVocabError> {
        let mut w = csv::Writer::from_path(path)?;
        for (i, e) in self.entries.iter().enumerate() {
            w.serialize(CsvRow {
                label_id: i as u32,
                canonical_smiles: e.smiles.clone(),
                count: e.count,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, MotifVocabError> {
        let mut r = csv::Reader::from_path(path)?;
        let mut entries = Vec::new();
        for (i, row) in r.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            if row.label_id as usize != i {
                return Err(MotifVocabError::Format(format!(
                    "label ids must be dense; row {i} has id {}",
                    row.label_id
                )));
            }
            entries.push(MotifEntry {
                smiles: row.canonical_smiles,
                count: row.count,
            });
        }
        Self::from_entries(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut counts = BTreeMap::new();
        counts.insert("c1ccccc1".to_string(), 10);
        counts.insert("C1CCNCC1".to_string(), 4);
        counts.insert("CC=O".to_string(), 4);
        let v = MotifVocab::from_counts(counts, 200);
        assert_eq!(v.label("c1ccccc1"), Some(0));
        assert_eq!(v.label("C1CCNCC1"), Some(1));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("motifs.csv");
        v.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("label_id,canonical_smiles,count\n0,c1ccccc1,10\n"));
        assert_eq!(MotifVocab::read_csv(&path).unwrap(), v);
    }

    #[test]
    fn rejects_bad_tables() {
        let bad = vec![
            MotifEntry { smiles: "C".into(), count: 1 },
            MotifEntry { smiles: "N".into(), count: 2 },
        ];
        assert!(MotifVocab::from_entries(bad).is_err());
        let dup = vec![
            MotifEntry { smiles: "C".into(), count: 2 },
            MotifEntry { smiles: "C".into(), count: 1 },
        ];
        assert!(MotifVocab::from_entries(dup).is_err());
    }
}
