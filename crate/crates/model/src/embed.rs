use std::path::Path;

use crate::data::extend_input;
use crate::encoder::Model;
use crate::scalar::Real;
use crate::ModelError;

/// Classification-token features, one row per patchified image.
pub fn embed<T: Real>(model: &Model<T>, images: &[Vec<u8>], batch_size: usize) -> Result<Vec<Vec<f64>>, ModelError> {
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(batch_size.max(1)) {
        let mut input = Vec::new();
        for px in chunk {
            extend_input(px, &mut input);
        }
        let enc = model.forward(&input, chunk.len())?;
        out.extend((0..chunk.len()).map(|b| enc.cls(b).iter().map(|v| v.f64()).collect::<Vec<f64>>()));
    }
    Ok(out)
}

/// Writes `id,f1..fD` rows.
pub fn write_embeddings(path: &Path, ids: &[String], features: &[Vec<f64>]) -> Result<(), ModelError> {
    let dim = features.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((1..=dim).map(|k| format!("f{k}")));
    w.write_record(&header)?;
    for (id, f) in ids.iter().zip(features) {
        let mut row = vec![id.clone()];
        row.extend(f.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), ModelError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut ids = Vec::new();
    let mut feats = Vec::new();
    for row in r.records() {
        let row = row?;
        let mut it = row.iter();
        ids.push(it.next().unwrap_or_default().to_string());
        let f: Result<Vec<f64>, _> = it.map(str::parse::<f64>).collect();
        feats.push(f.map_err(|e| ModelError::ConfigInvalid(format!("embedding value: {e}")))?);
    }
    Ok((ids, feats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, HeadConfig};

    #[test]
    fn rows_and_round_trip() {
        let cfg = EncoderConfig::tiny();
        let m: Model<f64> = Model::new(cfg.clone(), HeadConfig::default()).unwrap();
        let a: Vec<u8> = (0..cfg.input_len()).map(|i| (i % 251) as u8).collect();
        let b: Vec<u8> = (0..cfg.input_len()).map(|i| (i % 13) as u8).collect();
        let rows = embed(&m, &[a.clone(), b, a], 2).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], rows[2]);
        assert_ne!(rows[0], rows[1]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.csv");
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        write_embeddings(&p, &ids, &rows).unwrap();
        let (ids2, rows2) = read_embeddings(&p).unwrap();
        assert_eq!(ids2, ids);
        assert_eq!(rows2, rows);
    }
}
