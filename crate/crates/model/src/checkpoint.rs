//! Checkpoint files: magic, format version, a JSON header, then the raw
//! little-endian parameter payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderConfig, HeadConfig, Model, TargetScale};
use crate::params::TensorSpec;
use crate::scalar::Real;
use crate::ModelError;

const MAGIC: &[u8; 4] = b"CMCK";
pub const FORMAT_VERSION: u32 = 1;

/// Training position stored alongside the weights.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainState {
    pub seed: u64,
    pub step: u64,
    pub epoch: u64,
    /// Word position of the shuffling generator, as a decimal string.
    pub rng_word_pos: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub dtype: String,
    pub encoder: EncoderConfig,
    pub heads: HeadConfig,
    pub target_scale: TargetScale,
    pub state: TrainState,
    pub tensors: Vec<TensorSpec>,
}

pub fn checkpoint_bytes<T: Real>(model: &Model<T>, state: &TrainState) -> Result<Vec<u8>, ModelError> {
    let header = CheckpointHeader {
        dtype: T::DTYPE.to_string(),
        encoder: model.encoder_config().clone(),
        heads: *model.head_config(),
        target_scale: model.target_scale,
        state: state.clone(),
        tensors: model.layout().tensors().to_vec(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + json.len() + model.params.len() * T::BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for &v in &model.params {
        v.put_le(&mut out);
    }
    Ok(out)
}

pub fn save_checkpoint<T: Real>(path: &Path, model: &Model<T>, state: &TrainState) -> Result<(), ModelError> {
    fs::write(path, checkpoint_bytes(model, state)?)?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

fn read_payload<U: Real, T: Real>(payload: &[u8]) -> Vec<T> {
    payload.chunks_exact(U::BYTES).map(|c| T::of(U::get_le(c).f64())).collect()
}

/// Parses a checkpoint; payloads of the other precision are converted.
pub fn parse_checkpoint<T: Real>(bytes: &[u8]) -> Result<(Model<T>, TrainState), ModelError> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let header_end = 16usize.checked_add(hlen).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..header_end])?;
    let payload = &bytes[header_end..];
    let params: Vec<T> = match header.dtype.as_str() {
        "f32" if payload.len().is_multiple_of(4) => read_payload::<f32, T>(payload),
        "f64" if payload.len().is_multiple_of(8) => read_payload::<f64, T>(payload),
        "f32" | "f64" => return Err(bad("payload length is not a whole number of values")),
        other => return Err(bad(format!("unknown dtype `{other}`"))),
    };
    let mut model = Model::from_params(header.encoder, header.heads, params)?;
    if model.layout().tensors() != header.tensors.as_slice() {
        return Err(bad("tensor table does not match the configuration"));
    }
    model.target_scale = header.target_scale;
    Ok((model, header.state))
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<(Model<T>, TrainState), ModelError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ModelError::MissingArtifact(path.display().to_string()),
        _ => ModelError::Io(e),
    })?;
    parse_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_cast() {
        let mut m: Model<f64> = Model::new(EncoderConfig::tiny(), HeadConfig::pretext(5, 4, 3)).unwrap();
        m.target_scale = TargetScale { mean: 6.5, std: 1.25 };
        let state = TrainState {
            seed: 3,
            step: 17,
            epoch: 2,
            rng_word_pos: "1234".into(),
        };
        let bytes = checkpoint_bytes(&m, &state).unwrap();
        let (back, st): (Model<f64>, _) = parse_checkpoint(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(st, state);
        let (single, _): (Model<f32>, _) = parse_checkpoint(&bytes).unwrap();
        assert_eq!(single.params.len(), m.params.len());
        assert_eq!(single.params[7], m.params[7] as f32);
    }

    #[test]
    fn rejects_corruption() {
        let m: Model<f32> = Model::new(EncoderConfig::tiny(), HeadConfig::pretext(5, 4, 3)).unwrap();
        let bytes = checkpoint_bytes(&m, &TrainState::default()).unwrap();
        assert!(parse_checkpoint::<f32>(&bytes[..bytes.len() - 4]).is_err());
        let mut wrong = bytes.clone();
        wrong[4] = 9;
        assert!(matches!(parse_checkpoint::<f32>(&wrong), Err(ModelError::Checkpoint(_))));
        assert!(parse_checkpoint::<f32>(b"nope").is_err());
    }
}
