use std::path::Path;

use cliffmask_core::depict::{manifest_root, read_manifest, MaskLevel, RasterImage, SampleLabels};

use crate::encoder::{EncoderConfig, Head, CHANNELS};
use crate::scalar::Real;
use crate::ModelError;

pub fn head_for(level: MaskLevel) -> Head {
    match level {
        MaskLevel::Atom => Head::Atom,
        MaskLevel::Bond => Head::Bond,
        MaskLevel::Motif => Head::Motif,
    }
}

/// Reorders an RGB image into patch-major bytes: patches in row-major grid
/// order, each holding its pixels row by row.
pub fn patchify(img: &RasterImage, patch: usize) -> Result<Vec<u8>, ModelError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w != h || patch == 0 || w % patch != 0 {
        return Err(ModelError::ConfigInvalid(format!(
            "{w}x{h} image does not tile into {patch} px patches"
        )));
    }
    let grid = w / patch;
    let src = img.as_bytes();
    let mut out = Vec::with_capacity(src.len());
    for py in 0..grid {
        for px in 0..grid {
            for y in py * patch..(py + 1) * patch {
                let start = (y * w + px * patch) * CHANNELS;
                out.extend_from_slice(&src[start..start + patch * CHANNELS]);
            }
        }
    }
    Ok(out)
}

/// Appends encoder input values for patchified bytes: ink darkness in
/// [0, 1], so white is zero.
pub fn extend_input<T: Real>(pixels: &[u8], out: &mut Vec<T>) {
    out.extend(pixels.iter().map(|&v| T::of(1.0 - v as f64 / 255.0)));
}

pub fn image_input<T: Real>(img: &RasterImage, cfg: &EncoderConfig) -> Result<Vec<T>, ModelError> {
    if img.width() as usize != cfg.image_size {
        return Err(ModelError::ShapeMismatch {
            expected: cfg.image_size,
            got: img.width() as usize,
        });
    }
    let mut out = Vec::with_capacity(cfg.input_len());
    extend_input(&patchify(img, cfg.patch_size)?, &mut out);
    Ok(out)
}

/// One masked image with its pretext target.
#[derive(Debug, Clone, PartialEq)]
pub struct PretextExample {
    pub molecule_id: usize,
    pub level: MaskLevel,
    pub pixels: Vec<u8>,
    /// Masked patch indices; empty for motif samples.
    pub omega: Vec<usize>,
    /// One label per masked patch, or the single motif label.
    pub labels: Vec<u32>,
}

impl PretextExample {
    pub fn from_image(
        molecule_id: usize,
        level: MaskLevel,
        img: &RasterImage,
        omega: Vec<usize>,
        labels: &SampleLabels,
        cfg: &EncoderConfig,
    ) -> Result<Self, ModelError> {
        if img.width() as usize != cfg.image_size || img.height() as usize != cfg.image_size {
            return Err(ModelError::ShapeMismatch {
                expected: cfg.image_size,
                got: img.width() as usize,
            });
        }
        let (omega, labels) = match (level, labels) {
            (MaskLevel::Motif, SampleLabels::Single(l)) => (Vec::new(), vec![*l]),
            (MaskLevel::Atom | MaskLevel::Bond, SampleLabels::Patches(v)) if v.len() == omega.len() => {
                (omega, v.clone())
            }
            _ => {
                return Err(ModelError::ConfigInvalid(format!(
                    "molecule {molecule_id}: labels do not fit a {level} sample"
                )))
            }
        };
        if level != MaskLevel::Motif && omega.is_empty() {
            return Err(ModelError::EmptyOmega);
        }
        if let Some(&bad) = omega.iter().find(|&&p| p >= cfg.patches()) {
            return Err(ModelError::ShapeMismatch {
                expected: cfg.patches(),
                got: bad,
            });
        }
        Ok(PretextExample {
            molecule_id,
            level,
            pixels: patchify(img, cfg.patch_size)?,
            omega,
            labels,
        })
    }
}

/// Loads every manifest sample, decoding images into patch order.
pub fn load_pretext(manifest: &Path, cfg: &EncoderConfig) -> Result<Vec<PretextExample>, ModelError> {
    let root = manifest_root(manifest);
    let records = read_manifest(manifest)?;
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let level = r
            .level()
            .ok_or_else(|| ModelError::ConfigInvalid(format!("unknown task `{}`", r.task)))?;
        if r.patch_size as usize != cfg.patch_size {
            return Err(ModelError::ConfigInvalid(format!(
                "manifest patch size {} differs from encoder patch size {}",
                r.patch_size, cfg.patch_size
            )));
        }
        let img = RasterImage::load_png(&root.join(&r.image_path))?;
        out.push(PretextExample::from_image(
            r.molecule_id,
            level,
            &img,
            r.omega,
            &r.labels,
            cfg,
        )?);
    }
    Ok(out)
}
