//! Molecule depiction and knowledge-guided pixel masking.

mod font;
mod hsv;
mod layout;
mod mask;
mod raster;
mod render;
mod samples;

pub use hsv::{extract_green_mask, green_pixels, rgb_to_hsv, HsvRange};
pub use layout::{layout_2d, Layout, LayoutError, Point, MIN_ATOM_DISTANCE, REPAIR_STEPS};
pub use mask::{
    apply_masks, mask_count, mask_set, mask_targets, mask_union, masked_patches, realize_mask, sample_masks, MaskLevel,
    MaskTarget, MaskVocabs, MaskingPolicy, PatchLabels,
};
pub use raster::{MaskImage, RasterImage, GREEN, WHITE};
pub use samples::{
    generate_samples, image_file_name, manifest_root, read_manifest, sample_seed, write_samples, DepictConfig,
    GenerationReport, ManifestRecord, MaskedSample, SampleLabels, IMAGE_DIR, MANIFEST_FILE,
};
pub use render::{atom_disc_radius, bond_length_px, is_labeled, render, Highlight, RenderConfig, Rendered, HIGHLIGHT_INK_SHADE};

#[derive(Debug, thiserror::Error)]
pub enum DepictError {
    #[error("no pixel matched the highlight color range")]
    EmptyMask,
    #[error("image dimensions differ")]
    DimensionMismatch,
    #[error("molecule has no maskable {0} targets")]
    NoMaskableTargets(MaskLevel),
    #[error("masking ratio {0} outside (0, 1]")]
    InvalidGamma(f64),
    #[error("patch size {patch} does not divide image size {image}")]
    PatchSize { patch: u32, image: u32 },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
