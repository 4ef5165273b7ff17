//! Substructure attribution by whitening: `f(x) − f(x_sub)`.

use cliffmask_core::chem::MoleculeGraph;
use cliffmask_core::depict::{
    apply_masks, realize_mask, render, HsvRange, Highlight, Layout, MaskImage, MaskTarget, RasterImage, RenderConfig,
};
use serde::Serialize;

use crate::data::image_input;
use crate::encoder::Model;
use crate::scalar::Real;
use crate::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Attribution {
    /// Prediction on the full depiction.
    pub full: f64,
    /// Prediction with the substructure whitened.
    pub masked: f64,
    pub attribution: f64,
}

/// Attribution of the pixels under `mask`.
pub fn attribute_image<T: Real>(model: &Model<T>, image: &RasterImage, mask: &MaskImage) -> Result<Attribution, ModelError> {
    let cfg = model.encoder_config();
    let masked = apply_masks(image, &[mask])?;
    let mut input = image_input::<T>(image, cfg)?;
    input.extend(image_input::<T>(&masked, cfg)?);
    let pred = model.predict(&input, 2)?;
    Ok(Attribution {
        full: pred[0],
        masked: pred[1],
        attribution: pred[0] - pred[1],
    })
}

/// Renders the molecule, masks the substructure with the same geometry as
/// motif masks, and attributes the difference.
#[allow(clippy::too_many_arguments)]
pub fn sme_attribution<T: Real>(
    model: &Model<T>,
    g: &MoleculeGraph,
    layout: &Layout,
    atoms: &[usize],
    bonds: &[usize],
    render_cfg: &RenderConfig,
    hsv: &HsvRange,
    dilation: u32,
) -> Result<Attribution, ModelError> {
    if atoms.is_empty() && bonds.is_empty() {
        return Err(ModelError::EmptySubstructure);
    }
    if let Some(&a) = atoms.iter().find(|&&a| a >= g.atom_count()) {
        return Err(ModelError::ConfigInvalid(format!("atom {a} out of range")));
    }
    if let Some(&b) = bonds.iter().find(|&&b| b >= g.bond_count()) {
        return Err(ModelError::ConfigInvalid(format!("bond {b} out of range")));
    }
    let target = MaskTarget {
        highlight: Highlight::Region {
            atoms: atoms.to_vec(),
            bonds: bonds.to_vec(),
        },
        label: 0,
    };
    let mask = realize_mask(g, layout, &target, render_cfg, hsv, dilation)?;
    let image = render(g, layout, None, render_cfg).image;
    attribute_image(model, &image, &mask)
}
