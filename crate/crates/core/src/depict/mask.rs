//! Mask targets, subset sampling, whitening and patch bookkeeping.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hsv::{extract_green_mask, HsvRange};
use super::layout::Layout;
use super::raster::{MaskImage, RasterImage, WHITE};
use super::render::{render, Highlight, RenderConfig};
use super::DepictError;
use crate::chem::{AtomVocab, MoleculeGraph};
use crate::fragment::{labeled_fragments, CleavageRuleTable, MotifVocab};

/// Granularity of a masking target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskLevel {
    Atom,
    Bond,
    Motif,
}

impl MaskLevel {
    pub const ALL: [MaskLevel; 3] = [MaskLevel::Atom, MaskLevel::Bond, MaskLevel::Motif];

    /// Pre-training task name for samples at this level.
    pub fn task(self) -> &'static str {
        match self {
            MaskLevel::Atom => "AMPP",
            MaskLevel::Bond => "BMPP",
            MaskLevel::Motif => "MMPP",
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for MaskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskLevel::Atom => "atom",
            MaskLevel::Bond => "bond",
            MaskLevel::Motif => "motif",
        })
    }
}

/// Vocabularies that decide which targets exist and how they are labeled.
#[derive(Debug, Clone, Copy)]
pub struct MaskVocabs<'a> {
    pub atoms: &'a AtomVocab,
    pub motifs: &'a MotifVocab,
    pub rules: &'a CleavageRuleTable,
}

/// A structure to highlight together with its class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskTarget {
    pub highlight: Highlight,
    pub label: u32,
}

/// Maskable targets at `level`, in atom, bond or occurrence order. Atoms
/// outside the atom vocabulary and out-of-vocabulary motifs are skipped.
pub fn mask_targets(g: &MoleculeGraph, level: MaskLevel, vocabs: &MaskVocabs<'_>) -> Vec<MaskTarget> {
    match level {
        MaskLevel::Atom => (0..g.atom_count())
            .filter_map(|a| {
                vocabs.atoms.label(g.atom(a).element).map(|label| MaskTarget {
                    highlight: Highlight::Atom(a),
                    label,
                })
            })
            .collect(),
        MaskLevel::Bond => g
            .bonds()
            .iter()
            .enumerate()
            .map(|(b, bond)| MaskTarget {
                highlight: Highlight::Bond(b),
                label: bond.order.label(),
            })
            .collect(),
        MaskLevel::Motif => labeled_fragments(g, vocabs.rules, vocabs.motifs)
            .into_iter()
            .filter_map(|occ| {
                occ.label.map(|label| MaskTarget {
                    highlight: Highlight::Region {
                        atoms: occ.atoms,
                        bonds: occ.bonds,
                    },
                    label,
                })
            })
            .collect(),
    }
}

/// Renders the target in green and recovers its mask by color detection.
pub fn realize_mask(
    g: &MoleculeGraph,
    layout: &Layout,
    target: &MaskTarget,
    render_cfg: &RenderConfig,
    hsv: &HsvRange,
    dilation: u32,
) -> Result<MaskImage, DepictError> {
    let r = render(g, layout, Some(&target.highlight), render_cfg);
    extract_green_mask(&r.image, hsv, dilation)
}

/// Every target at `level` with its extracted mask.
pub fn mask_set(
    g: &MoleculeGraph,
    layout: &Layout,
    level: MaskLevel,
    vocabs: &MaskVocabs<'_>,
    render_cfg: &RenderConfig,
    hsv: &HsvRange,
    dilation: u32,
) -> Result<Vec<(MaskImage, u32)>, DepictError> {
    let targets = mask_targets(g, level, vocabs);
    if targets.is_empty() {
        return Err(DepictError::NoMaskableTargets(level));
    }
    targets
        .iter()
        .map(|t| Ok((realize_mask(g, layout, t, render_cfg, hsv, dilation)?, t.label)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingPolicy {
    /// Fraction of atom or bond targets masked per image, in (0, 1].
    pub gamma: f64,
    pub patch_size: u32,
    /// Disc dilation radius applied to detected masks, in pixels.
    pub dilation: u32,
    pub seed: u64,
}

impl Default for MaskingPolicy {
    fn default() -> Self {
        MaskingPolicy {
            gamma: 0.5,
            patch_size: 16,
            dilation: 2,
            seed: 0,
        }
    }
}

impl MaskingPolicy {
    pub fn validate(&self, image_size: u32) -> Result<(), DepictError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(DepictError::InvalidGamma(self.gamma));
        }
        if self.patch_size == 0 || !image_size.is_multiple_of(self.patch_size) {
            return Err(DepictError::PatchSize {
                patch: self.patch_size,
                image: image_size,
            });
        }
        Ok(())
    }
}

/// `max(1, round(γ·n))` with halves rounded up, capped at `n`.
pub fn mask_count(n: usize, gamma: f64) -> usize {
    if n == 0 {
        return 0;
    }
    // The epsilon keeps exact halves such as 0.5·7 from rounding down after
    // floating-point error.
    let m = (gamma * n as f64 + 0.5 + 1e-9).floor() as usize;
    m.clamp(1, n)
}

/// Uniform sample without replacement of target indices, ascending. The
/// motif level always draws exactly one.
pub fn sample_masks<R: Rng + ?Sized>(n: usize, level: MaskLevel, gamma: f64, rng: &mut R) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let m = match level {
        MaskLevel::Motif => 1,
        _ => mask_count(n, gamma),
    };
    let mut idx = rand::seq::index::sample(rng, n, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Pixelwise union of equally sized masks.
pub fn mask_union(masks: &[&MaskImage], width: u32, height: u32) -> Result<MaskImage, DepictError> {
    let mut u = MaskImage::empty(width, height);
    for m in masks {
        u.union_with(m)?;
    }
    Ok(u)
}

/// Whitens every pixel under the union of `masks`.
pub fn apply_masks(x: &RasterImage, masks: &[&MaskImage]) -> Result<RasterImage, DepictError> {
    let union = mask_union(masks, x.width(), x.height())?;
    let mut out = x.clone();
    for y in 0..x.height() {
        for xx in 0..x.width() {
            if union.get(xx, y) {
                out.set_pixel(xx, y, WHITE);
            }
        }
    }
    Ok(out)
}

/// Masked patch indices (row-major) and the label of each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatchLabels {
    pub omega: Vec<usize>,
    pub labels: Vec<u32>,
}

/// Patches holding at least `min_overlap` pixels of the mask union. Each gets
/// the label of the mask covering most of its pixels, ties going to the
/// earlier mask.
pub fn masked_patches(
    masks: &[(&MaskImage, u32)],
    patch_size: u32,
    min_overlap: usize,
) -> Result<PatchLabels, DepictError> {
    let Some((first, _)) = masks.first() else {
        return Ok(PatchLabels::default());
    };
    let (w, h) = (first.width(), first.height());
    if patch_size == 0 || w % patch_size != 0 || h % patch_size != 0 {
        return Err(DepictError::PatchSize {
            patch: patch_size,
            image: w,
        });
    }
    let refs: Vec<&MaskImage> = masks.iter().map(|(m, _)| *m).collect();
    let union = mask_union(&refs, w, h)?;
    let (gw, gh) = (w / patch_size, h / patch_size);
    let min_overlap = min_overlap.max(1);
    let mut out = PatchLabels::default();
    for py in 0..gh {
        for px in 0..gw {
            let mut total = 0usize;
            let mut per_mask = vec![0usize; masks.len()];
            for y in py * patch_size..(py + 1) * patch_size {
                for x in px * patch_size..(px + 1) * patch_size {
                    if !union.get(x, y) {
                        continue;
                    }
                    total += 1;
                    for (k, (m, _)) in masks.iter().enumerate() {
                        per_mask[k] += usize::from(m.get(x, y));
                    }
                }
            }
            if total < min_overlap {
                continue;
            }
            let best = (0..masks.len())
                .max_by_key(|&k| (per_mask[k], std::cmp::Reverse(k)))
                .unwrap();
            out.omega.push((py * gw + px) as usize);
            out.labels.push(masks[best].1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{build_atom_vocab, parse_smiles, BondOrder, Element};
    use crate::depict::layout_2d;
    use crate::fragment::MotifEntry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mask_count_arithmetic() {
        assert_eq!(mask_count(10, 0.5), 5);
        assert_eq!(mask_count(7, 0.5), 4);
        assert_eq!(mask_count(1, 0.5), 1);
        assert_eq!(mask_count(1, 0.01), 1);
        assert_eq!(mask_count(3, 1.0), 3);
        assert_eq!(mask_count(5, 0.3), 2);
        assert_eq!(mask_count(0, 0.5), 0);
    }

    #[test]
    fn motif_level_draws_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..20 {
            assert_eq!(sample_masks(n, MaskLevel::Motif, 1.0, &mut rng).len(), 1);
            let s = sample_masks(n, MaskLevel::Atom, 0.5, &mut rng);
            assert_eq!(s.len(), mask_count(n, 0.5));
            assert!(s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&i| i < n));
        }
    }

    fn vocabs_for(smiles: &[&str], motifs: &[&str]) -> (AtomVocab, MotifVocab, CleavageRuleTable) {
        let graphs: Vec<_> = smiles.iter().map(|s| parse_smiles(s).unwrap()).collect();
        let atoms = build_atom_vocab(graphs.iter(), 10).unwrap();
        let entries = motifs
            .iter()
            .enumerate()
            .map(|(i, s)| MotifEntry {
                smiles: crate::chem::canonical_smiles(&parse_smiles(s).unwrap()),
                count: 10 - i as u64,
            })
            .collect();
        let motifs = MotifVocab::from_entries(entries).unwrap();
        (atoms, motifs, CleavageRuleTable::brics_default())
    }

    #[test]
    fn benzene_bonds_are_aromatic() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let (a, m, r) = vocabs_for(&["c1ccccc1"], &["c1ccccc1"]);
        let v = MaskVocabs {
            atoms: &a,
            motifs: &m,
            rules: &r,
        };
        let l = layout_2d(&g, 0).unwrap();
        let set = mask_set(&g, &l, MaskLevel::Bond, &v, &RenderConfig::default(), &HsvRange::default(), 2).unwrap();
        assert_eq!(set.len(), 6);
        assert!(set.iter().all(|(m, lab)| *lab == BondOrder::Aromatic.label() && !m.is_empty()));
    }

    #[test]
    fn methane_atom_level() {
        let g = parse_smiles("C").unwrap();
        let (a, m, r) = vocabs_for(&["C", "O"], &["c1ccccc1"]);
        let v = MaskVocabs {
            atoms: &a,
            motifs: &m,
            rules: &r,
        };
        let l = layout_2d(&g, 0).unwrap();
        let set = mask_set(&g, &l, MaskLevel::Atom, &v, &RenderConfig::default(), &HsvRange::default(), 2).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set[0].1, a.label(Element::C).unwrap());
        assert!(matches!(
            mask_set(&g, &l, MaskLevel::Motif, &v, &RenderConfig::default(), &HsvRange::default(), 2),
            Err(DepictError::NoMaskableTargets(MaskLevel::Motif))
        ));
    }

    #[test]
    fn atoms_outside_vocab_are_skipped() {
        let g = parse_smiles("CCBr").unwrap();
        let (a, m, r) = vocabs_for(&["CC"], &["c1ccccc1"]);
        let v = MaskVocabs {
            atoms: &a,
            motifs: &m,
            rules: &r,
        };
        let t = mask_targets(&g, MaskLevel::Atom, &v);
        assert_eq!(
            t.iter().map(|t| t.highlight.clone()).collect::<Vec<_>>(),
            vec![Highlight::Atom(0), Highlight::Atom(1)]
        );
    }

    #[test]
    fn apply_masks_fixtures() {
        let mut x = RasterImage::white(4, 4);
        x.set_pixel(1, 1, [0, 0, 0]);
        x.set_pixel(2, 3, [9, 9, 9]);
        assert_eq!(apply_masks(&x, &[]).unwrap(), x);
        let e = MaskImage::empty(4, 4);
        assert_eq!(apply_masks(&x, &[&e]).unwrap(), x);
        assert!(apply_masks(&x, &[&MaskImage::full(4, 4)]).unwrap().is_all_white());
        let mut m = MaskImage::empty(4, 4);
        m.set(1, 1, true);
        let y = apply_masks(&x, &[&m]).unwrap();
        assert_eq!(y.pixel(1, 1), WHITE);
        assert_eq!(y.pixel(2, 3), [9, 9, 9]);
        assert!(matches!(
            apply_masks(&x, &[&MaskImage::empty(3, 4)]),
            Err(DepictError::DimensionMismatch)
        ));
    }

    #[test]
    fn patch_fixtures() {
        let mut m = MaskImage::empty(32, 32);
        m.set(0, 0, true);
        let p = masked_patches(&[(&m, 7)], 16, 1).unwrap();
        assert_eq!(p.omega, vec![0]);
        assert_eq!(p.labels, vec![7]);
        let e = MaskImage::empty(32, 32);
        assert!(masked_patches(&[(&e, 1)], 16, 1).unwrap().omega.is_empty());
        // A horizontal bar across patches 0 and 1.
        let mut bar = MaskImage::empty(32, 32);
        for x in 10..22 {
            bar.set(x, 3, true);
        }
        let p = masked_patches(&[(&bar, 2)], 16, 1).unwrap();
        assert_eq!(p.omega, vec![0, 1]);
        assert_eq!(p.labels, vec![2, 2]);
        // Equal contributions tie to the first mask.
        let mut a = MaskImage::empty(32, 32);
        let mut b = MaskImage::empty(32, 32);
        a.set(20, 20, true);
        b.set(21, 20, true);
        let p = masked_patches(&[(&a, 5), (&b, 6)], 16, 1).unwrap();
        assert_eq!((p.omega, p.labels), (vec![3], vec![5]));
        b.set(22, 20, true);
        let p = masked_patches(&[(&a, 5), (&b, 6)], 16, 1).unwrap();
        assert_eq!(p.labels, vec![6]);
        assert!(masked_patches(&[(&a, 5)], 10, 1).is_err());
    }
}
