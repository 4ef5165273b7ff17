//! Masked-sample generation: one masked image per level per molecule, plus a
//! JSON-lines manifest.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hsv::HsvRange;
use super::layout::layout_2d;
use super::mask::{
    apply_masks, mask_targets, masked_patches, realize_mask, sample_masks, MaskLevel, MaskVocabs, MaskingPolicy,
};
use super::raster::{MaskImage, RasterImage};
use super::render::{render, RenderConfig};
use super::DepictError;
use crate::chem::{fnv1a64, parse_smiles};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const IMAGE_DIR: &str = "images";

/// Molecules rendered per parallel batch; bounds memory held in images.
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepictConfig {
    pub render: RenderConfig,
    pub hsv: HsvRange,
    /// Masking ratio for atom and bond levels.
    pub gamma: f64,
    pub patch_size: u32,
    pub dilation: u32,
    /// Masked pixels a patch needs to join the masked set.
    pub min_patch_overlap: usize,
    /// Rotate each layout by a seeded multiple of 90° before rendering.
    pub rotate: bool,
    pub levels: Vec<MaskLevel>,
}

impl Default for DepictConfig {
    fn default() -> Self {
        DepictConfig {
            render: RenderConfig::default(),
            hsv: HsvRange::default(),
            gamma: 0.5,
            patch_size: 16,
            dilation: 2,
            min_patch_overlap: 1,
            rotate: false,
            levels: MaskLevel::ALL.to_vec(),
        }
    }
}

impl DepictConfig {
    pub fn policy(&self, seed: u64) -> MaskingPolicy {
        MaskingPolicy {
            gamma: self.gamma,
            patch_size: self.patch_size,
            dilation: self.dilation,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DepictError> {
        self.policy(0).validate(self.render.image_size)
    }
}

/// Labels of a sample: one per masked patch, or a single motif label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleLabels {
    Patches(Vec<u32>),
    Single(u32),
}

#[derive(Debug, Clone)]
pub struct MaskedSample {
    pub molecule_id: usize,
    pub smiles: String,
    pub level: MaskLevel,
    pub image: RasterImage,
    pub omega: Vec<usize>,
    pub labels: SampleLabels,
    pub seed: u64,
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub molecule_id: usize,
    pub smiles: String,
    pub task: String,
    /// Relative to the manifest's directory.
    pub image_path: String,
    pub patch_size: u32,
    pub omega: Vec<usize>,
    pub labels: SampleLabels,
    pub gamma: f64,
    pub seed: u64,
    pub dilation: u32,
}

impl ManifestRecord {
    pub fn level(&self) -> Option<MaskLevel> {
        MaskLevel::ALL.into_iter().find(|l| l.task() == self.task)
    }

    /// Label of every masked patch; a motif label repeats across its patches.
    pub fn patch_labels(&self) -> Vec<u32> {
        match &self.labels {
            SampleLabels::Patches(v) => v.clone(),
            SampleLabels::Single(l) => vec![*l; self.omega.len()],
        }
    }
}

/// Counts from one generation run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GenerationReport {
    pub molecules: usize,
    /// Molecules dropped for parse or layout failures.
    pub failed_molecules: usize,
    /// Samples emitted per level, in [`MaskLevel::ALL`] order.
    pub samples: [usize; 3],
    /// Levels skipped for lack of targets, per level.
    pub unmaskable: [usize; 3],
    /// Samples dropped because a mask came out empty or touched no patch.
    pub dropped: usize,
}

/// Seed of the generator for one (molecule, level) pair; `level = None`
/// seeds per-molecule choices such as the rotation.
pub fn sample_seed(seed: u64, molecule_id: usize, level: Option<MaskLevel>) -> u64 {
    fnv1a64(&[seed, molecule_id as u64, level.map_or(u64::MAX, MaskLevel::index)])
}

enum Outcome {
    Sample(Box<MaskedSample>),
    Unmaskable(MaskLevel),
    Dropped,
}

fn molecule_samples(
    molecule_id: usize,
    smiles: &str,
    vocabs: &MaskVocabs<'_>,
    cfg: &DepictConfig,
    seed: u64,
) -> Result<Vec<Outcome>, String> {
    let g = parse_smiles(smiles).map_err(|e| e.to_string())?;
    let mut layout = layout_2d(&g, seed).map_err(|e| e.to_string())?;
    if cfg.rotate {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, molecule_id, None));
        layout = layout.rotated_quarter_turns(rng.random_range(0..4u8));
    }
    let base = render(&g, &layout, None, &cfg.render).image;
    let mut out = Vec::new();
    for &level in &cfg.levels {
        let targets = mask_targets(&g, level, vocabs);
        if targets.is_empty() {
            out.push(Outcome::Unmaskable(level));
            continue;
        }
        let s = sample_seed(seed, molecule_id, Some(level));
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let chosen = sample_masks(targets.len(), level, cfg.gamma, &mut rng);
        let masks: Result<Vec<(MaskImage, u32)>, DepictError> = chosen
            .iter()
            .map(|&i| {
                let t = &targets[i];
                Ok((realize_mask(&g, &layout, t, &cfg.render, &cfg.hsv, cfg.dilation)?, t.label))
            })
            .collect();
        let masks = match masks {
            Ok(m) => m,
            Err(e) => {
                warn!("molecule {molecule_id} {level}: {e}");
                out.push(Outcome::Dropped);
                continue;
            }
        };
        let refs: Vec<&MaskImage> = masks.iter().map(|(m, _)| m).collect();
        let image = apply_masks(&base, &refs).map_err(|e| e.to_string())?;
        let pairs: Vec<(&MaskImage, u32)> = masks.iter().map(|(m, l)| (m, *l)).collect();
        let patches =
            masked_patches(&pairs, cfg.patch_size, cfg.min_patch_overlap).map_err(|e| e.to_string())?;
        if patches.omega.is_empty() {
            out.push(Outcome::Dropped);
            continue;
        }
        let labels = match level {
            MaskLevel::Motif => SampleLabels::Single(masks[0].1),
            _ => SampleLabels::Patches(patches.labels),
        };
        out.push(Outcome::Sample(Box::new(MaskedSample {
            molecule_id,
            smiles: smiles.to_string(),
            level,
            image,
            omega: patches.omega,
            labels,
            seed: s,
        })));
    }
    Ok(out)
}

/// Generates samples for every molecule and hands them to `sink` in corpus
/// order. Molecules are processed in parallel; failures are logged and
/// skipped.
pub fn generate_samples<F>(
    corpus: &[String],
    vocabs: &MaskVocabs<'_>,
    cfg: &DepictConfig,
    seed: u64,
    mut sink: F,
) -> Result<GenerationReport, DepictError>
where
    F: FnMut(MaskedSample) -> Result<(), DepictError>,
{
    cfg.validate()?;
    let mut report = GenerationReport {
        molecules: corpus.len(),
        ..Default::default()
    };
    for (b, chunk) in corpus.chunks(BATCH).enumerate() {
        let results: Vec<_> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, smi)| {
                let id = b * BATCH + k;
                (id, molecule_samples(id, smi, vocabs, cfg, seed))
            })
            .collect();
        for (id, res) in results {
            match res {
                Err(e) => {
                    warn!("molecule {id} skipped: {e}");
                    report.failed_molecules += 1;
                }
                Ok(outcomes) => {
                    for o in outcomes {
                        match o {
                            Outcome::Sample(s) => {
                                report.samples[s.level as usize] += 1;
                                sink(*s)?;
                            }
                            Outcome::Unmaskable(level) => {
                                debug!("molecule {id}: no {level} targets");
                                report.unmaskable[level as usize] += 1;
                            }
                            Outcome::Dropped => report.dropped += 1,
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

pub fn image_file_name(molecule_id: usize, level: MaskLevel) -> String {
    format!("{IMAGE_DIR}/{molecule_id:06}_{level}.png")
}

/// Runs [`generate_samples`], writing PNGs under `out_dir/images` and the
/// manifest to `out_dir/manifest.jsonl`.
pub fn write_samples(
    corpus: &[String],
    vocabs: &MaskVocabs<'_>,
    cfg: &DepictConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<GenerationReport, DepictError> {
    fs::create_dir_all(out_dir.join(IMAGE_DIR))?;
    let mut manifest = BufWriter::new(File::create(out_dir.join(MANIFEST_FILE))?);
    let report = generate_samples(corpus, vocabs, cfg, seed, |s| {
        let rel = image_file_name(s.molecule_id, s.level);
        s.image.save_png(&out_dir.join(&rel))?;
        let rec = ManifestRecord {
            molecule_id: s.molecule_id,
            smiles: s.smiles,
            task: s.level.task().to_string(),
            image_path: rel,
            patch_size: cfg.patch_size,
            omega: s.omega,
            labels: s.labels,
            gamma: cfg.gamma,
            seed: s.seed,
            dilation: cfg.dilation,
        };
        let line = serde_json::to_string(&rec).map_err(std::io::Error::other)?;
        writeln!(manifest, "{line}")?;
        Ok(())
    })?;
    manifest.flush()?;
    Ok(report)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>, DepictError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DepictError::Manifest {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Directory holding a manifest, against which its image paths resolve.
pub fn manifest_root(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{build_atom_vocab, canonical_smiles};
    use crate::fragment::{CleavageRuleTable, MotifEntry, MotifVocab};

    fn fixture() -> (crate::chem::AtomVocab, MotifVocab, CleavageRuleTable) {
        let g = parse_smiles("Cc1ccccc1").unwrap();
        let atoms = build_atom_vocab([&g], 10).unwrap();
        let motifs = MotifVocab::from_entries(vec![MotifEntry {
            smiles: canonical_smiles(&parse_smiles("c1ccccc1").unwrap()),
            count: 1,
        }])
        .unwrap();
        (atoms, motifs, CleavageRuleTable::brics_default())
    }

    #[test]
    fn config_toml_round_trip_and_unknown_keys() {
        let cfg = DepictConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<DepictConfig>(&text).unwrap(), cfg);
        assert!(toml::from_str::<DepictConfig>("gama = 0.5").is_err());
        let c: DepictConfig = toml::from_str("gamma = 0.25\n[render]\nimage_size = 112").unwrap();
        assert_eq!((c.gamma, c.render.image_size, c.patch_size), (0.25, 112, 16));
    }

    #[test]
    fn one_molecule_three_samples() {
        let (a, m, r) = fixture();
        let v = MaskVocabs {
            atoms: &a,
            motifs: &m,
            rules: &r,
        };
        let mut got = Vec::new();
        let rep = generate_samples(
            &["c1ccccc1C(=O)NC".to_string()],
            &v,
            &DepictConfig::default(),
            3,
            |s| {
                got.push(s);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(rep.samples, [1, 1, 1]);
        assert_eq!(got.iter().map(|s| s.level).collect::<Vec<_>>(), MaskLevel::ALL.to_vec());
        assert!(matches!(got[2].labels, SampleLabels::Single(0)));
        assert!(got.iter().all(|s| !s.omega.is_empty()));
    }

    #[test]
    fn bad_molecules_are_skipped() {
        let (a, m, r) = fixture();
        let v = MaskVocabs {
            atoms: &a,
            motifs: &m,
            rules: &r,
        };
        let corpus = ["C1CC".to_string(), "CCO".to_string(), "C.C".to_string()];
        let mut n = 0;
        let rep = generate_samples(&corpus, &v, &DepictConfig::default(), 0, |_| {
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(rep.failed_molecules, 2);
        assert_eq!(rep.unmaskable[MaskLevel::Motif as usize], 1);
        assert_eq!(n, 2);
    }
}
