//! Seeded synthetic corpora for desk-scale experiments.
//!
//! Molecules are assembled as graphs from a fixed table of ring systems,
//! linkers and substituents, then canonicalized. The building-block weights
//! skew the corpus towards benzene and saturated N-heterocycles so that motif
//! frequencies have the long-tailed shape of medicinal-chemistry libraries.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chem::{canonical_smiles, parse_smiles, Atom, Bond, BondOrder, Element, MoleculeGraph};

/// (SMILES, weight)
const RINGS: &[(&str, u32)] = &[
    ("c1ccccc1", 30),
    ("c1ccncc1", 8),
    ("c1cncnc1", 4),
    ("c1ccsc1", 4),
    ("c1ccoc1", 3),
    ("c1cc[nH]c1", 2),
    ("c1c[nH]cn1", 3),
    ("c1cn[nH]c1", 3),
    ("c1cscn1", 3),
    ("c1cocn1", 2),
    ("C1CCNCC1", 8),
    ("C1CNCCN1", 6),
    ("C1COCCN1", 5),
    ("C1CCCCC1", 5),
    ("C1CCCC1", 3),
    ("C1CC1", 3),
    ("C1CCOC1", 2),
    ("C1CCNC1", 4),
    ("c1ccc2ccccc2c1", 3),
    ("c1ccc2[nH]ccc2c1", 3),
    ("c1ccc2ncccc2c1", 3),
    ("c1ccc2[nH]cnc2c1", 2),
    ("O=C1CCCN1", 2),
    ("c1ccc2c(c1)OCO2", 2),
];

/// (SMILES, head atom, tail atom, weight); an empty SMILES is a direct bond.
const LINKERS: &[(&str, usize, usize, u32)] = &[
    ("", 0, 0, 8),
    ("C", 0, 0, 6),
    ("CC", 0, 1, 3),
    ("C(=O)N", 0, 2, 6),
    ("NC(=O)", 1, 0, 4),
    ("O", 0, 0, 4),
    ("OC", 0, 1, 3),
    ("N", 0, 0, 3),
    ("S(=O)(=O)N", 0, 3, 2),
    ("C(=O)", 0, 0, 3),
    ("C=C", 0, 1, 1),
    ("CCN", 0, 2, 2),
];

/// (SMILES, weight); attachment is always atom 0.
const SUBSTITUENTS: &[(&str, u32)] = &[
    ("C", 10),
    ("F", 8),
    ("Cl", 6),
    ("Br", 2),
    ("OC", 6),
    ("O", 4),
    ("N", 3),
    ("CC", 4),
    ("C(F)(F)F", 4),
    ("C#N", 3),
    ("C(=O)O", 3),
    ("C(N)=O", 3),
    ("N(C)C", 3),
    ("C(C)C", 2),
    ("S(C)(=O)=O", 2),
    ("NC(C)=O", 2),
    ("OCC", 2),
    ("C(C)=O", 2),
];

struct Builder {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            atoms: Vec::new(),
            bonds: Vec::new(),
        }
    }

    /// Appends a block; returns the index offset of its atoms.
    fn add(&mut self, g: &MoleculeGraph) -> usize {
        let off = self.atoms.len();
        self.atoms.extend(g.atoms().iter().cloned());
        self.bonds.extend(g.bonds().iter().map(|b| Bond {
            a: b.a + off,
            b: b.b + off,
            order: b.order,
        }));
        off
    }

    fn join(&mut self, a: usize, b: usize) {
        self.atoms[a].h_count -= 1;
        self.atoms[b].h_count -= 1;
        self.bonds.push(Bond {
            a,
            b,
            order: BondOrder::Single,
        });
    }

    /// Atoms in `from..` that can accept a substituent: carbons, and
    /// non-aromatic nitrogens, carrying at least one hydrogen.
    fn sites(&self, from: usize) -> Vec<usize> {
        (from..self.atoms.len())
            .filter(|&i| {
                let a = &self.atoms[i];
                a.h_count > 0
                    && a.formal_charge == 0
                    && (a.element == Element::C || (a.element == Element::N && !a.aromatic))
            })
            .collect()
    }

    fn heavy_atoms(&self) -> usize {
        self.atoms.len()
    }

    fn finish(self) -> MoleculeGraph {
        MoleculeGraph::new(self.atoms, self.bonds).expect("assembled from valid blocks")
    }
}

struct Blocks {
    rings: Vec<(MoleculeGraph, u32)>,
    linkers: Vec<(Option<MoleculeGraph>, usize, usize, u32)>,
    substituents: Vec<(MoleculeGraph, u32)>,
}

impl Blocks {
    fn load() -> Self {
        let p = |s: &str| parse_smiles(s).expect("building block parses");
        Blocks {
            rings: RINGS.iter().map(|&(s, w)| (p(s), w)).collect(),
            linkers: LINKERS
                .iter()
                .map(|&(s, h, t, w)| ((!s.is_empty()).then(|| p(s)), h, t, w))
                .collect(),
            substituents: SUBSTITUENTS.iter().map(|&(s, w)| (p(s), w)).collect(),
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T], weight: impl Fn(&T) -> u32) -> &'a T {
    items
        .choose_weighted(rng, |x| weight(x))
        .expect("non-empty table with positive weights")
}

/// Attaches one ring (through a random linker) to a random site.
fn grow_ring(b: &mut Builder, blocks: &Blocks, rng: &mut ChaCha8Rng) -> bool {
    let sites = b.sites(0);
    let Some(&anchor) = sites.choose(rng) else {
        return false;
    };
    let (linker, head, tail, _) = pick(rng, &blocks.linkers, |l| l.3);
    let attach_from = match linker {
        None => anchor,
        Some(l) => {
            let off = b.add(l);
            b.join(anchor, off + head);
            off + tail
        }
    };
    if b.atoms[attach_from].h_count == 0 {
        return false;
    }
    let (ring, _) = pick(rng, &blocks.rings, |r| r.1);
    let off = b.add(ring);
    let ring_sites = b.sites(off);
    let Some(&r) = ring_sites.choose(rng) else {
        return false;
    };
    b.join(attach_from, r);
    true
}

fn add_substituent(b: &mut Builder, blocks: &Blocks, rng: &mut ChaCha8Rng) -> bool {
    let sites = b.sites(0);
    let Some(&anchor) = sites.choose(rng) else {
        return false;
    };
    let (sub, _) = pick(rng, &blocks.substituents, |s| s.1);
    let off = b.add(sub);
    if b.atoms[off].h_count == 0 {
        return false;
    }
    b.join(anchor, off);
    true
}

fn random_molecule(blocks: &Blocks, rng: &mut ChaCha8Rng) -> Option<MoleculeGraph> {
    let mut b = Builder::new();
    let (core, _) = pick(rng, &blocks.rings, |r| r.1);
    b.add(core);
    let extra_rings = *[0usize, 1, 1, 2, 2, 3].choose(rng).expect("non-empty");
    for _ in 0..extra_rings {
        if !grow_ring(&mut b, blocks, rng) {
            return None;
        }
    }
    let subs = rng.random_range(0..=3);
    for _ in 0..subs {
        if !add_substituent(&mut b, blocks, rng) {
            return None;
        }
    }
    (6..=40).contains(&b.heavy_atoms()).then(|| b.finish())
}

/// `n` distinct canonical SMILES, deterministic in `seed`.
pub fn drug_like_corpus(n: usize, seed: u64) -> Vec<String> {
    let blocks = Blocks::load();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if let Some(g) = random_molecule(&blocks, &mut rng) {
            let s = canonical_smiles(&g);
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
    }
    out
}

/// Congeneric potency series: each series is a random parent plus analogs
/// carrying one extra substituent. Analog potencies scatter around the
/// parent's by 0.3 log units, except that about one analog in five differs
/// by 1 to 2 log units, which plants activity cliffs.
///
/// Returns `(canonical SMILES, pK)` rows with unique SMILES.
pub fn potency_series(series: usize, per_series: usize, seed: u64) -> Vec<(String, f64)> {
    let blocks = Blocks::load();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).expect("valid normal");
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(series * per_series);
    let mut made = 0;
    while made < series {
        let Some(parent) = random_molecule(&blocks, &mut rng) else {
            continue;
        };
        let base_pk: f64 = rng.random_range(5.0..8.0);
        let mut rows = Vec::new();
        let s = canonical_smiles(&parent);
        if seen.contains(&s) {
            continue;
        }
        rows.push((s, base_pk));
        let mut attempts = 0;
        while rows.len() < per_series && attempts < per_series * 20 {
            attempts += 1;
            let mut b = Builder::new();
            b.add(&parent);
            if !add_substituent(&mut b, &blocks, &mut rng) {
                continue;
            }
            let s = canonical_smiles(&b.finish());
            if seen.contains(&s) || rows.iter().any(|(r, _)| *r == s) {
                continue;
            }
            let pk = if rng.random_bool(0.2) {
                let jump: f64 = rng.random_range(1.0..2.0);
                if rng.random_bool(0.5) {
                    base_pk + jump
                } else {
                    base_pk - jump
                }
            } else {
                base_pk + noise.sample(&mut rng)
            };
            rows.push((s, pk));
        }
        for (s, _) in &rows {
            seen.insert(s.clone());
        }
        out.extend(rows);
        made += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_valid() {
        let a = drug_like_corpus(300, 7);
        assert_eq!(a, drug_like_corpus(300, 7));
        assert_ne!(a, drug_like_corpus(300, 8));
        let unique: HashSet<&String> = a.iter().collect();
        assert_eq!(unique.len(), a.len());
        for s in &a {
            let g = parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert_eq!(&canonical_smiles(&g), s);
            assert!((6..=40).contains(&g.heavy_atom_count()), "{s}");
        }
    }

    #[test]
    fn series_rows_are_unique() {
        let rows = potency_series(10, 8, 3);
        let unique: HashSet<&String> = rows.iter().map(|(s, _)| s).collect();
        assert_eq!(unique.len(), rows.len());
        assert!(rows.iter().all(|(_, pk)| pk.is_finite()));
    }
}
