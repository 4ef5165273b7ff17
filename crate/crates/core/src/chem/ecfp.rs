//! Extended-connectivity (Morgan) fingerprints and Tanimoto similarity.
//!
//! Hashing is 64-bit FNV-1a (offset basis `0xcbf29ce484222325`, prime
//! `0x100000001b3`) over little-endian `u64` words. The radius-0 identifier
//! of an atom hashes `(atomic number, formal charge, aromatic, in ring)`;
//! degree and hydrogen count enter through the neighborhood terms. Iteration
//! `k` hashes `(k, own identifier, sorted (bond class, neighbor identifier)
//! pairs)`. Every identifier from radius 0 up to the requested radius sets bit
//! `identifier mod width`.

use super::mol::MoleculeGraph;

pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_WIDTH: usize = 2048;

pub fn fnv1a64(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET_BASIS;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FingerprintError {
    #[error("radius {0} outside [0, 4]")]
    InvalidRadius(u32),
    #[error("width {0} is not a power of two >= 256")]
    InvalidWidth(usize),
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
}

/// Validated fingerprint parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FingerprintSpec {
    radius: u32,
    width: usize,
}

impl FingerprintSpec {
    pub fn new(radius: u32, width: usize) -> Result<Self, FingerprintError> {
        if radius > 4 {
            return Err(FingerprintError::InvalidRadius(radius));
        }
        if width < 256 || !width.is_power_of_two() {
            return Err(FingerprintError::InvalidWidth(width));
        }
        Ok(FingerprintSpec { radius, width })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

impl Default for FingerprintSpec {
    fn default() -> Self {
        FingerprintSpec {
            radius: DEFAULT_RADIUS,
            width: DEFAULT_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn zeros(width: usize, radius: u32) -> Self {
        Fingerprint {
            words: vec![0; width.div_ceil(64)],
            width,
            radius,
        }
    }

    pub fn from_bits(width: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::zeros(width, 0);
        for b in bits {
            fp.set(b % width);
        }
        fp
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.get(b))
    }
}

/// Per-atom identifiers for every iteration `0..=radius`.
pub fn atom_identifiers(g: &MoleculeGraph, radius: u32) -> Vec<Vec<u64>> {
    let mut layers = Vec::with_capacity(radius as usize + 1);
    let initial: Vec<u64> = g
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            fnv1a64(&[
                a.element.atomic_number() as u64,
                a.formal_charge as i64 as u64,
                a.aromatic as u64,
                g.atom_in_ring(i) as u64,
            ])
        })
        .collect();
    layers.push(initial);
    for k in 1..=radius {
        let prev = layers.last().expect("layer 0 present");
        let next: Vec<u64> = (0..g.atom_count())
            .map(|a| {
                let mut env: Vec<(u64, u64)> = g
                    .neighbors(a)
                    .iter()
                    .map(|&(n, bi)| (g.bond(bi).order.label() as u64, prev[n]))
                    .collect();
                env.sort_unstable();
                let mut words = Vec::with_capacity(2 + 2 * env.len());
                words.push(k as u64);
                words.push(prev[a]);
                for (b, id) in env {
                    words.push(b);
                    words.push(id);
                }
                fnv1a64(&words)
            })
            .collect();
        layers.push(next);
    }
    layers
}

pub fn ecfp(g: &MoleculeGraph, spec: FingerprintSpec) -> Fingerprint {
    let mut fp = Fingerprint::zeros(spec.width, spec.radius);
    for layer in atom_identifiers(g, spec.radius) {
        for id in layer {
            fp.set((id % spec.width as u64) as usize);
        }
    }
    fp
}

/// `|a ∧ b| / |a ∨ b|`, defined as 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.width != b.width {
        return Err(FingerprintError::WidthMismatch(a.width, b.width));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn fnv_reference_vector() {
        // FNV-1a 64 of the empty input is the offset basis; of eight zero
        // bytes it is the basis multiplied through eight rounds.
        assert_eq!(fnv1a64(&[]), FNV_OFFSET_BASIS);
        let mut h = FNV_OFFSET_BASIS;
        for _ in 0..8 {
            h = h.wrapping_mul(FNV_PRIME);
        }
        assert_eq!(fnv1a64(&[0]), h);
    }

    #[test]
    fn spec_validation() {
        assert!(FingerprintSpec::new(5, 2048).is_err());
        assert!(FingerprintSpec::new(2, 1000).is_err());
        assert!(FingerprintSpec::new(2, 128).is_err());
        assert!(FingerprintSpec::new(0, 256).is_ok());
    }

    #[test]
    fn tanimoto_fixtures() {
        let a = Fingerprint::from_bits(256, [1, 2, 3]);
        let b = Fingerprint::from_bits(256, [2, 3, 4]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let c = Fingerprint::from_bits(256, [10, 11]);
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
        let e = Fingerprint::zeros(256, 0);
        assert_eq!(tanimoto(&e, &e).unwrap(), 1.0);
        let w = Fingerprint::zeros(512, 0);
        assert_eq!(
            tanimoto(&a, &w),
            Err(FingerprintError::WidthMismatch(256, 512))
        );
    }

    #[test]
    fn methane_ethane_share_only_radius_zero() {
        // Hand trace: both carbons hash (6, 0, 0, 0) at radius 0. At radius 1
        // methane hashes (1, id0) with no neighbors while each ethane carbon
        // hashes (1, id0, 0, id0).
        let methane = parse_smiles("C").unwrap();
        let ethane = parse_smiles("CC").unwrap();
        let c0 = fnv1a64(&[6, 0, 0, 0]);
        let m1 = fnv1a64(&[1, c0]);
        let e1 = fnv1a64(&[1, c0, 0, c0]);
        let spec0 = FingerprintSpec::new(0, 2048).unwrap();
        let spec1 = FingerprintSpec::new(1, 2048).unwrap();
        let bit = |id: u64| (id % 2048) as usize;

        let fm0 = ecfp(&methane, spec0);
        let fe0 = ecfp(&ethane, spec0);
        assert_eq!(fm0.ones().collect::<Vec<_>>(), vec![bit(c0)]);
        assert_eq!(fm0, fe0);

        let fm1 = ecfp(&methane, spec1);
        let fe1 = ecfp(&ethane, spec1);
        assert!(fm1.get(bit(m1)) && !fe1.get(bit(m1)));
        assert!(fe1.get(bit(e1)) && !fm1.get(bit(e1)));
        assert_ne!(fm1, fe1);
    }

    #[test]
    fn self_similarity() {
        let g = parse_smiles("CC(=O)Nc1ccc(O)cc1").unwrap();
        let fp = ecfp(&g, FingerprintSpec::default());
        assert_eq!(tanimoto(&fp, &fp).unwrap(), 1.0);
        assert!(fp.count_ones() <= fp.width());
    }
}
