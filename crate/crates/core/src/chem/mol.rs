//! Molecular graph model.

use std::collections::VecDeque;
use std::fmt;
use std::sync::OnceLock;

use super::element::Element;

/// Bond order; the four classes double as the bond-level pseudo-labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [
        BondOrder::Single,
        BondOrder::Double,
        BondOrder::Triple,
        BondOrder::Aromatic,
    ];

    /// Dense class id in `0..4`.
    pub fn label(self) -> u32 {
        match self {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }

    pub fn from_label(label: u32) -> Option<BondOrder> {
        BondOrder::ALL.get(label as usize).copied()
    }

    /// Contribution to an atom's valence sum. Aromatic bonds count as one;
    /// the aromatic atom itself contributes the extra electron.
    pub fn valence_contribution(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

impl fmt::Display for BondOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Attached hydrogens (bracket count, or inferred from default valence).
    pub h_count: u8,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            aromatic: false,
            formal_charge: 0,
            h_count: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Ring membership and a smallest set of smallest rings.
#[derive(Debug, Clone, Default)]
pub struct RingInfo {
    pub atom_in_ring: Vec<bool>,
    pub bond_in_ring: Vec<bool>,
    /// Each ring as an ordered atom cycle.
    pub rings: Vec<Vec<usize>>,
    /// Bond indices of each ring, parallel to `rings`.
    pub ring_bonds: Vec<Vec<usize>>,
}

/// Atoms and bonds of one molecule. Ring perception runs on first use.
#[derive(Clone, Default)]
pub struct MoleculeGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    rings: OnceLock<RingInfo>,
}

impl fmt::Debug for MoleculeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MoleculeGraph")
            .field("atoms", &self.atoms)
            .field("bonds", &self.bonds)
            .finish()
    }
}

impl PartialEq for MoleculeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.bonds == other.bonds
    }
}

impl MoleculeGraph {
    /// Builds a graph, checking endpoint validity, self bonds and duplicates.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= atoms.len() || bond.b >= atoms.len() {
                return Err(GraphError::InvalidEndpoint(i));
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfBond(bond.a));
            }
            if adjacency[bond.a].iter().any(|&(n, _)| n == bond.b) {
                return Err(GraphError::DuplicateBond(bond.a, bond.b));
            }
            if bond.order == BondOrder::Aromatic && !(atoms[bond.a].aromatic && atoms[bond.b].aromatic)
            {
                return Err(GraphError::AromaticBondOnAliphaticAtom(i));
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        Ok(MoleculeGraph {
            atoms,
            bonds,
            adjacency,
            rings: OnceLock::new(),
        })
    }

    /// The empty graph, used as the scaffold of acyclic molecules.
    pub fn empty() -> Self {
        MoleculeGraph::default()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    /// `(neighbor, bond index)` pairs of an atom, in bond insertion order.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| bi)
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.atoms.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = queue.pop_front() {
            for &(n, _) in &self.adjacency[a] {
                if !seen[n] {
                    seen[n] = true;
                    count += 1;
                    queue.push_back(n);
                }
            }
        }
        count == self.atoms.len()
    }

    pub fn ring_info(&self) -> &RingInfo {
        self.rings.get_or_init(|| super::rings::perceive(self))
    }

    pub fn atom_in_ring(&self, atom: usize) -> bool {
        self.ring_info().atom_in_ring[atom]
    }

    pub fn bond_in_ring(&self, bond: usize) -> bool {
        self.ring_info().bond_in_ring[bond]
    }

    /// Sum of bond valence contributions at an atom.
    pub fn bond_valence(&self, atom: usize) -> u8 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, bi)| self.bonds[bi].order.valence_contribution())
            .sum()
    }

    /// Hydrogen count implied by the default valence model for an unbracketed
    /// organic-subset atom; `None` for elements without default valences.
    pub fn implied_hydrogens(&self, atom: usize) -> Option<u8> {
        implied_hydrogens(
            self.atoms[atom].element,
            self.atoms[atom].aromatic,
            self.bond_valence(atom),
        )
    }

    /// Subgraph induced by `keep` (any order; output follows ascending index).
    ///
    /// Every bond cut at the boundary is replaced by hydrogens on the kept
    /// endpoint, so fragments and scaffolds stay valence-complete.
    /// Returns the subgraph with the old-to-new atom mapping.
    pub fn induced_subgraph(&self, keep: &[usize]) -> (MoleculeGraph, Vec<Option<usize>>) {
        let mut map = vec![None; self.atoms.len()];
        let mut sorted: Vec<usize> = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut atoms = Vec::with_capacity(sorted.len());
        for (new, &old) in sorted.iter().enumerate() {
            map[old] = Some(new);
            atoms.push(self.atoms[old].clone());
        }
        let mut bonds = Vec::new();
        for bond in &self.bonds {
            match (map[bond.a], map[bond.b]) {
                (Some(a), Some(b)) => bonds.push(Bond {
                    a,
                    b,
                    order: bond.order,
                }),
                (Some(a), None) => {
                    atoms[a].h_count += bond.order.valence_contribution();
                }
                (None, Some(b)) => {
                    atoms[b].h_count += bond.order.valence_contribution();
                }
                (None, None) => {}
            }
        }
        let g = MoleculeGraph::new(atoms, bonds).expect("induced subgraph of a valid graph");
        (g, map)
    }
}

pub(crate) fn implied_hydrogens(element: Element, aromatic: bool, bond_valence: u8) -> Option<u8> {
    let valences = element.default_valences();
    if valences.is_empty() {
        return None;
    }
    let used = bond_valence + u8::from(aromatic);
    Some(
        valences
            .iter()
            .find(|&&v| v >= used)
            .map(|&v| v - used)
            .unwrap_or(0),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("bond {0} references a missing atom")]
    InvalidEndpoint(usize),
    #[error("atom {0} is bonded to itself")]
    SelfBond(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("aromatic bond {0} touches a non-aromatic atom")]
    AromaticBondOnAliphaticAtom(usize),
}
