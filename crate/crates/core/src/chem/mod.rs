//! Chemistry substrate: molecular graphs, SMILES, fingerprints, scaffolds.

mod canon;
mod ecfp;
mod element;
mod mol;
mod rings;
mod scaffold;
mod smiles;
mod strings;
mod vocab;

pub use canon::{canonical_ranks, canonical_smiles, TIE_BREAK_BUDGET};
pub use ecfp::{
    atom_identifiers, ecfp, fnv1a64, tanimoto, Fingerprint, FingerprintError, FingerprintSpec,
    DEFAULT_RADIUS, DEFAULT_WIDTH, FNV_OFFSET_BASIS, FNV_PRIME,
};
pub use element::Element;
pub use mol::{Atom, Bond, BondOrder, GraphError, MoleculeGraph, RingInfo};
pub use scaffold::murcko_scaffold;
pub use smiles::{parse_smiles, SmilesError};
pub use strings::{levenshtein, smiles_similarity};
pub use vocab::{build_atom_vocab, AtomVocab, VocabError, DEFAULT_ATOM_VOCAB_SIZE};
