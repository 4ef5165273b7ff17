//! Retrosynthetic fragmentation and motif vocabularies.
//!
//! Motif identity is the canonical SMILES of the bare fragment: cut bonds are
//! capped with hydrogens and no attachment points are recorded.
//!
//! Redundancy policy applied when building a vocabulary (a stand-in for the
//! motif-tree pruning rules of other motif-based pre-training work, which are
//! not reproduced here): fragments with fewer than `min_atoms` heavy atoms are
//! discarded, and fragments with identical canonical SMILES are merged.

mod rules;
mod vocab;

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::chem::{canonical_smiles, BondOrder, MoleculeGraph};

pub use rules::{
    AtomDescriptor, CleavageRule, CleavageRuleTable, RuleError, DEFAULT_RULES, RING_BOUNDARY_RULES,
};
pub use vocab::{MotifEntry, MotifVocab, MotifVocabError, DEFAULT_MIN_ATOMS, DEFAULT_MOTIF_VOCAB_SIZE};

/// One connected fragment of a parent molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifOccurrence {
    pub smiles: String,
    /// Vocabulary label, once assigned.
    pub label: Option<u32>,
    pub atoms: Vec<usize>,
    pub bonds: Vec<usize>,
}

impl MotifOccurrence {
    pub fn heavy_atoms(&self, parent: &MoleculeGraph) -> usize {
        self.atoms
            .iter()
            .filter(|&&a| parent.atom(a).element != crate::chem::Element::H)
            .count()
    }
}

/// Acyclic single bonds matched by at least one rule, ascending.
pub fn cleavable_bonds(g: &MoleculeGraph, rules: &CleavageRuleTable) -> Vec<usize> {
    g.bonds()
        .iter()
        .enumerate()
        .filter(|&(bi, bond)| {
            bond.order == BondOrder::Single
                && !g.bond_in_ring(bi)
                && rules.rules().iter().any(|r| r.matches(g, bond.a, bond.b))
        })
        .map(|(bi, _)| bi)
        .collect()
}

/// Partitions the atoms into the connected components left after deleting
/// every cleavable bond. Occurrences are ordered by their lowest atom index.
pub fn fragment(g: &MoleculeGraph, rules: &CleavageRuleTable) -> Vec<MotifOccurrence> {
    let n = g.atom_count();
    let mut cut = vec![false; g.bond_count()];
    for bi in cleavable_bonds(g, rules) {
        cut[bi] = true;
    }
    let mut component = vec![usize::MAX; n];
    let mut out = Vec::new();
    for seed in 0..n {
        if component[seed] != usize::MAX {
            continue;
        }
        let id = out.len();
        component[seed] = id;
        let mut atoms = vec![seed];
        let mut queue = VecDeque::from([seed]);
        while let Some(a) = queue.pop_front() {
            for &(w, bi) in g.neighbors(a) {
                if !cut[bi] && component[w] == usize::MAX {
                    component[w] = id;
                    atoms.push(w);
                    queue.push_back(w);
                }
            }
        }
        atoms.sort_unstable();
        let bonds: Vec<usize> = (0..g.bond_count())
            .filter(|&bi| {
                let b = g.bond(bi);
                !cut[bi] && component[b.a] == id && component[b.b] == id
            })
            .collect();
        let (sub, _) = g.induced_subgraph(&atoms);
        out.push(MotifOccurrence {
            smiles: canonical_smiles(&sub),
            label: None,
            atoms,
            bonds,
        });
    }
    out
}

/// Counts canonical fragments across the corpus (occurrences, not
/// molecules), drops fragments under `min_atoms` heavy atoms, and keeps the
/// `k` most frequent with ties broken by SMILES ascending.
pub fn build_motif_vocab(
    corpus: &[MoleculeGraph],
    rules: &CleavageRuleTable,
    k: usize,
    min_atoms: usize,
) -> Result<MotifVocab, MotifVocabError> {
    if corpus.is_empty() {
        return Err(MotifVocabError::EmptyCorpus);
    }
    let counts = corpus
        .par_iter()
        .map(|g| {
            let mut local = std::collections::BTreeMap::<String, u64>::new();
            for occ in fragment(g, rules) {
                if occ.heavy_atoms(g) >= min_atoms {
                    *local.entry(occ.smiles).or_default() += 1;
                }
            }
            local
        })
        .reduce(std::collections::BTreeMap::new, |mut acc, part| {
            for (s, c) in part {
                *acc.entry(s).or_default() += c;
            }
            acc
        });
    Ok(MotifVocab::from_counts(counts, k))
}

/// Fragments a molecule and attaches vocabulary labels.
pub fn labeled_fragments(
    g: &MoleculeGraph,
    rules: &CleavageRuleTable,
    vocab: &MotifVocab,
) -> Vec<MotifOccurrence> {
    let mut occ = fragment(g, rules);
    for o in &mut occ {
        o.label = vocab.label(&o.smiles);
    }
    occ
}

/// Indices of molecules with at least one in-vocabulary fragment.
pub fn filter_corpus_by_vocab(
    corpus: &[MoleculeGraph],
    rules: &CleavageRuleTable,
    vocab: &MotifVocab,
) -> Vec<usize> {
    corpus
        .par_iter()
        .enumerate()
        .filter(|(_, g)| {
            fragment(g, rules)
                .iter()
                .any(|o| vocab.label(&o.smiles).is_some())
        })
        .map(|(i, _)| i)
        .collect()
}
