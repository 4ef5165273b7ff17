//! Atom-type vocabulary for the atom-level pretext labels.

use std::collections::BTreeMap;

use super::element::Element;
use super::mol::MoleculeGraph;

pub const DEFAULT_ATOM_VOCAB_SIZE: usize = 10;

/// Most frequent elements of a corpus; position is the label id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomVocab {
    entries: Vec<(Element, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary file: {0}")]
    Format(String),
}

impl AtomVocab {
    pub fn from_entries(entries: Vec<(Element, u64)>) -> Result<Self, VocabError> {
        if entries.len() > DEFAULT_ATOM_VOCAB_SIZE {
            return Err(VocabError::Format(format!(
                "{} atom types exceed the limit of {DEFAULT_ATOM_VOCAB_SIZE}",
                entries.len()
            )));
        }
        let mut seen = entries.iter().map(|(e, _)| *e).collect::<Vec<_>>();
        seen.sort();
        seen.dedup();
        if seen.len() != entries.len() {
            return Err(VocabError::Format("duplicate atom type".into()));
        }
        Ok(AtomVocab { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label(&self, element: Element) -> Option<u32> {
        self.entries
            .iter()
            .position(|(e, _)| *e == element)
            .map(|p| p as u32)
    }

    pub fn element(&self, label: u32) -> Option<Element> {
        self.entries.get(label as usize).map(|(e, _)| *e)
    }

    pub fn entries(&self) -> &[(Element, u64)] {
        &self.entries
    }

    pub fn symbols(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(e, _)| e.symbol()).collect()
    }
}

/// Top-`k` elements by atom count, ties broken by symbol ascending.
pub fn build_atom_vocab<'a, I>(corpus: I, k: usize) -> Result<AtomVocab, VocabError>
where
    I: IntoIterator<Item = &'a MoleculeGraph>,
{
    let mut counts: BTreeMap<Element, u64> = BTreeMap::new();
    let mut any = false;
    for g in corpus {
        any = true;
        for atom in g.atoms() {
            *counts.entry(atom.element).or_default() += 1;
        }
    }
    if !any {
        return Err(VocabError::EmptyCorpus);
    }
    let mut ranked: Vec<(Element, u64)> = counts.into_iter().collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.symbol().cmp(y.0.symbol())));
    ranked.truncate(k.min(DEFAULT_ATOM_VOCAB_SIZE));
    Ok(AtomVocab { entries: ranked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn fixtures() {
        let benzene = parse_smiles("c1ccccc1").unwrap();
        let v = build_atom_vocab([&benzene], 10).unwrap();
        assert_eq!(v.symbols(), vec!["C"]);

        // N appears 10 times, C 5 times.
        let g = parse_smiles("NC(N)(N)C(N)(N)C(N)(N)C(N)(N)CN").unwrap();
        let v = build_atom_vocab([&g], 10).unwrap();
        assert_eq!(v.symbols(), vec!["N", "C"]);

        let empty: Vec<MoleculeGraph> = Vec::new();
        assert_eq!(build_atom_vocab(&empty, 10), Err(VocabError::EmptyCorpus));
    }

    #[test]
    fn ties_break_by_symbol() {
        let g = parse_smiles("OCN").unwrap();
        let v = build_atom_vocab([&g], 2).unwrap();
        assert_eq!(v.symbols(), vec!["C", "N"]);
        assert_eq!(v.label(Element::N), Some(1));
        assert_eq!(v.label(Element::O), None);
    }
}
