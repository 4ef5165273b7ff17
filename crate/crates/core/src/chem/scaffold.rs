//! Bemis–Murcko scaffolds.

use super::mol::MoleculeGraph;

/// Ring systems plus linkers; terminal acyclic atoms are stripped until none
/// remain. Acyclic molecules yield [`MoleculeGraph::empty`].
pub fn murcko_scaffold(g: &MoleculeGraph) -> MoleculeGraph {
    let n = g.atom_count();
    if !(0..n).any(|a| g.atom_in_ring(a)) {
        return MoleculeGraph::empty();
    }
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|a| g.degree(a)).collect();
    let mut stack: Vec<usize> = (0..n)
        .filter(|&a| !g.atom_in_ring(a) && degree[a] <= 1)
        .collect();
    while let Some(a) = stack.pop() {
        if !alive[a] {
            continue;
        }
        alive[a] = false;
        for &(w, _) in g.neighbors(a) {
            if alive[w] {
                degree[w] -= 1;
                if !g.atom_in_ring(w) && degree[w] <= 1 {
                    stack.push(w);
                }
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&a| alive[a]).collect();
    g.induced_subgraph(&keep).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{canonical_smiles, parse_smiles};

    fn scaffold(s: &str) -> String {
        canonical_smiles(&murcko_scaffold(&parse_smiles(s).unwrap()))
    }

    #[test]
    fn fixtures() {
        let benzene = canonical_smiles(&parse_smiles("c1ccccc1").unwrap());
        assert_eq!(scaffold("c1ccccc1"), benzene);
        assert_eq!(scaffold("Cc1ccccc1"), benzene);
        assert_eq!(scaffold("CCCCO"), "");
        assert_eq!(
            scaffold("CCc1ccc(Cc2ccncc2)cc1"),
            canonical_smiles(&parse_smiles("c1ccc(Cc2ccncc2)cc1").unwrap())
        );
        assert_eq!(
            scaffold("CC(=O)Nc1ccc(O)cc1"),
            benzene
        );
    }
}
