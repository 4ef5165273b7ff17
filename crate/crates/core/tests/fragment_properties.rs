use std::collections::{HashMap, HashSet};

use cliffmask_core::chem::{canonical_smiles, parse_smiles, MoleculeGraph};
use cliffmask_core::desk::drug_like_corpus;
use cliffmask_core::fragment::{
    build_motif_vocab, filter_corpus_by_vocab, fragment, CleavageRuleTable,
};

fn corpus(n: usize) -> Vec<MoleculeGraph> {
    drug_like_corpus(n, 23)
        .iter()
        .map(|s| parse_smiles(s).unwrap())
        .collect()
}

#[test]
fn occurrences_partition_atoms() {
    for table in [CleavageRuleTable::brics_default(), CleavageRuleTable::ring_boundary()] {
        for g in corpus(500) {
            let occ = fragment(&g, &table);
            let mut seen = vec![false; g.atom_count()];
            for o in &occ {
                for &a in &o.atoms {
                    assert!(!seen[a], "atom {a} in two occurrences");
                    seen[a] = true;
                }
                let (sub, _) = g.induced_subgraph(&o.atoms);
                assert!(sub.is_connected());
                assert_eq!(canonical_smiles(&sub), o.smiles);
            }
            assert!(seen.iter().all(|&s| s), "coverage");
            assert_eq!(occ, fragment(&g, &table), "deterministic");
        }
    }
}

#[test]
fn vocab_matches_sequential_count() {
    let mols = corpus(2000);
    let table = CleavageRuleTable::brics_default();
    let vocab = build_motif_vocab(&mols, &table, 200, 3).unwrap();

    // Sequential recount straight from the cut bonds.
    let mut counts: HashMap<String, u64> = HashMap::new();
    for g in &mols {
        let cut: HashSet<usize> = cliffmask_core::fragment::cleavable_bonds(g, &table)
            .into_iter()
            .collect();
        let mut comp = vec![usize::MAX; g.atom_count()];
        for s in 0..g.atom_count() {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = s;
            let mut members = vec![s];
            while let Some(a) = stack.pop() {
                for &(w, bi) in g.neighbors(a) {
                    if !cut.contains(&bi) && comp[w] == usize::MAX {
                        comp[w] = s;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            if members.len() >= 3 {
                let (sub, _) = g.induced_subgraph(&members);
                *counts.entry(canonical_smiles(&sub)).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(200);

    let got: Vec<(String, u64)> = vocab
        .entries()
        .iter()
        .map(|e| (e.smiles.clone(), e.count))
        .collect();
    assert_eq!(got, ranked);
    assert!(vocab.len() <= 200);
    assert!(vocab.entries().windows(2).all(|w| w[0].count >= w[1].count));
    for (i, e) in vocab.entries().iter().enumerate() {
        assert_eq!(vocab.label(&e.smiles), Some(i as u32));
    }
}

#[test]
fn corpus_filter_matches_membership_check() {
    let mols = corpus(1000);
    let table = CleavageRuleTable::brics_default();
    let vocab = build_motif_vocab(&mols[..300], &table, 20, 3).unwrap();
    let members: HashSet<&str> = vocab.entries().iter().map(|e| e.smiles.as_str()).collect();
    let expected: Vec<usize> = mols
        .iter()
        .enumerate()
        .filter(|(_, g)| {
            let frags: HashSet<String> = fragment(g, &table).into_iter().map(|o| o.smiles).collect();
            frags.iter().any(|f| members.contains(f.as_str()))
        })
        .map(|(i, _)| i)
        .collect();
    let kept = filter_corpus_by_vocab(&mols, &table, &vocab);
    assert_eq!(kept, expected);
    assert!(!kept.is_empty() && kept.len() < mols.len());
}
