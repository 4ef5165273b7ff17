//! Canonical atom ranking and canonical SMILES output.
//!
//! Ranking starts from the atom invariant
//! `(atomic number, heavy degree, formal charge, aromatic, hydrogen count)`
//! and refines iteratively: an atom's next key is its current rank followed by
//! the sorted `(neighbor rank, bond class)` multiset, until the number of
//! classes stops growing. Remaining ties are broken by individualizing each
//! member of the lowest tied class in turn and keeping the lexicographically
//! smallest resulting string. The search is capped at [`TIE_BREAK_BUDGET`]
//! completed labelings, after which only the first candidate of each tied class
//! is explored.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::mol::{BondOrder, MoleculeGraph};

pub const TIE_BREAK_BUDGET: usize = 64;

fn initial_ranks(g: &MoleculeGraph) -> Vec<usize> {
    let keys: Vec<(u8, usize, i8, bool, u8)> = g
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.element.atomic_number(),
                g.degree(i),
                a.formal_charge,
                a.aromatic,
                a.h_count,
            )
        })
        .collect();
    dense_ranks(&keys)
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn class_count(ranks: &[usize]) -> usize {
    let mut r = ranks.to_vec();
    r.sort_unstable();
    r.dedup();
    r.len()
}

fn refine(g: &MoleculeGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    let mut classes = class_count(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u32)>)> = (0..g.atom_count())
            .map(|a| {
                let mut nb: Vec<(usize, u32)> = g
                    .neighbors(a)
                    .iter()
                    .map(|&(n, bi)| (ranks[n], g.bond(bi).order.label()))
                    .collect();
                nb.sort_unstable();
                (ranks[a], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        let next_classes = class_count(&next);
        if next_classes == classes {
            return next;
        }
        classes = next_classes;
        ranks = next;
    }
}

/// Unique canonical rank per atom (a permutation of `0..n`).
pub fn canonical_ranks(g: &MoleculeGraph) -> Vec<usize> {
    if g.is_empty() {
        return Vec::new();
    }
    let mut search = Search {
        g,
        leaves: 0,
        best: None,
    };
    search.run(initial_ranks(g));
    search.best.expect("at least one labeling").1
}

/// Canonical SMILES; the empty graph maps to the empty string.
pub fn canonical_smiles(g: &MoleculeGraph) -> String {
    if g.is_empty() {
        return String::new();
    }
    let mut search = Search {
        g,
        leaves: 0,
        best: None,
    };
    search.run(initial_ranks(g));
    search.best.expect("at least one labeling").0
}

struct Search<'a> {
    g: &'a MoleculeGraph,
    leaves: usize,
    best: Option<(String, Vec<usize>)>,
}

impl Search<'_> {
    fn run(&mut self, ranks: Vec<usize>) {
        let ranks = refine(self.g, ranks);
        let n = ranks.len();
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (a, &r) in ranks.iter().enumerate() {
            members.entry(r).or_default().push(a);
        }
        let tied = members.iter().find(|(_, m)| m.len() > 1);
        let Some((&rank, atoms)) = tied else {
            debug_assert_eq!(members.len(), n);
            let s = write_smiles(self.g, &ranks);
            self.leaves += 1;
            if self.best.as_ref().is_none_or(|(b, _)| s < *b) {
                self.best = Some((s, ranks));
            }
            return;
        };
        let atoms = atoms.clone();
        for (k, &chosen) in atoms.iter().enumerate() {
            if k > 0 && self.leaves >= TIE_BREAK_BUDGET {
                break;
            }
            let next: Vec<usize> = ranks
                .iter()
                .enumerate()
                .map(|(a, &r)| 2 * r + usize::from(r == rank && a != chosen))
                .collect();
            self.run(next);
        }
    }
}

fn atom_token(g: &MoleculeGraph, i: usize, out: &mut String) {
    let atom = g.atom(i);
    let sym = atom.element.symbol();
    let bare = atom.element.is_organic_subset()
        && atom.formal_charge == 0
        && g.implied_hydrogens(i) == Some(atom.h_count)
        && (!atom.aromatic || atom.element.can_be_aromatic());
    let write_sym = |out: &mut String| {
        if atom.aromatic {
            out.push_str(&sym.to_ascii_lowercase());
        } else {
            out.push_str(sym);
        }
    };
    if bare {
        write_sym(out);
        return;
    }
    out.push('[');
    write_sym(out);
    match atom.h_count {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -(c as i16));
        }
    }
    out.push(']');
}

fn bond_token(g: &MoleculeGraph, bi: usize, out: &mut String) {
    let bond = g.bond(bi);
    match bond.order {
        BondOrder::Single => {
            if g.atom(bond.a).aromatic && g.atom(bond.b).aromatic {
                out.push('-');
            }
        }
        BondOrder::Double => out.push('='),
        BondOrder::Triple => out.push('#'),
        BondOrder::Aromatic => {}
    }
}

fn ring_digit(d: usize, out: &mut String) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d:02}");
    }
}

/// Writes SMILES for a connected graph given unique ranks: depth-first from
/// the lowest-ranked atom, neighbors visited in rank order.
pub(crate) fn write_smiles(g: &MoleculeGraph, ranks: &[usize]) -> String {
    let n = g.atom_count();
    let start = (0..n).min_by_key(|&a| ranks[a]).expect("non-empty graph");
    let sorted_nbrs = |a: usize| {
        let mut v = g.neighbors(a).to_vec();
        v.sort_by_key(|&(w, _)| ranks[w]);
        v
    };

    // Pass 1: spanning tree and ring-closure bonds.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // Closure bonds listed at both endpoints, in discovery order.
    let mut closures: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut is_tree = vec![false; g.bond_count()];
    let mut seen_closure = vec![false; g.bond_count()];
    let mut stack: Vec<(usize, usize, Vec<(usize, usize)>, usize)> =
        vec![(start, usize::MAX, sorted_nbrs(start), 0)];
    visited[start] = true;
    while let Some((a, parent_bond, nbrs, cursor)) = stack.last_mut() {
        let a = *a;
        let parent_bond = *parent_bond;
        if *cursor >= nbrs.len() {
            stack.pop();
            continue;
        }
        let (w, bi) = nbrs[*cursor];
        *cursor += 1;
        if bi == parent_bond || is_tree[bi] {
            continue;
        }
        if visited[w] {
            if !seen_closure[bi] {
                seen_closure[bi] = true;
                closures[w].push(bi);
                closures[a].push(bi);
            }
            continue;
        }
        visited[w] = true;
        is_tree[bi] = true;
        children[a].push((w, bi));
        stack.push((w, bi, sorted_nbrs(w), 0));
    }

    // Pass 2: emit.
    let mut out = String::with_capacity(n * 2);
    let mut digit_of: Vec<Option<usize>> = vec![None; g.bond_count()];
    let mut in_use: Vec<bool> = Vec::new();
    enum Step {
        Atom(usize, usize),
        Open,
        Close,
    }
    let mut work = vec![Step::Atom(start, usize::MAX)];
    while let Some(step) = work.pop() {
        match step {
            Step::Open => out.push('('),
            Step::Close => out.push(')'),
            Step::Atom(a, via) => {
                if via != usize::MAX {
                    bond_token(g, via, &mut out);
                }
                atom_token(g, a, &mut out);
                let mut to_free = Vec::new();
                for &bi in &closures[a] {
                    match digit_of[bi] {
                        Some(d) => {
                            ring_digit(d, &mut out);
                            to_free.push(d);
                        }
                        None => {
                            let d = match in_use.iter().skip(1).position(|&u| !u) {
                                Some(p) => p + 1,
                                None => {
                                    if in_use.is_empty() {
                                        in_use.push(true);
                                    }
                                    in_use.push(false);
                                    in_use.len() - 1
                                }
                            };
                            in_use[d] = true;
                            digit_of[bi] = Some(d);
                            bond_token(g, bi, &mut out);
                            ring_digit(d, &mut out);
                        }
                    }
                }
                for d in to_free {
                    in_use[d] = false;
                }
                let kids = &children[a];
                if let Some((&(last, last_bond), rest)) = kids.split_last() {
                    work.push(Step::Atom(last, last_bond));
                    for &(c, cb) in rest.iter().rev() {
                        work.push(Step::Close);
                        work.push(Step::Atom(c, cb));
                        work.push(Step::Open);
                    }
                }
            }
        }
    }
    out
}
