//! Ring perception: cyclic bonds via bridge detection, then a minimum cycle
//! basis selected greedily over GF(2) from shortest-cycle candidates.

use std::collections::VecDeque;

use super::mol::{MoleculeGraph, RingInfo};

pub(crate) fn perceive(g: &MoleculeGraph) -> RingInfo {
    let n = g.atom_count();
    let m = g.bond_count();
    let bridges = find_bridges(g);
    let bond_in_ring: Vec<bool> = (0..m).map(|b| !bridges[b]).collect();
    let mut atom_in_ring = vec![false; n];
    for (i, bond) in g.bonds().iter().enumerate() {
        if bond_in_ring[i] {
            atom_in_ring[bond.a] = true;
            atom_in_ring[bond.b] = true;
        }
    }

    let cyclic_bonds = bond_in_ring.iter().filter(|&&c| c).count();
    if cyclic_bonds == 0 {
        return RingInfo {
            atom_in_ring,
            bond_in_ring,
            rings: Vec::new(),
            ring_bonds: Vec::new(),
        };
    }
    let cyclic_atoms = atom_in_ring.iter().filter(|&&c| c).count();
    let components = cyclic_components(g, &bond_in_ring, &atom_in_ring);
    let rank = cyclic_bonds + components - cyclic_atoms;

    let mut candidates = edge_cycles(g, &bond_in_ring);
    let mut basis = select_basis(&candidates, m, rank);
    if basis.len() < rank {
        candidates.extend(horton_cycles(g, &bond_in_ring));
        sort_candidates(&mut candidates);
        basis = select_basis(&candidates, m, rank);
    }

    let mut rings = Vec::with_capacity(basis.len());
    let mut ring_bonds = Vec::with_capacity(basis.len());
    for bonds in basis {
        rings.push(order_cycle(g, &bonds));
        ring_bonds.push(bonds);
    }
    RingInfo {
        atom_in_ring,
        bond_in_ring,
        rings,
        ring_bonds,
    }
}

fn find_bridges(g: &MoleculeGraph) -> Vec<bool> {
    let n = g.atom_count();
    let mut bridge = vec![false; g.bond_count()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, parent bond, next neighbor cursor)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent_bond, ref mut cursor)) = stack.last_mut() {
            if let Some(&(w, bi)) = g.neighbors(v).get(*cursor) {
                *cursor += 1;
                if bi == parent_bond {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, bi, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(u, _, _)) = stack.last() {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    bridge
}

fn cyclic_components(g: &MoleculeGraph, bond_in_ring: &[bool], atom_in_ring: &[bool]) -> usize {
    let n = g.atom_count();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if !atom_in_ring[s] || seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(a) = queue.pop_front() {
            for &(w, bi) in g.neighbors(a) {
                if bond_in_ring[bi] && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    count
}

/// BFS over cyclic bonds from `src`, optionally ignoring one bond.
/// Returns the parent-bond table.
fn bfs_tree(g: &MoleculeGraph, bond_in_ring: &[bool], src: usize, skip: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; g.atom_count()];
    let mut seen = vec![false; g.atom_count()];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(a) = queue.pop_front() {
        for &(w, bi) in g.neighbors(a) {
            if bi == skip || !bond_in_ring[bi] || seen[w] {
                continue;
            }
            seen[w] = true;
            parent[w] = bi;
            queue.push_back(w);
        }
    }
    parent
}

fn path_bonds(g: &MoleculeGraph, parent: &[usize], mut to: usize, from: usize) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    while to != from {
        let bi = parent[to];
        if bi == usize::MAX {
            return None;
        }
        out.push(bi);
        to = g.bond(bi).other(to);
    }
    Some(out)
}

fn edge_cycles(g: &MoleculeGraph, bond_in_ring: &[bool]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for (bi, bond) in g.bonds().iter().enumerate() {
        if !bond_in_ring[bi] {
            continue;
        }
        let parent = bfs_tree(g, bond_in_ring, bond.a, bi);
        if let Some(mut path) = path_bonds(g, &parent, bond.b, bond.a) {
            path.push(bi);
            path.sort_unstable();
            out.push(path);
        }
    }
    sort_candidates(&mut out);
    out
}

fn horton_cycles(g: &MoleculeGraph, bond_in_ring: &[bool]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for v in 0..g.atom_count() {
        let parent = bfs_tree(g, bond_in_ring, v, usize::MAX);
        for (bi, bond) in g.bonds().iter().enumerate() {
            if !bond_in_ring[bi] {
                continue;
            }
            let (Some(pa), Some(pb)) = (
                path_bonds(g, &parent, bond.a, v),
                path_bonds(g, &parent, bond.b, v),
            ) else {
                continue;
            };
            if pa.contains(&bi) || pb.contains(&bi) {
                continue;
            }
            let mut cycle: Vec<usize> = pa.iter().chain(pb.iter()).copied().collect();
            cycle.sort_unstable();
            let before = cycle.len();
            cycle.dedup();
            if cycle.len() != before {
                continue;
            }
            cycle.push(bi);
            cycle.sort_unstable();
            out.push(cycle);
        }
    }
    out
}

fn sort_candidates(c: &mut Vec<Vec<usize>>) {
    c.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    c.dedup();
}

fn select_basis(candidates: &[Vec<usize>], bond_count: usize, rank: usize) -> Vec<Vec<usize>> {
    let words = bond_count.div_ceil(64);
    // Reduced rows keyed by pivot bit.
    let mut rows: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut basis = Vec::new();
    for cand in candidates {
        if basis.len() == rank {
            break;
        }
        let mut v = vec![0u64; words];
        for &b in cand {
            v[b / 64] ^= 1 << (b % 64);
        }
        for (pivot, row) in &rows {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (x, r) in v.iter_mut().zip(row) {
                    *x ^= r;
                }
            }
        }
        if let Some(pivot) = first_bit(&v) {
            rows.push((pivot, v));
            basis.push(cand.clone());
        }
    }
    basis
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn order_cycle(g: &MoleculeGraph, bonds: &[usize]) -> Vec<usize> {
    let first = g.bond(bonds[0]);
    let mut order = vec![first.a];
    let mut used = vec![false; bonds.len()];
    used[0] = true;
    let mut current = first.b;
    while current != first.a {
        order.push(current);
        let next = bonds
            .iter()
            .enumerate()
            .find(|&(i, &bi)| {
                !used[i] && {
                    let b = g.bond(bi);
                    b.a == current || b.b == current
                }
            })
            .map(|(i, &bi)| (i, g.bond(bi).other(current)));
        match next {
            Some((i, atom)) => {
                used[i] = true;
                current = atom;
            }
            None => break,
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    fn ring_sizes(s: &str) -> Vec<usize> {
        let g = parse_smiles(s).unwrap();
        let mut sizes: Vec<usize> = g.ring_info().rings.iter().map(|r| r.len()).collect();
        sizes.sort_unstable();
        sizes
    }

    #[test]
    fn common_ring_systems() {
        assert!(ring_sizes("CCO").is_empty());
        assert_eq!(ring_sizes("c1ccccc1"), vec![6]);
        assert_eq!(ring_sizes("c1ccc2ccccc2c1"), vec![6, 6]);
        assert_eq!(ring_sizes("C1CC2CCC1CC2"), vec![6, 6]);
        assert_eq!(ring_sizes("C12C3C4C1C5C2C3C45"), vec![4, 4, 4, 4, 4]);
        assert_eq!(ring_sizes("C1CC1c1ccccc1"), vec![3, 6]);
    }

    #[test]
    fn linker_bond_is_not_cyclic() {
        let g = parse_smiles("c1ccccc1Cc1ccccc1").unwrap();
        let linker: Vec<usize> = (0..g.bond_count()).filter(|&b| !g.bond_in_ring(b)).collect();
        assert_eq!(linker.len(), 2);
        assert!(!g.atom_in_ring(6));
    }
}
