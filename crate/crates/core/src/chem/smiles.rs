//! SMILES reader.
//!
//! Supports the organic subset, bracket atoms (isotope, chirality, hydrogen
//! count, charge and atom class; isotope, chirality and class are discarded),
//! branches, ring closures including `%nn`, and the bond symbols
//! `- = # : / \`. Aromaticity is taken from lowercase notation as written.
//! Disconnected input (`.`) is rejected.

use std::collections::BTreeMap;

use super::element::Element;
use super::mol::{implied_hydrogens, Atom, Bond, BondOrder, GraphError, MoleculeGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("non-ASCII input at byte {offset}")]
    NonAscii { offset: usize },
    #[error("unbalanced ring closure at byte {offset}")]
    UnbalancedRingClosure { offset: usize },
    #[error("unknown element at byte {offset}")]
    UnknownElement { offset: usize },
    #[error("unbalanced branch at byte {offset}")]
    UnbalancedBranch { offset: usize },
    #[error("multi-component input ('.') at byte {offset}")]
    MultiComponentInput { offset: usize },
    #[error("unexpected character {ch:?} at byte {offset}")]
    UnexpectedCharacter { ch: char, offset: usize },
    #[error("unterminated bracket atom starting at byte {offset}")]
    UnclosedBracket { offset: usize },
    #[error("bond symbol without a following atom at byte {offset}")]
    DanglingBond { offset: usize },
    #[error("conflicting ring-closure bond orders at byte {offset}")]
    RingBondMismatch { offset: usize },
    #[error("aromatic bond between non-aromatic atoms at byte {offset}")]
    InvalidAromaticBond { offset: usize },
    #[error("invalid bond structure at byte {offset}: {source}")]
    InvalidGraph { offset: usize, source: GraphError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondSymbol {
    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Single => BondOrder::Single,
            BondSymbol::Double => BondOrder::Double,
            BondSymbol::Triple => BondOrder::Triple,
            BondSymbol::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct PendingBond {
    a: usize,
    b: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
}

struct RingOpen {
    atom: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bracketed: Vec<bool>,
    bonds: Vec<PendingBond>,
    branch_stack: Vec<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondSymbol, usize)>,
    rings: BTreeMap<u32, RingOpen>,
}

/// Parses a single-component SMILES string.
pub fn parse_smiles(s: &str) -> Result<MoleculeGraph, SmilesError> {
    if s.is_empty() {
        return Err(SmilesError::Empty);
    }
    if let Some(offset) = s.bytes().position(|b| !b.is_ascii()) {
        return Err(SmilesError::NonAscii { offset });
    }
    let mut p = Parser {
        bytes: s.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bracketed: Vec::new(),
        bonds: Vec::new(),
        branch_stack: Vec::new(),
        prev: None,
        pending: None,
        rings: BTreeMap::new(),
    };
    p.run()?;
    p.finish()
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(SmilesError::UnexpectedCharacter {
                            ch: c as char,
                            offset,
                        });
                    }
                    let symbol = match c {
                        b'=' => BondSymbol::Double,
                        b'#' => BondSymbol::Triple,
                        b':' => BondSymbol::Aromatic,
                        _ => BondSymbol::Single,
                    };
                    self.pending = Some((symbol, offset));
                    self.pos += 1;
                }
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(SmilesError::UnbalancedBranch { offset });
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::DanglingBond { offset });
                    }
                    self.branch_stack.push((prev, offset));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return Err(SmilesError::DanglingBond { offset });
                    }
                    let Some((atom, _)) = self.branch_stack.pop() else {
                        return Err(SmilesError::UnbalancedBranch { offset });
                    };
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    self.pos += 1;
                    self.ring_bond((c - b'0') as u32, offset)?;
                }
                b'%' => {
                    let digits = self.bytes.get(self.pos + 1..self.pos + 3);
                    match digits {
                        Some(d) if d.iter().all(u8::is_ascii_digit) => {
                            let n = ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32;
                            self.pos += 3;
                            self.ring_bond(n, offset)?;
                        }
                        _ => {
                            return Err(SmilesError::UnexpectedCharacter { ch: '%', offset });
                        }
                    }
                }
                b'.' => return Err(SmilesError::MultiComponentInput { offset }),
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, true, offset);
                }
                c if c.is_ascii_alphabetic() || c == b'*' => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, false, offset);
                }
                _ => {
                    return Err(SmilesError::UnexpectedCharacter {
                        ch: c as char,
                        offset,
                    })
                }
            }
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, bracketed: bool, offset: usize) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.bracketed.push(bracketed);
        if let Some(prev) = self.prev {
            let (symbol, off) = match self.pending.take() {
                Some((s, o)) => (Some(s), o),
                None => (None, offset),
            };
            self.bonds.push(PendingBond {
                a: prev,
                b: idx,
                symbol,
                offset: off,
            });
        }
        self.prev = Some(idx);
    }

    fn ring_bond(&mut self, n: u32, offset: usize) -> Result<(), SmilesError> {
        let Some(atom) = self.prev else {
            return Err(SmilesError::UnbalancedRingClosure { offset });
        };
        let symbol = self.pending.take().map(|(s, _)| s);
        match self.rings.remove(&n) {
            Some(open) => {
                let symbol = match (open.symbol, symbol) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(SmilesError::RingBondMismatch { offset })
                    }
                    (x, y) => x.or(y),
                };
                self.bonds.push(PendingBond {
                    a: open.atom,
                    b: atom,
                    symbol,
                    offset,
                });
            }
            None => {
                self.rings.insert(
                    n,
                    RingOpen {
                        atom,
                        symbol,
                        offset,
                    },
                );
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let offset = self.pos;
        let c = self.bytes[self.pos];
        let next = self.bytes.get(self.pos + 1).copied();
        let (symbol, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => ("Cl", false, 2),
            (b'B', Some(b'r')) => ("Br", false, 2),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                (std::str::from_utf8(&self.bytes[offset..offset + 1]).unwrap(), false, 1)
            }
            (b'b', _) => ("B", true, 1),
            (b'c', _) => ("C", true, 1),
            (b'n', _) => ("N", true, 1),
            (b'o', _) => ("O", true, 1),
            (b'p', _) => ("P", true, 1),
            (b's', _) => ("S", true, 1),
            _ => return Err(SmilesError::UnknownElement { offset }),
        };
        self.pos += len;
        let mut atom = Atom::new(Element::from_symbol(symbol).expect("organic subset symbol"));
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let close = self.bytes[start..]
            .iter()
            .position(|&b| b == b']')
            .map(|i| start + i)
            .ok_or(SmilesError::UnclosedBracket { offset: start })?;
        let body = &self.bytes[start + 1..close];
        let mut i = 0;
        let unexpected = |i: usize| SmilesError::UnexpectedCharacter {
            ch: body.get(i).map(|&b| b as char).unwrap_or(']'),
            offset: start + 1 + i,
        };

        while i < body.len() && body[i].is_ascii_digit() {
            i += 1;
        }

        let sym_off = start + 1 + i;
        let (element, aromatic) = {
            let first = *body.get(i).ok_or(SmilesError::UnknownElement { offset: sym_off })?;
            if first.is_ascii_uppercase() {
                let two = body
                    .get(i + 1)
                    .filter(|b| b.is_ascii_lowercase())
                    .and_then(|&b| {
                        let s = [first, b];
                        Element::from_symbol(std::str::from_utf8(&s).ok()?)
                    });
                match two {
                    Some(e) => {
                        i += 2;
                        (e, false)
                    }
                    None => {
                        let e = Element::from_symbol(std::str::from_utf8(&[first]).unwrap())
                            .ok_or(SmilesError::UnknownElement { offset: sym_off })?;
                        i += 1;
                        (e, false)
                    }
                }
            } else if first.is_ascii_lowercase() {
                let two = body.get(i + 1).filter(|b| b.is_ascii_lowercase()).and_then(|&b| {
                    let s = [first.to_ascii_uppercase(), b];
                    Element::from_symbol(std::str::from_utf8(&s).ok()?)
                        .filter(|e| e.can_be_aromatic())
                });
                match two {
                    Some(e) => {
                        i += 2;
                        (e, true)
                    }
                    None => {
                        let up = first.to_ascii_uppercase();
                        let e = Element::from_symbol(std::str::from_utf8(&[up]).unwrap())
                            .filter(|e| e.can_be_aromatic())
                            .ok_or(SmilesError::UnknownElement { offset: sym_off })?;
                        i += 1;
                        (e, true)
                    }
                }
            } else {
                return Err(SmilesError::UnknownElement { offset: sym_off });
            }
        };

        // Chirality is accepted and discarded.
        while body.get(i) == Some(&b'@') {
            i += 1;
        }
        if i > 0 && body[i - 1] == b'@' {
            if let Some(class) = body.get(i..i + 2) {
                if matches!(class, b"TH" | b"AL" | b"SP" | b"TB" | b"OH")
                    && body.get(i + 2).is_some_and(u8::is_ascii_digit)
                {
                    i += 2;
                    while body.get(i).is_some_and(u8::is_ascii_digit) {
                        i += 1;
                    }
                }
            }
        }

        let mut h_count = 0u8;
        if body.get(i) == Some(&b'H') {
            i += 1;
            h_count = 1;
            if let Some(&d) = body.get(i).filter(|b| b.is_ascii_digit()) {
                h_count = d - b'0';
                i += 1;
            }
        }

        let mut charge: i8 = 0;
        if let Some(&sign) = body.get(i).filter(|&&b| b == b'+' || b == b'-') {
            let unit: i8 = if sign == b'+' { 1 } else { -1 };
            i += 1;
            let mut magnitude: i8 = 1;
            if body.get(i).is_some_and(u8::is_ascii_digit) {
                magnitude = 0;
                while let Some(&d) = body.get(i).filter(|b| b.is_ascii_digit()) {
                    magnitude = magnitude.saturating_mul(10).saturating_add((d - b'0') as i8);
                    i += 1;
                }
            } else {
                while body.get(i) == Some(&sign) {
                    magnitude += 1;
                    i += 1;
                }
            }
            charge = unit * magnitude;
        }

        if body.get(i) == Some(&b':') {
            i += 1;
            while body.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
        }
        if i != body.len() {
            return Err(unexpected(i));
        }
        self.pos = close + 1;
        Ok(Atom {
            element,
            aromatic,
            formal_charge: charge,
            h_count,
        })
    }

    fn finish(self) -> Result<MoleculeGraph, SmilesError> {
        if let Some((_, offset)) = self.pending {
            return Err(SmilesError::DanglingBond { offset });
        }
        if let Some(open) = self.rings.values().min_by_key(|o| o.offset) {
            return Err(SmilesError::UnbalancedRingClosure {
                offset: open.offset,
            });
        }
        if let Some(&(_, offset)) = self.branch_stack.first() {
            return Err(SmilesError::UnbalancedBranch { offset });
        }

        let mut implicit_aromatic = Vec::new();
        let mut bonds = Vec::with_capacity(self.bonds.len());
        for pb in &self.bonds {
            let both_aromatic = self.atoms[pb.a].aromatic && self.atoms[pb.b].aromatic;
            let order = match pb.symbol {
                Some(BondSymbol::Aromatic) if !both_aromatic => {
                    return Err(SmilesError::InvalidAromaticBond { offset: pb.offset })
                }
                Some(s) => s.order(),
                None if both_aromatic => {
                    implicit_aromatic.push(bonds.len());
                    BondOrder::Aromatic
                }
                None => BondOrder::Single,
            };
            bonds.push(Bond {
                a: pb.a,
                b: pb.b,
                order,
            });
        }

        let offsets: Vec<usize> = self.bonds.iter().map(|b| b.offset).collect();
        let graph_err = |e: GraphError| {
            let offset = match e {
                GraphError::InvalidEndpoint(i) | GraphError::AromaticBondOnAliphaticAtom(i) => {
                    offsets[i]
                }
                GraphError::SelfBond(a) | GraphError::DuplicateBond(a, _) => offsets
                    .iter()
                    .zip(&self.bonds)
                    .rev()
                    .find(|(_, pb)| pb.a == a || pb.b == a)
                    .map(|(o, _)| *o)
                    .unwrap_or(0),
            };
            SmilesError::InvalidGraph { offset, source: e }
        };

        // Implicit bonds between aromatic atoms of different rings are single.
        if !implicit_aromatic.is_empty() {
            let probe = MoleculeGraph::new(self.atoms.clone(), bonds.clone()).map_err(graph_err)?;
            for &bi in &implicit_aromatic {
                if !probe.bond_in_ring(bi) {
                    bonds[bi].order = BondOrder::Single;
                }
            }
        }

        let mut g = MoleculeGraph::new(self.atoms.clone(), bonds).map_err(graph_err)?;
        let mut atoms = self.atoms;
        let mut changed = false;
        for (i, atom) in atoms.iter_mut().enumerate() {
            if self.bracketed[i] {
                continue;
            }
            if let Some(h) = implied_hydrogens(atom.element, atom.aromatic, g.bond_valence(i)) {
                atom.h_count = h;
                changed = true;
            }
        }
        if changed {
            let bonds = g.bonds().to_vec();
            g = MoleculeGraph::new(atoms, bonds).map_err(graph_err)?;
        }
        Ok(g)
    }
}
