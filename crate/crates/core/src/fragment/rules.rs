//! Cleavage rule tables over bond-environment descriptors.

use std::fmt;
use std::path::Path;

use crate::chem::{BondOrder, Element, MoleculeGraph};

pub const DEFAULT_RULES: &str = include_str!("../../config/brics_default.rules");
pub const RING_BOUNDARY_RULES: &str = include_str!("../../config/ring_boundary.rules");

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: rule targets ring bonds; only acyclic single bonds may be cleaved")]
    RingBondRule { line: usize },
    #[error("line {line}: only single bonds (`--`) may be cleaved")]
    UnsupportedBond { line: usize },
    #[error("reading rule table: {0}")]
    Io(#[from] std::io::Error),
}

/// Predicate over one endpoint of a candidate bond.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AtomDescriptor {
    /// `None` matches any element.
    pub elements: Option<Vec<Element>>,
    pub aromatic: Option<bool>,
    pub in_ring: Option<bool>,
    pub heavy_degree: Option<usize>,
    pub carbonyl: Option<bool>,
}

impl AtomDescriptor {
    pub fn matches(&self, g: &MoleculeGraph, atom: usize) -> bool {
        let a = g.atom(atom);
        if let Some(els) = &self.elements {
            if !els.contains(&a.element) {
                return false;
            }
        }
        if self.aromatic.is_some_and(|x| x != a.aromatic) {
            return false;
        }
        if self.in_ring.is_some_and(|x| x != g.atom_in_ring(atom)) {
            return false;
        }
        if let Some(d) = self.heavy_degree {
            let heavy = g
                .neighbors(atom)
                .iter()
                .filter(|&&(n, _)| g.atom(n).element != Element::H)
                .count();
            if heavy != d {
                return false;
            }
        }
        if let Some(want) = self.carbonyl {
            let has = g.neighbors(atom).iter().any(|&(n, bi)| {
                g.bond(bi).order == BondOrder::Double && g.atom(n).element == Element::O
            });
            if has != want {
                return false;
            }
        }
        true
    }

    fn parse(text: &str, line: usize) -> Result<Self, RuleError> {
        let err = |message: String| RuleError::Syntax { line, message };
        let mut terms = text.split(';').map(str::trim);
        let head = terms.next().filter(|t| !t.is_empty()).ok_or_else(|| err("empty descriptor".into()))?;
        let mut d = AtomDescriptor::default();
        if head != "*" {
            let mut els = Vec::new();
            for sym in head.split(',') {
                let e = Element::from_symbol(sym.trim())
                    .ok_or_else(|| err(format!("unknown element {sym:?}")))?;
                els.push(e);
            }
            d.elements = Some(els);
        }
        for term in terms {
            match term {
                "a" => d.aromatic = Some(true),
                "A" => d.aromatic = Some(false),
                "R" => d.in_ring = Some(true),
                "!R" => d.in_ring = Some(false),
                "=O" => d.carbonyl = Some(true),
                "!=O" => d.carbonyl = Some(false),
                t if t.starts_with('D') => {
                    let n = t[1..]
                        .parse()
                        .map_err(|_| err(format!("bad degree term {t:?}")))?;
                    d.heavy_degree = Some(n);
                }
                t => return Err(err(format!("unknown descriptor term {t:?}"))),
            }
        }
        Ok(d)
    }
}

impl fmt::Display for AtomDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.elements {
            None => f.write_str("*")?,
            Some(els) => {
                let syms: Vec<&str> = els.iter().map(|e| e.symbol()).collect();
                f.write_str(&syms.join(","))?;
            }
        }
        match self.aromatic {
            Some(true) => f.write_str(";a")?,
            Some(false) => f.write_str(";A")?,
            None => {}
        }
        match self.in_ring {
            Some(true) => f.write_str(";R")?,
            Some(false) => f.write_str(";!R")?,
            None => {}
        }
        if let Some(d) = self.heavy_degree {
            write!(f, ";D{d}")?;
        }
        match self.carbonyl {
            Some(true) => f.write_str(";=O")?,
            Some(false) => f.write_str(";!=O")?,
            None => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleavageRule {
    pub side_a: AtomDescriptor,
    pub side_b: AtomDescriptor,
}

impl CleavageRule {
    pub fn matches(&self, g: &MoleculeGraph, u: usize, v: usize) -> bool {
        (self.side_a.matches(g, u) && self.side_b.matches(g, v))
            || (self.side_a.matches(g, v) && self.side_b.matches(g, u))
    }
}

impl fmt::Display for CleavageRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -- {}", self.side_a, self.side_b)
    }
}

/// Ordered rule list; only acyclic single bonds are ever cleaved.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CleavageRuleTable {
    rules: Vec<CleavageRule>,
}

impl CleavageRuleTable {
    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if body.contains("-@-") {
                return Err(RuleError::RingBondRule { line });
            }
            let Some((a, b)) = body.split_once("--") else {
                if body.contains("==") || body.contains("-#-") {
                    return Err(RuleError::UnsupportedBond { line });
                }
                return Err(RuleError::Syntax {
                    line,
                    message: "expected `A -- B`".into(),
                });
            };
            if b.contains("--") {
                return Err(RuleError::Syntax {
                    line,
                    message: "more than one bond separator".into(),
                });
            }
            rules.push(CleavageRule {
                side_a: AtomDescriptor::parse(a, line)?,
                side_b: AtomDescriptor::parse(b, line)?,
            });
        }
        Ok(CleavageRuleTable { rules })
    }

    pub fn load(path: &Path) -> Result<Self, RuleError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The sixteen-rule default table.
    pub fn brics_default() -> Self {
        Self::parse(DEFAULT_RULES).expect("bundled default rule table parses")
    }

    /// A single rule cutting every ring–non-ring single bond.
    pub fn ring_boundary() -> Self {
        Self::parse(RING_BOUNDARY_RULES).expect("bundled boundary rule table parses")
    }

    pub fn rules(&self) -> &[CleavageRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.rules.iter().map(|r| format!("{r}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn bundled_tables() {
        assert_eq!(CleavageRuleTable::brics_default().len(), 16);
        assert_eq!(CleavageRuleTable::ring_boundary().len(), 1);
    }

    #[test]
    fn table_round_trips_through_text() {
        let t = CleavageRuleTable::brics_default();
        assert_eq!(CleavageRuleTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            CleavageRuleTable::parse("C;R -@- C;R"),
            Err(RuleError::RingBondRule { line: 1 })
        ));
        assert!(matches!(
            CleavageRuleTable::parse("# c\nC == O"),
            Err(RuleError::UnsupportedBond { line: 2 })
        ));
        assert!(matches!(
            CleavageRuleTable::parse("Xq -- C"),
            Err(RuleError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            CleavageRuleTable::parse("C;Q -- C"),
            Err(RuleError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn descriptor_terms() {
        let g = parse_smiles("CC(=O)Oc1ccccc1").unwrap();
        let d = AtomDescriptor::parse("C;!R;=O;D3", 1).unwrap();
        assert!(d.matches(&g, 1));
        assert!(!d.matches(&g, 0));
        let aro = AtomDescriptor::parse("C;a;R", 1).unwrap();
        assert!(aro.matches(&g, 4));
        assert!(!aro.matches(&g, 1));
    }
}
