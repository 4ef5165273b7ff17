//! String edit distance used for SMILES similarity.

/// Levenshtein distance over `char`s (unit insert, delete, substitute).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            let cost = usize::from(ca != cb);
            row[j + 1] = (above + 1).min(row[j] + 1).min(diag + cost);
            diag = above;
        }
    }
    row[b.len()]
}

/// `1 − dist / max(|a|, |b|)`; 1.0 for two empty strings.
pub fn smiles_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Full-table DP, kept separate from the rolling-row implementation.
    fn full_table(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            d[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn fixtures() {
        assert_eq!(levenshtein("CCO", "CCO"), 0);
        assert_eq!(levenshtein("", "CCO"), 3);
        assert_eq!(levenshtein("CCO", ""), 3);
        assert_eq!(full_table("flaw", "lawn"), 2);
        assert_eq!(levenshtein("flaw", "lawn"), 2);
        assert_eq!(smiles_similarity("", ""), 1.0);
        assert_eq!(smiles_similarity("abcd", "abce"), 0.75);
    }

    proptest! {
        #[test]
        fn metric_axioms(a in "[CNO()=1c]{0,12}", b in "[CNO()=1c]{0,12}", c in "[CNO()=1c]{0,12}") {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, full_table(&a, &b));
            prop_assert_eq!(levenshtein(&a, &a), 0);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
            let s = smiles_similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
