use std::collections::{BTreeMap, HashSet};

use cliffmask_core::bench::*;
use cliffmask_core::chem::{
    canonical_smiles, ecfp, levenshtein, murcko_scaffold, parse_smiles, tanimoto, FingerprintSpec,
};
use cliffmask_core::desk::potency_series;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn desk_records(series: usize, per: usize, seed: u64) -> Vec<PotencyRecord> {
    records_from_pk(&potency_series(series, per, seed))
}

/// Quadratic scan straight from the chemistry primitives.
fn oracle_pairs(records: &[PotencyRecord], threshold: f64) -> Vec<(usize, usize, [bool; 3])> {
    let spec = FingerprintSpec::default();
    let graphs: Vec<_> = records.iter().map(|r| parse_smiles(&r.smiles).unwrap()).collect();
    let fps: Vec<_> = graphs.iter().map(|g| ecfp(g, spec)).collect();
    let scafs: Vec<_> = graphs.iter().map(murcko_scaffold).collect();
    let scaf_fps: Vec<_> = scafs.iter().map(|s| ecfp(s, spec)).collect();
    let canon: Vec<String> = graphs.iter().map(canonical_smiles).collect();
    let mut out = Vec::new();
    for i in 0..records.len() {
        for j in 0..records.len() {
            if i >= j {
                continue;
            }
            let d = (records[i].pk - records[j].pk).abs();
            if d < 1.0 - 1e-9 {
                continue;
            }
            let sub = tanimoto(&fps[i], &fps[j]).unwrap();
            let scaf = if scafs[i].atom_count() == 0 || scafs[j].atom_count() == 0 {
                0.0
            } else {
                tanimoto(&scaf_fps[i], &scaf_fps[j]).unwrap()
            };
            let len = canon[i].chars().count().max(canon[j].chars().count()) as f64;
            let smi = 1.0 - levenshtein(&canon[i], &canon[j]) as f64 / len;
            let c = [sub > threshold, scaf > threshold, smi > threshold];
            if c.iter().any(|&b| b) {
                out.push((i, j, c));
            }
        }
    }
    out
}

#[test]
fn cliff_pairs_match_quadratic_scan() {
    let records = desk_records(20, 10, 3);
    assert!(records.len() >= 190);
    let records = &records[..records.len().min(200)];
    let cfg = CliffConfig::default();
    let f = featurize(records, cfg.spec().unwrap());
    let rep = find_cliff_pairs(records, &f, &cfg);
    let got: Vec<(usize, usize, [bool; 3])> = rep
        .pairs
        .iter()
        .map(|p| (p.i, p.j, [p.criteria.substructure, p.criteria.scaffold, p.criteria.smiles]))
        .collect();
    let expected = oracle_pairs(records, 0.9);
    assert_eq!(got, expected);
    assert!(!expected.is_empty());
    for k in 0..3 {
        assert!(expected.iter().any(|p| p.2[k]), "criterion {k} never fires");
    }
    for p in &rep.pairs {
        assert!(p.i < p.j && p.delta_pk >= 1.0 - 1e-9);
    }
    let members: HashSet<usize> = expected.iter().flat_map(|p| [p.0, p.1]).collect();
    for (i, &flag) in rep.flags.iter().enumerate() {
        assert_eq!(flag, members.contains(&i));
    }
}

#[test]
fn kld_of_shifted_normals() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n0 = Normal::new(0.0, 1.0).unwrap();
    let n1 = Normal::new(1.0, 1.0).unwrap();
    let a: Vec<f64> = (0..10_000).map(|_| n0.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..10_000).map(|_| n1.sample(&mut rng)).collect();
    // KL(N(0,1) || N(1,1)) = (μ1 − μ0)² / 2.
    let closed = 0.5;
    let got = kld(&b, &a, KlDirection::TruthPred).unwrap();
    assert!((got - closed).abs() <= 0.05, "{got}");
    assert!(kld(&a, &a, KlDirection::TruthPred).unwrap() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kld_is_nonnegative(
        a in prop::collection::vec(-10.0f64..10.0, 2..40),
        b in prop::collection::vec(-10.0f64..10.0, 2..40),
    ) {
        prop_assert!(kld(&a, &b, KlDirection::TruthPred).unwrap() >= 0.0);
        prop_assert!(kld(&a, &b, KlDirection::PredTruth).unwrap() >= 0.0);
    }

    #[test]
    fn rmse_properties(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, any::<bool>()), 1..30)) {
        let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
        let t: Vec<f64> = pairs.iter().map(|x| x.1).collect();
        let flags: Vec<bool> = pairs.iter().map(|x| x.2).collect();
        let r = rmse(&p, &t).unwrap();
        prop_assert!(r >= 0.0 && mae(&p, &t).unwrap() >= 0.0);
        prop_assert_eq!(rmse(&p, &p).unwrap(), 0.0);
        prop_assert_eq!(r == 0.0, p == t);
        prop_assert_eq!(rmse_cliff(&p, &t, &vec![true; p.len()]).unwrap(), r);
        let sub: Vec<usize> = (0..p.len()).filter(|&i| flags[i]).collect();
        match rmse_cliff(&p, &t, &flags) {
            Ok(v) => {
                let sp: Vec<f64> = sub.iter().map(|&i| p[i]).collect();
                let st: Vec<f64> = sub.iter().map(|&i| t[i]).collect();
                prop_assert!((v - rmse(&sp, &st).unwrap()).abs() < 1e-12);
            }
            Err(_) => prop_assert!(sub.is_empty()),
        }
    }
}

fn assert_partition(s: &DatasetSplit, n: usize) {
    let mut all: Vec<usize> = s.train.iter().chain(&s.valid).chain(&s.test).copied().collect();
    all.sort();
    assert_eq!(all, (0..n).collect::<Vec<_>>());
}

#[test]
fn split_invariants_on_desk_datasets() {
    for seed in 0..4 {
        let records = desk_records(25, 8, seed);
        let cfg = CliffConfig::default();
        let f = featurize(&records, cfg.spec().unwrap());
        let rep = find_cliff_pairs(&records, &f, &cfg);

        let s = scaffold_split(&f, [0.8, 0.1, 0.1]);
        assert_partition(&s, records.len());
        let scaf_sets: Vec<HashSet<&str>> = [&s.train, &s.valid, &s.test]
            .iter()
            .map(|p| p.iter().map(|&i| f[i].scaffold.as_str()).collect())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                assert!(scaf_sets[a].is_disjoint(&scaf_sets[b]));
            }
        }

        let st = stratified_cluster_split(&f, &rep.flags, 0.8, 0.6, seed);
        assert_partition(&st, records.len());
        assert_eq!(st, stratified_cluster_split(&f, &rep.flags, 0.8, 0.6, seed));
        let clusters = leader_clusters(&f, 0.6);
        let train: HashSet<usize> = st.train.iter().copied().collect();
        let mut per: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for (i, &c) in clusters.iter().enumerate() {
            if rep.flags[i] {
                let e = per.entry(c).or_default();
                e.0 += 1;
                e.1 += usize::from(train.contains(&i));
            }
        }
        for (total, in_train) in per.values() {
            let target = 0.8 * *total as f64;
            assert!((*in_train as f64 - target).abs() <= 1.0);
        }
    }
}

#[test]
fn pca_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let d = 12;
    // Anisotropic cloud so the top two eigenvalues are well separated.
    let feats: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..d).map(|k| normal.sample(&mut rng) * (d - k) as f64 + k as f64).collect())
        .collect();
    let (pca, coords) = pca_2d(&feats).unwrap();

    let m = nalgebra::DMatrix::from_fn(feats.len(), d, |i, j| feats[i][j]);
    let mean = m.row_mean();
    let centered = nalgebra::DMatrix::from_fn(feats.len(), d, |i, j| m[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (feats.len() as f64 - 1.0);
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    for r in 0..2 {
        let k = order[r];
        assert!((pca.variances[r] - eig.eigenvalues[k]).abs() < 1e-8 * eig.eigenvalues[k]);
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let dot: f64 = v.iter().zip(&pca.components[r]).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8);
        let c = &pca.components[r];
        let lead = (0..d).fold(0, |b, i| if c[i].abs() > c[b].abs() { i } else { b });
        assert!(c[lead] > 0.0);
    }
    for (f, p) in feats.iter().zip(&coords) {
        assert_eq!(*p, pca.project(f));
    }
}

#[test]
fn collapse_curve_matches_flat_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = rand_distr::Uniform::new(0.0, 1.0).unwrap();
    let coords: Vec<[f64; 2]> = (0..40).map(|_| [u.sample(&mut rng) * 10.0, u.sample(&mut rng) * 10.0]).collect();
    let pairs: Vec<(usize, usize, f64)> = (0..100)
        .map(|k| (k % 40, (k * 7 + 3) % 40, if k == 0 { 1.0 } else { u.sample(&mut rng) }))
        .collect();
    let curve = collapse_curve(&coords, &pairs, &DEFAULT_BIN_EDGES).unwrap();
    let mut flat: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(i, j, s) in &pairs {
        let bin = ((s * 10.0).floor() as usize).min(9);
        let d = ((coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2)).sqrt();
        flat.entry(bin).or_default().push(d);
    }
    assert_eq!(curve.len(), flat.len());
    for (p, (bin, ds)) in curve.iter().zip(&flat) {
        assert!((p.center - (*bin as f64 / 10.0 + 0.05)).abs() < 1e-12);
        assert_eq!(p.pairs, ds.len());
        assert!((p.mean_distance - ds.iter().sum::<f64>() / ds.len() as f64).abs() < 1e-12);
    }
}

#[test]
fn output_files() {
    let records = desk_records(5, 6, 1);
    let cfg = CliffConfig::default();
    let f = featurize(&records, cfg.spec().unwrap());
    let rep = find_cliff_pairs(&records, &f, &cfg);
    let dir = tempfile::tempdir().unwrap();
    write_cliff_pairs(&dir.path().join("cliff_pairs.csv"), &records, &rep.pairs).unwrap();
    let text = std::fs::read_to_string(dir.path().join("cliff_pairs.csv")).unwrap();
    assert!(text.starts_with("i,j,criteria,delta_pk"));
    assert_eq!(text.lines().count(), rep.pairs.len() + 1);
    let s = scaffold_split(&f, [0.8, 0.1, 0.1]);
    s.write_csv(&dir.path().join("split.csv"), &records).unwrap();
    let text = std::fs::read_to_string(dir.path().join("split.csv")).unwrap();
    assert_eq!(text.lines().count(), records.len() + 1);
    let m = Metrics::compute(&[1.0, 2.0, 3.0], &[1.0, 2.5, 2.0], &[false, true, true]).unwrap();
    m.write_json(&dir.path().join("metrics.json")).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["n_c"], 2);
}
