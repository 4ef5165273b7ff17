use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cliffmask(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cliffmask"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("CLIFFMASK_LOG", "error")
        .output()
        .unwrap()
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn missing_artifact_names_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    let o = cliffmask(dir.path(), &["pretrain"]);
    assert_eq!(o.status.code(), Some(3));
    let r = report(&o);
    assert_eq!(r["error"], "missing_artifact");
    assert!(r["message"].as_str().unwrap().contains("`vocab`"));
}

#[test]
fn bad_configuration_is_rejected_before_work() {
    let dir = tempfile::tempdir().unwrap();
    for set in ["encoder.depht=3", "split.fractions=[0.5, 0.2, 0.2]", "workers=0"] {
        let o = cliffmask(dir.path(), &["vocab", "--set", set]);
        assert_eq!(o.status.code(), Some(2), "{set}");
        assert_eq!(report(&o)["error"], "config_invalid");
    }
    let o = cliffmask(dir.path(), &["vocab", "--image-size", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn cliffs_on_a_three_molecule_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("potency.csv");
    // Two chain homologs a log unit apart, and an unrelated ring.
    fs::write(&csv, "smiles,y\nCCCCCCCCCCCCO,5.0\nCCCCCCCCCCCCCO,7.0\nc1ccccc1,6.0\n").unwrap();
    let out = dir.path().join("out");
    let o = cliffmask(&out, &["cliffs", "--set", &format!("paths.potency={:?}", csv.to_str().unwrap())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pairs = fs::read_to_string(out.join("cliff_pairs.csv")).unwrap();
    let rows: Vec<&str> = pairs.lines().skip(1).collect();
    assert_eq!(rows.len(), 1, "{pairs}");
    assert!(rows[0].starts_with("m0,m1,"), "{pairs}");
    assert_eq!(fs::read_to_string(out.join("records.csv")).unwrap().lines().count(), 4);
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("runs/cliffs.json")).unwrap()).unwrap();
    assert_eq!(record["inputs"][0]["path"].as_str().unwrap(), csv.to_str().unwrap());
    assert!(record["outputs"].as_array().unwrap().len() >= 2);
}

#[test]
fn benzene_gets_one_sample_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.smi");
    fs::write(&corpus, "c1ccccc1\n").unwrap();
    let out = dir.path().join("out");
    let base = ["--set", &format!("paths.corpus={:?}", corpus.to_str().unwrap()), "--set", "vocab.min_atoms=1"];
    let mut args = vec!["vocab"];
    args.extend(base);
    assert!(cliffmask(&out, &args).status.success());
    let mut args = vec!["masks", "--gamma", "0.5"];
    args.extend(base);
    let o = cliffmask(&out, &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(out.join("masks/manifest.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = manifest.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let tasks: Vec<&str> = records.iter().map(|r| r["task"].as_str().unwrap()).collect();
    assert_eq!(tasks, ["AMPP", "BMPP", "MMPP"]);
    for r in &records {
        assert_eq!(r["gamma"], 0.5);
        assert!(!r["omega"].as_array().unwrap().is_empty());
    }

    // Rerunning into a populated directory without a manifest is refused.
    fs::remove_file(out.join("masks/manifest.jsonl")).unwrap();
    assert_eq!(cliffmask(&out, &args).status.code(), Some(1));
}
