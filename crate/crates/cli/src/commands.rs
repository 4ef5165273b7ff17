//! Subcommand bodies.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cliffmask_core::bench::{
    cliff_distance, collapse_curve, featurize, find_cliff_pairs, pca_2d, random_split, scaffold_split,
    stratified_cluster_split, write_cliff_pairs, BenchError, DatasetSplit, Metrics, PotencyRecord, SplitKind,
    DEFAULT_BIN_EDGES,
};
use cliffmask_core::chem::{build_atom_vocab, parse_smiles, tanimoto, BondOrder};
use cliffmask_core::depict::{layout_2d, write_samples, DepictError, MaskVocabs, MANIFEST_FILE};
use cliffmask_core::fragment::{build_motif_vocab, filter_corpus_by_vocab, fragment, MotifVocab};
use cliffmask_model::finetune::{predict_indices, FINETUNE_LOG};
use cliffmask_model::{
    embed, finetune, finetune_grid, load_checkpoint, load_pretext, pretrain, read_embeddings, save_checkpoint,
    sme_attribution, write_embeddings, write_finetune_log, HeadConfig, Model, Real, RegressionExample, TrainState,
};
use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use crate::artifacts::*;
use crate::config::{Precision, RunConfig};
use crate::record::{blob_digest, digest_paths, RunRecord};
use crate::{CliError, Command, SweepArgs};

/// Batch size for inference-only passes.
const INFERENCE_BATCH: usize = 32;

/// Result of one subcommand: its run record and headline numbers.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub out: PathBuf,
    pub record: RunRecord,
    pub values: Value,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} finished; artifacts in {}", self.command, self.out.display())?;
        if let Value::Object(map) = &self.values {
            for (k, v) in map {
                writeln!(f, "  {k}: {v}")?;
            }
        }
        write!(f, "  run record: {}/{}.json", RUNS_DIR, self.command)
    }
}

/// Tracks what a subcommand reads and writes.
struct Run<'a> {
    cfg: &'a RunConfig,
    name: &'static str,
    out: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig, name: &'static str) -> Self {
        Run {
            cfg,
            name,
            out: cfg.paths.out.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// A prior artifact, recorded as an input.
    fn need(&mut self, rel: &str, producer: &'static str) -> Result<PathBuf, CliError> {
        let p = require(self.out.join(rel), producer)?;
        self.inputs.push(p.clone());
        Ok(p)
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    /// Path of an artifact this run writes.
    fn output(&mut self, rel: &str) -> PathBuf {
        let p = self.out.join(rel);
        self.outputs.push(p.clone());
        p
    }

    fn source_inputs(&mut self) {
        for p in [&self.cfg.paths.corpus, &self.cfg.paths.potency, &self.cfg.paths.rules]
            .into_iter()
            .flatten()
        {
            if p.exists() {
                self.inputs.push(p.clone());
            }
        }
    }

    fn finish(self) -> Result<RunRecord, CliError> {
        let runs = self.out.join(RUNS_DIR);
        fs::create_dir_all(&runs)?;
        let text = self.cfg.to_toml()?;
        let config_file = format!("{RUNS_DIR}/{}.toml", self.name);
        fs::write(self.out.join(&config_file), &text)?;
        let mut inputs = self.inputs;
        inputs.sort();
        inputs.dedup();
        let record = RunRecord {
            command: self.name.to_string(),
            seed: self.cfg.seed,
            config_digest: blob_digest(text.as_bytes()),
            config_file,
            inputs: digest_paths(&self.out, &inputs)?,
            outputs: digest_paths(&self.out, &self.outputs)?,
        };
        write_json(&runs.join(format!("{}.json", self.name)), &record)?;
        Ok(record)
    }
}

/// Runs one subcommand under `cfg`.
pub fn execute(cfg: &RunConfig, command: &Command) -> Result<Summary, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.paths.out)?;
    let mut run = Run::new(cfg, command.name());
    run.source_inputs();
    info!("{} in {}", command.name(), cfg.paths.out.display());
    let values = match command {
        Command::Vocab => vocab(&mut run)?,
        Command::Masks(sweep) => masks(&mut run, sweep)?,
        Command::Pretrain(sweep) => pretrain_cmd(&mut run, sweep)?,
        Command::Finetune { checkpoint } => finetune_cmd(&mut run, checkpoint.as_deref())?,
        Command::Eval => eval(&mut run)?,
        Command::Cliffs => cliffs(&mut run)?,
        Command::Split => split(&mut run)?,
        Command::Attribute { smiles } => attribute(&mut run, smiles)?,
        Command::Embed { checkpoint } => embed_cmd(&mut run, checkpoint.as_deref())?,
        Command::Collapse => collapse(&mut run)?,
    };
    let record = run.finish()?;
    Ok(Summary {
        command: command.name(),
        out: cfg.paths.out.clone(),
        record,
        values,
    })
}

macro_rules! at_precision {
    ($cfg:expr, $f:ident($($arg:expr),* $(,)?)) => {
        match $cfg.precision {
            Precision::F32 => $f::<f32>($($arg),*),
            Precision::F64 => $f::<f64>($($arg),*),
        }
    };
}

fn vocab(run: &mut Run<'_>) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let mut kept = Vec::new();
    let mut graphs = Vec::new();
    let mut rejected = 0;
    for s in source_corpus(cfg)? {
        match parse_smiles(&s) {
            Ok(g) => {
                kept.push(s);
                graphs.push(g);
            }
            Err(e) => {
                warn!("corpus entry {s}: {e}");
                rejected += 1;
            }
        }
    }
    let atoms = build_atom_vocab(graphs.iter(), cfg.vocab.atom_size)?;
    let rules = rules(cfg)?;
    let motifs = build_motif_vocab(&graphs, &rules, cfg.vocab.motif_size, cfg.vocab.min_atoms)?;
    let covered = filter_corpus_by_vocab(&graphs, &rules, &motifs).len();
    let mut text = kept.join("\n");
    text.push('\n');
    fs::write(run.output(CORPUS), text)?;
    write_atom_vocab(&run.output(ATOM_VOCAB), &atoms)?;
    motifs.write_csv(&run.output(MOTIF_VOCAB))?;
    Ok(json!({
        "molecules": kept.len(),
        "rejected": rejected,
        "atom_types": atoms.symbols(),
        "motifs": motifs.len(),
        "molecules_with_motif": covered,
    }))
}

fn gammas(sweep: &SweepArgs) -> Vec<Option<f64>> {
    if sweep.gamma_list.is_empty() {
        vec![None]
    } else {
        sweep.gamma_list.iter().map(|&g| Some(g)).collect()
    }
}

fn masks(run: &mut Run<'_>, sweep: &SweepArgs) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let corpus = read_smiles_file(&run.need(CORPUS, "vocab")?)?;
    let atoms = read_atom_vocab(&run.need(ATOM_VOCAB, "vocab")?)?;
    let motifs = MotifVocab::read_csv(&run.need(MOTIF_VOCAB, "vocab")?)?;
    let rules = rules(cfg)?;
    let vocabs = MaskVocabs {
        atoms: &atoms,
        motifs: &motifs,
        rules: &rules,
    };
    let mut reports = serde_json::Map::new();
    for gamma in gammas(sweep) {
        let mut depict = cfg.depict.clone();
        if let Some(g) = gamma {
            depict.gamma = g;
        }
        depict.validate()?;
        let rel = sweep_dir(MASKS_DIR, gamma);
        let dir = cfg.paths.out.join(&rel);
        if dir.exists() {
            if !dir.join(MANIFEST_FILE).exists() {
                return Err(CliError::BadArtifact {
                    path: dir,
                    message: "exists but holds no manifest; refusing to replace it".into(),
                });
            }
            fs::remove_dir_all(&dir)?;
        }
        let report = write_samples(&corpus, &vocabs, &depict, cfg.seed, &dir)?;
        write_json(&dir.join(SUMMARY), &report)?;
        run.output(&rel);
        info!("{rel}: {:?} samples", report.samples);
        reports.insert(rel, serde_json::to_value(&report)?);
    }
    Ok(Value::Object(reports))
}

fn pretrain_cmd(run: &mut Run<'_>, sweep: &SweepArgs) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let atoms = read_atom_vocab(&run.need(ATOM_VOCAB, "vocab")?)?;
    let motifs = MotifVocab::read_csv(&run.need(MOTIF_VOCAB, "vocab")?)?;
    let heads = HeadConfig::pretext(atoms.len(), BondOrder::ALL.len(), motifs.len());
    let mut out = serde_json::Map::new();
    for gamma in gammas(sweep) {
        let manifest = run.need(&format!("{}/{MANIFEST_FILE}", sweep_dir(MASKS_DIR, gamma)), "masks")?;
        let rel = sweep_dir(PRETRAIN_DIR, gamma);
        let dir = cfg.paths.out.join(&rel);
        let summary = at_precision!(cfg, pretrain_one(cfg, &manifest, &dir, heads))?;
        write_json(&dir.join(SUMMARY), &summary)?;
        run.output(&rel);
        out.insert(rel, summary);
    }
    Ok(Value::Object(out))
}

fn pretrain_one<T: Real>(cfg: &RunConfig, manifest: &Path, dir: &Path, heads: HeadConfig) -> Result<Value, CliError> {
    let examples = load_pretext(manifest, &cfg.encoder)?;
    let model = Model::<T>::new(cfg.encoder.clone(), heads)?;
    info!("pre-training {} parameters on {} samples", model.param_count(), examples.len());
    let rep = pretrain(model, &examples, &cfg.optimizer, &cfg.pretrain, Some(dir))?;
    let epochs: Vec<Value> = rep
        .epochs
        .iter()
        .map(|e| {
            json!({
                "epoch": e.epoch,
                "train_total": e.train_total(),
                "valid_total": e.valid_total(),
                "valid_accuracy": cliffmask_core::depict::MaskLevel::ALL
                    .iter()
                    .map(|&l| (l.task(), e.valid_accuracy(l)))
                    .collect::<std::collections::BTreeMap<_, _>>(),
            })
        })
        .collect();
    Ok(json!({
        "best_epoch": rep.best_epoch,
        "train_samples": rep.train_samples,
        "valid_samples": rep.valid_samples,
        "epochs": epochs,
    }))
}

/// Records, split and cliff flags shared by the supervised subcommands.
fn supervised_inputs(run: &mut Run<'_>) -> Result<(Vec<PotencyRecord>, DatasetSplit, Vec<bool>), CliError> {
    let records = potency_records(run.cfg)?;
    let split = read_split(&run.need(SPLIT, "split")?, &records, run.cfg.split.kind)?;
    let (flags, _) = read_cliffs(&run.need(CLIFF_PAIRS, "cliffs")?, &records)?;
    Ok((records, split, flags))
}

fn load_model<T: Real>(cfg: &RunConfig, path: &Path) -> Result<Model<T>, CliError> {
    let (model, _) = load_checkpoint::<T>(path)?;
    let enc = model.encoder_config();
    if enc.image_size != cfg.encoder.image_size || enc.patch_size != cfg.encoder.patch_size {
        return Err(CliError::ConfigInvalid(format!(
            "{} expects {} px images in {} px patches",
            path.display(),
            enc.image_size,
            enc.patch_size
        )));
    }
    Ok(model)
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    smiles: &'a str,
    pk: f64,
    prediction: f64,
    cliff: bool,
}

fn write_predictions(
    path: &Path,
    records: &[PotencyRecord],
    idx: &[usize],
    pred: &[f64],
    flags: &[bool],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for (&i, &p) in idx.iter().zip(pred) {
        w.serialize(PredictionRow {
            id: &records[i].id,
            smiles: &records[i].smiles,
            pk: records[i].pk,
            prediction: p,
            cliff: flags[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

/// RMSE on `test` of predicting the mean training pK.
fn mean_baseline(records: &[PotencyRecord], train: &[usize], test: &[usize]) -> Option<f64> {
    if train.is_empty() || test.is_empty() {
        return None;
    }
    let mean = train.iter().map(|&i| records[i].pk).sum::<f64>() / train.len() as f64;
    Some((test.iter().map(|&i| (records[i].pk - mean).powi(2)).sum::<f64>() / test.len() as f64).sqrt())
}

fn finetune_cmd(run: &mut Run<'_>, checkpoint: Option<&Path>) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let (records, split, flags) = supervised_inputs(run)?;
    let ckpt = match checkpoint {
        Some(p) => require(p.to_path_buf(), "pretrain")?,
        None => run.need(&format!("{PRETRAIN_DIR}/{CHECKPOINT}"), "pretrain")?,
    };
    run.input(&ckpt);
    fs::create_dir_all(cfg.paths.out.join(FINETUNE_DIR))?;
    at_precision!(cfg, finetune_one(run, &ckpt, &records, &split, &flags))
}

fn finetune_one<T: Real>(
    run: &mut Run<'_>,
    ckpt: &Path,
    records: &[PotencyRecord],
    split: &DatasetSplit,
    flags: &[bool],
) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let model = load_model::<T>(cfg, ckpt)?;
    let examples: Vec<RegressionExample> = depict_records(records, cfg)?
        .into_iter()
        .zip(records)
        .map(|(pixels, r)| RegressionExample { pixels, target: r.pk })
        .collect();
    let (opt, rep) = if cfg.finetune_grid {
        finetune_grid(&model, &examples, split, flags, &cfg.finetune_optimizer, &cfg.finetune)?
    } else {
        let rep = finetune(model, &examples, split, flags, &cfg.finetune_optimizer, &cfg.finetune, None)?;
        (cfg.finetune_optimizer.clone(), rep)
    };
    write_finetune_log(&run.output(&format!("{FINETUNE_DIR}/{FINETUNE_LOG}")), &rep.log)?;
    let state = TrainState {
        seed: cfg.finetune.seed,
        step: 0,
        epoch: rep.best_epoch as u64,
        rng_word_pos: String::new(),
    };
    save_checkpoint(&run.output(&format!("{FINETUNE_DIR}/{CHECKPOINT}")), &rep.model, &state)?;
    write_predictions(
        &run.output(&format!("{FINETUNE_DIR}/{PREDICTIONS}")),
        records,
        &rep.test,
        &rep.predictions,
        flags,
    )?;
    if let Some(m) = &rep.metrics {
        m.write_json(&run.output(&format!("{FINETUNE_DIR}/{METRICS}")))?;
    }
    Ok(json!({
        "best_epoch": rep.best_epoch,
        "best_valid_rmse": rep.best_valid_rmse,
        "lr": opt.lr,
        "batch_size": opt.batch_size,
        "train": rep.train.len(),
        "valid": rep.valid.len(),
        "test": rep.test.len(),
        "test_metrics": rep.metrics,
        "mean_baseline_rmse": mean_baseline(records, &rep.train, &rep.test),
    }))
}

fn eval(run: &mut Run<'_>) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let (records, split, flags) = supervised_inputs(run)?;
    let ckpt = run.need(&format!("{FINETUNE_DIR}/{CHECKPOINT}"), "finetune")?;
    fs::create_dir_all(cfg.paths.out.join(EVAL_DIR))?;
    at_precision!(cfg, eval_one(run, &ckpt, &records, &split, &flags))
}

fn eval_one<T: Real>(
    run: &mut Run<'_>,
    ckpt: &Path,
    records: &[PotencyRecord],
    split: &DatasetSplit,
    flags: &[bool],
) -> Result<Value, CliError> {
    let model = load_model::<T>(run.cfg, ckpt)?;
    let test: Vec<PotencyRecord> = split.test.iter().map(|&i| records[i].clone()).collect();
    let examples: Vec<RegressionExample> = depict_records(&test, run.cfg)?
        .into_iter()
        .zip(&test)
        .map(|(pixels, r)| RegressionExample { pixels, target: r.pk })
        .collect();
    let local: Vec<usize> = (0..test.len()).collect();
    let pred = predict_indices(&model, &examples, &local, INFERENCE_BATCH)?;
    write_predictions(&run.output(&format!("{EVAL_DIR}/{PREDICTIONS}")), records, &split.test, &pred, flags)?;
    let truth: Vec<f64> = test.iter().map(|r| r.pk).collect();
    let tflags: Vec<bool> = split.test.iter().map(|&i| flags[i]).collect();
    let metrics = Metrics::compute(&pred, &truth, &tflags)?;
    metrics.write_json(&run.output(&format!("{EVAL_DIR}/{METRICS}")))?;
    Ok(serde_json::to_value(metrics)?)
}

fn cliffs(run: &mut Run<'_>) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let records = potency_records(cfg)?;
    let features = featurize(&records, cfg.cliffs.spec()?);
    let report = find_cliff_pairs(&records, &features, &cfg.cliffs);
    write_records(&run.output(RECORDS), &records)?;
    write_cliff_pairs(&run.output(CLIFF_PAIRS), &records, &report.pairs)?;
    let count = |f: fn(&cliffmask_core::bench::CliffPair) -> bool| report.pairs.iter().filter(|p| f(p)).count();
    Ok(json!({
        "records": records.len(),
        "pairs": report.pairs.len(),
        "cliff_compounds": report.cliff_count(),
        "by_substructure": count(|p| p.criteria.substructure),
        "by_scaffold": count(|p| p.criteria.scaffold),
        "by_smiles": count(|p| p.criteria.smiles),
    }))
}

fn split(run: &mut Run<'_>) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let records = potency_records(cfg)?;
    let features = featurize(&records, cfg.cliffs.spec()?);
    let s = &cfg.split;
    let split = match s.kind {
        SplitKind::Scaffold => scaffold_split(&features, s.fractions),
        SplitKind::Random => random_split(records.len(), s.fractions, cfg.seed),
        SplitKind::StratifiedCluster => {
            let (flags, _) = read_cliffs(&run.need(CLIFF_PAIRS, "cliffs")?, &records)?;
            stratified_cluster_split(&features, &flags, s.train_fraction, s.cluster_threshold, cfg.seed)
        }
    };
    split.write_csv(&run.output(SPLIT), &records)?;
    Ok(json!({
        "kind": s.kind,
        "train": split.train.len(),
        "valid": split.valid.len(),
        "test": split.test.len(),
    }))
}

#[derive(Serialize)]
struct AttributionRow<'a> {
    id: &'a str,
    smiles: &'a str,
    fragment: &'a str,
    atoms: String,
    prediction: f64,
    masked: f64,
    attribution: f64,
}

fn attribute(run: &mut Run<'_>, smiles: &[String]) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let ckpt = run.need(&format!("{FINETUNE_DIR}/{CHECKPOINT}"), "finetune")?;
    let molecules: Vec<(String, String)> = if smiles.is_empty() {
        let records = potency_records(cfg)?;
        let split = read_split(&run.need(SPLIT, "split")?, &records, cfg.split.kind)?;
        split
            .test
            .iter()
            .map(|&i| (records[i].id.clone(), records[i].smiles.clone()))
            .collect()
    } else {
        smiles.iter().enumerate().map(|(i, s)| (format!("s{i}"), s.clone())).collect()
    };
    at_precision!(cfg, attribute_all(run, &ckpt, &molecules))
}

fn attribute_all<T: Real>(run: &mut Run<'_>, ckpt: &Path, molecules: &[(String, String)]) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let model = load_model::<T>(cfg, ckpt)?;
    let rules = rules(cfg)?;
    let mut w = csv::Writer::from_path(run.output(ATTRIBUTIONS))?;
    let mut rows = 0;
    for (id, smi) in molecules {
        let g = parse_smiles(smi)?;
        let layout = layout_2d(&g, cfg.seed).map_err(DepictError::from)?;
        for occ in fragment(&g, &rules) {
            let a = sme_attribution(
                &model,
                &g,
                &layout,
                &occ.atoms,
                &occ.bonds,
                &cfg.depict.render,
                &cfg.depict.hsv,
                cfg.depict.dilation,
            )?;
            w.serialize(AttributionRow {
                id,
                smiles: smi,
                fragment: &occ.smiles,
                atoms: occ.atoms.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                prediction: a.full,
                masked: a.masked,
                attribution: a.attribution,
            })?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(json!({ "molecules": molecules.len(), "fragments": rows }))
}

fn embed_cmd(run: &mut Run<'_>, checkpoint: Option<&Path>) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let ckpt = match checkpoint {
        Some(p) => require(p.to_path_buf(), "pretrain")?,
        None => run.need(&format!("{PRETRAIN_DIR}/{CHECKPOINT}"), "pretrain")?,
    };
    run.input(&ckpt);
    let records = potency_records(cfg)?;
    at_precision!(cfg, embed_one(run, &ckpt, &records))
}

fn embed_one<T: Real>(run: &mut Run<'_>, ckpt: &Path, records: &[PotencyRecord]) -> Result<Value, CliError> {
    let model = load_model::<T>(run.cfg, ckpt)?;
    let pixels = depict_records(records, run.cfg)?;
    let feats = embed(&model, &pixels, INFERENCE_BATCH)?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    write_embeddings(&run.output(EMBEDDINGS), &ids, &feats)?;
    Ok(json!({ "molecules": feats.len(), "dim": feats.first().map_or(0, Vec::len) }))
}

#[derive(Serialize)]
struct CoordRow<'a> {
    id: &'a str,
    pc1: f64,
    pc2: f64,
}

fn collapse(run: &mut Run<'_>) -> Result<Value, CliError> {
    let cfg = run.cfg;
    let records = potency_records(cfg)?;
    let emb_path = run.need(EMBEDDINGS, "embed")?;
    let (ids, feats) = read_embeddings(&emb_path)?;
    if ids.len() != records.len() || ids.iter().zip(&records).any(|(a, r)| *a != r.id) {
        return Err(CliError::BadArtifact {
            path: emb_path,
            message: "rows do not match the potency records".into(),
        });
    }
    let (_, cliff_pairs) = read_cliffs(&run.need(CLIFF_PAIRS, "cliffs")?, &records)?;
    let (pca, coords) = pca_2d(&feats)?;
    fs::create_dir_all(cfg.paths.out.join(COLLAPSE_DIR))?;
    let mut w = csv::Writer::from_path(run.output(&format!("{COLLAPSE_DIR}/pca.csv")))?;
    for (r, c) in records.iter().zip(&coords) {
        w.serialize(CoordRow {
            id: &r.id,
            pc1: c[0],
            pc2: c[1],
        })?;
    }
    w.flush()?;
    let features = featurize(&records, cfg.cliffs.spec()?);
    let mut pairs = Vec::new();
    for i in 0..records.len() {
        for j in i + 1..records.len() {
            pairs.push((i, j, tanimoto(&features[i].fp, &features[j].fp).map_err(BenchError::from)?));
        }
    }
    let curve = collapse_curve(&coords, &pairs, &DEFAULT_BIN_EDGES)?;
    let mut w = csv::Writer::from_path(run.output(&format!("{COLLAPSE_DIR}/curve.csv")))?;
    for p in &curve {
        w.serialize(p)?;
    }
    w.flush()?;
    let cliff = if cliff_pairs.is_empty() {
        None
    } else {
        Some(cliff_distance(&coords, &cliff_pairs)?)
    };
    let summary = json!({
        "variances": pca.variances,
        "cliff_pairs": cliff_pairs.len(),
        "cliff_distance": cliff,
        "curve_bins": curve.len(),
    });
    write_json(&run.output(&format!("{COLLAPSE_DIR}/{SUMMARY}")), &summary)?;
    Ok(summary)
}
