use cliffmask_core::bench::{DatasetSplit, SplitKind};
use cliffmask_core::depict::MaskLevel;
use cliffmask_model::checkpoint::checkpoint_bytes;
use cliffmask_model::finetune::predict_indices;
use cliffmask_model::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pixels(cfg: &EncoderConfig, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..cfg.input_len())
        .map(|_| if rng.random_bool(0.2) { rng.random_range(0..200) } else { 255 })
        .collect()
}

/// Cycles atom, bond and motif samples over random images.
fn synthetic(cfg: &EncoderConfig, n: usize, seed: u64) -> Vec<PretextExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let level = MaskLevel::ALL[i % 3];
            let pixels = random_pixels(cfg, &mut rng);
            let (omega, labels) = match level {
                MaskLevel::Motif => (vec![], vec![rng.random_range(0..5)]),
                MaskLevel::Atom => (vec![1, 6], vec![rng.random_range(0..4), rng.random_range(0..4)]),
                MaskLevel::Bond => (vec![3], vec![rng.random_range(0..4)]),
            };
            PretextExample {
                molecule_id: i / 3,
                level,
                pixels,
                omega,
                labels,
            }
        })
        .collect()
}

fn tiny_model<T: Real>(seed: u64) -> Model<T> {
    let cfg = EncoderConfig {
        seed,
        ..EncoderConfig::tiny()
    };
    Model::new(cfg, HeadConfig::pretext(4, 4, 5)).unwrap()
}

#[test]
fn total_is_sum_of_components() {
    let model: Model<f64> = tiny_model(1);
    let ex = synthetic(model.encoder_config(), 9, 2);
    let refs: Vec<&PretextExample> = ex.iter().collect();
    let rec = total_loss(&model, &refs, None).unwrap();
    let sum: f64 = MaskLevel::ALL.iter().map(|&l| rec.component(l).unwrap()).sum();
    assert_eq!(rec.total(), sum);
    for level in MaskLevel::ALL {
        let own: Vec<&PretextExample> = ex.iter().filter(|e| e.level == level).collect();
        let alone = total_loss(&model, &own, None).unwrap();
        assert!((alone.total() - rec.component(level).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn fixed_batch_is_memorized() {
    let model: Model<f32> = tiny_model(3);
    let ex = synthetic(model.encoder_config(), 12, 4);
    let refs: Vec<&PretextExample> = ex.iter().collect();
    let opt = OptimizerConfig {
        lr: 0.05,
        batch_size: 12,
        ..Default::default()
    };
    let mut trainer = Trainer::new(model, opt, 400);
    let first = trainer.backward_and_step(&refs).unwrap().total();
    let mut last = first;
    for _ in 0..400 {
        last = trainer.backward_and_step(&refs).unwrap().total();
    }
    assert!(last < 0.1, "loss {first} -> {last}");
}

#[test]
fn zero_learning_rate_and_decay_keep_parameters() {
    let model: Model<f64> = tiny_model(5);
    let ex = synthetic(model.encoder_config(), 6, 6);
    let refs: Vec<&PretextExample> = ex.iter().collect();
    let mut grads = vec![0.0; model.param_count()];
    total_loss(&model, &refs, Some(&mut grads)).unwrap();
    let mut params = model.params.clone();
    let mut sgd = Sgd::new(&OptimizerConfig::default(), params.len());
    for _ in 0..3 {
        sgd.step(&mut params, &grads, 0.0);
    }
    assert_eq!(params, model.params);
}

#[test]
fn pretraining_is_bitwise_reproducible_in_f64() {
    let ex = synthetic(&EncoderConfig::tiny(), 30, 8);
    let opt = OptimizerConfig {
        lr: 0.02,
        batch_size: 4,
        ..Default::default()
    };
    let cfg = PretrainConfig {
        epochs: 2,
        valid_fraction: 0.2,
        seed: 9,
    };
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let rep = pretrain(tiny_model::<f64>(7), &ex, &opt, &cfg, Some(dir.path())).unwrap();
        let ckpt = std::fs::read(dir.path().join(pretrain::BEST_CHECKPOINT)).unwrap();
        let log = std::fs::read_to_string(dir.path().join(pretrain::LOG_FILE)).unwrap();
        (rep.best_epoch, ckpt, log)
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert!(a.0 >= 1);
    // Header, then three tasks and a total on two splits per epoch.
    assert_eq!(a.2.lines().count(), 1 + 2 * 8);
    let (model, state) = parse_checkpoint::<f64>(&a.1).unwrap();
    assert_eq!(state.epoch as usize, a.0);
    assert_eq!(checkpoint_bytes(&model, &state).unwrap(), a.1);
}

#[test]
fn molecule_split_keeps_levels_together() {
    let ex = synthetic(&EncoderConfig::tiny(), 60, 1);
    let (train, valid) = pretrain::split_by_molecule(&ex, 0.25, 3);
    assert_eq!(train.len() + valid.len(), ex.len());
    assert_eq!(valid.len(), 5 * 3);
    for &v in &valid {
        assert!(train.iter().all(|&t| ex[t].molecule_id != ex[v].molecule_id));
    }
}

fn regression_set(cfg: &EncoderConfig, n: usize) -> Vec<RegressionExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    (0..n)
        .map(|i| {
            let pixels = random_pixels(cfg, &mut rng);
            let ink = pixels.iter().filter(|&&p| p < 255).count() as f64;
            RegressionExample {
                pixels,
                target: 5.0 + ink / 100.0 + (i % 3) as f64 * 0.01,
            }
        })
        .collect()
}

fn split_of(n: usize) -> DatasetSplit {
    DatasetSplit {
        kind: SplitKind::Random,
        train: (0..n * 6 / 10).collect(),
        valid: (n * 6 / 10..n * 8 / 10).collect(),
        test: (n * 8 / 10..n).collect(),
    }
}

#[test]
fn zero_epoch_finetune_reports_initial_model() {
    let model: Model<f64> = tiny_model(2);
    let ex = regression_set(model.encoder_config(), 20);
    let split = split_of(ex.len());
    let flags = vec![false; ex.len()];
    let cfg = FinetuneConfig {
        max_epochs: 0,
        ..Default::default()
    };
    let rep = finetune(model, &ex, &split, &flags, &OptimizerConfig::default(), &cfg, None).unwrap();
    assert_eq!(rep.best_epoch, 0);
    assert!(rep.log.is_empty());
    let again = predict_indices(&rep.model, &ex, &split.test, 3).unwrap();
    assert_eq!(again, rep.predictions);
    let m = rep.metrics.unwrap();
    let truth: Vec<f64> = split.test.iter().map(|&i| ex[i].target).collect();
    let oracle = (rep.predictions.iter().zip(&truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len() as f64).sqrt();
    assert!((m.rmse - oracle).abs() < 1e-12);
}

#[test]
fn finetune_improves_on_learnable_target() {
    let model: Model<f32> = tiny_model(4);
    let ex = regression_set(model.encoder_config(), 80);
    let split = split_of(ex.len());
    let flags = vec![false; ex.len()];
    let opt = OptimizerConfig {
        lr: 0.01,
        batch_size: 8,
        ..Default::default()
    };
    let cfg = FinetuneConfig {
        max_epochs: 30,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = finetune(model, &ex, &split, &flags, &opt, &cfg, Some(dir.path())).unwrap();
    let first = rep.log[0].valid_rmse;
    assert!(rep.best_valid_rmse < first, "{first} -> {}", rep.best_valid_rmse);
    assert!(dir.path().join(finetune::FINETUNE_LOG).exists());
    assert_eq!(rep.predictions.len(), split.test.len());
}

#[test]
fn validation_carve_out_without_valid_partition() {
    let model: Model<f64> = tiny_model(6);
    let ex = regression_set(model.encoder_config(), 30);
    let split = DatasetSplit {
        kind: SplitKind::Random,
        train: (0..25).collect(),
        valid: vec![],
        test: (25..30).collect(),
    };
    let cfg = FinetuneConfig {
        max_epochs: 1,
        ..Default::default()
    };
    let flags = vec![false; ex.len()];
    let rep = finetune(model, &ex, &split, &flags, &OptimizerConfig::default(), &cfg, None).unwrap();
    assert_eq!(rep.valid.len(), 3);
    assert_eq!(rep.train.len(), 22);
    assert!(rep.valid.iter().all(|v| !rep.train.contains(v)));
}

#[test]
fn embeddings_project_in_variance_order() {
    let model: Model<f64> = tiny_model(8);
    let cfg = model.encoder_config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let images: Vec<Vec<u8>> = (0..12).map(|_| random_pixels(&cfg, &mut rng)).collect();
    let feats = embed(&model, &images, 5).unwrap();
    assert_eq!(feats.len(), images.len());
    let (_, coords) = cliffmask_core::bench::pca_2d(&feats).unwrap();
    let n = feats.len();
    let d = feats[0].len();
    let mean: Vec<f64> = (0..d).map(|j| feats.iter().map(|f| f[j]).sum::<f64>() / n as f64).collect();
    let cov = nalgebra::DMatrix::from_fn(d, d, |a, b| {
        feats.iter().map(|f| (f[a] - mean[a]) * (f[b] - mean[b])).sum::<f64>() / (n - 1) as f64
    });
    let mut eig: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    for (k, want) in eig.iter().take(2).enumerate() {
        let var = coords.iter().map(|c| c[k] * c[k]).sum::<f64>() / (n - 1) as f64;
        assert!((var - want).abs() <= 1e-8 * want.max(1.0), "component {k}: {var} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn softmax_rows_sum_to_one(logits in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let p = loss::softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let (ce, _) = loss::cross_entropy(&logits, 0).unwrap();
        prop_assert!(ce >= 0.0);
    }

    #[test]
    fn uniform_logits_give_log_k(k in 1usize..50, v in -5.0f64..5.0) {
        let (ce, _) = loss::cross_entropy(&vec![v; k], (k - 1) as u32).unwrap();
        prop_assert!((ce - (k as f64).ln()).abs() < 1e-12);
    }
}
