//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured value (run with `--nocapture` to see them).

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use affectnet::corpus::{
    synthesize_corpus, synthesize_imbalanced, synthesize_transfer_pair, ImbalancedSpec,
    SyntheticSpec, TransferPairSpec,
};
use affectnet::layers::{
    AffectNetwork, Direction, DropoutSpec, Mode, NetworkConfig, SequenceMasks, TaskKind,
};
use affectnet::metrics::{classification_report, confusion, support_weighted, ConfusionMatrix};
use affectnet::numerics::{grad_check, Tensor};
use affectnet::objective::{class_weights, mse_loss_node, weighted_ce_node};
use affectnet::training::{
    train, AdamConfig, EmbeddingSource, FineTuneScope, NetworkSpec, TaskCorpus, TaskReport,
    TrainConfig,
};
use affectnet::transfer::{compare_with_random_init, swap_head, TransferPlan};

fn redraw_parameters(net: &mut AffectNetwork, rng: &mut ChaCha8Rng) {
    // Wide weights keep every true gradient coordinate well above the
    // finite-difference noise floor of the relative-error formula.
    for p in net.parameters_mut() {
        let fresh: Vec<f64> = (0..p.value.len()).map(|_| rng.gen_range(-0.6..0.6)).collect();
        p.value.data_mut().copy_from_slice(&fresh);
    }
}

/// Criterion 1: tape gradients vs central differences (h = 1e-5) on the
/// classification and regression pipelines, dropout off; max relative
/// error < 1e-4 over 20 random instantiations, in under 30 seconds.
#[test]
fn criterion_01_gradient_fidelity() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;

    for instance in 0..20 {
        let classification = instance % 2 == 0;
        let vocab_size = rng.gen_range(6..=20);
        let embedding_dim = rng.gen_range(2..=8);
        let hidden_size = rng.gen_range(2..=4);
        let config = NetworkConfig {
            vocab_size,
            embedding_dim,
            hidden_size,
            direction: if classification {
                Direction::Unidirectional
            } else {
                Direction::Bidirectional
            },
            task: if classification {
                TaskKind::Classification { classes: 3 }
            } else {
                TaskKind::Regression { dimensions: 2 }
            },
            dropout: DropoutSpec::none(),
        };
        let mut net = AffectNetwork::new(config, &mut rng).unwrap();
        redraw_parameters(&mut net, &mut rng);
        let net = net;

        let len = rng.gen_range(2..=6);
        let seq: Vec<usize> = (0..len).map(|_| rng.gen_range(2..vocab_size)).collect();
        let label = rng.gen_range(0..3);
        let labels: Vec<usize> = (0..9).map(|_| rng.gen_range(0..3)).collect();
        let weights = class_weights(labels.into_iter().chain(0..3), 3).unwrap();
        let target = Tensor::row_vector(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);

        let tensors: Vec<Tensor> = net.parameters().iter().map(|p| p.value.clone()).collect();
        let err = grad_check(
            |tape, nodes| {
                let nn = net.nodes_from_ordered(nodes);
                let out = net.output_on_tape(tape, &nn, &seq, &SequenceMasks::none())?;
                if classification {
                    weighted_ce_node(tape, out, label, &weights)
                } else {
                    let t = tape.leaf(target.clone());
                    mse_loss_node(tape, out, t)
                }
            },
            &tensors,
            1e-5,
        )
        .unwrap();
        worst = worst.max(err);
    }
    let elapsed = started.elapsed();
    assert!(worst < 1e-4, "max relative error {worst}");
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    println!("criterion 1 PASS: gradient fidelity, max rel err {worst:.2e} in {elapsed:?}");
}

/// Criterion 2: the Eq.-2 weight identities.
#[test]
fn criterion_02_class_weight_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..100 {
        let k = rng.gen_range(2..=8);
        let mut labels: Vec<usize> = (0..k).collect();
        for _ in 0..rng.gen_range(0..200) {
            labels.push(rng.gen_range(0..k));
        }
        let weights = class_weights(labels.iter().copied(), k).unwrap();
        let total: f64 = labels.iter().map(|&y| weights.weight(y)).sum();
        assert!(
            (total - labels.len() as f64).abs() < 1e-9,
            "weight sum {total} vs N {}",
            labels.len()
        );
    }
    // balanced classes give exactly all-ones weights
    let balanced: Vec<usize> = (0..60).map(|i| i % 4).collect();
    let weights = class_weights(balanced, 4).unwrap();
    assert_eq!(weights.weights(), &[1.0, 1.0, 1.0, 1.0]);
    println!("criterion 2 PASS: weight sums equal N on 100 multisets; balanced weights are 1");
}

/// Criterion 3: a BiLSTM reaches training accuracy 1.0 on the 32-document
/// 4-class marker corpus within 300 epochs, in under 60 seconds.
#[test]
fn criterion_03_overfit_check() {
    let started = Instant::now();
    let synth = synthesize_corpus(&SyntheticSpec::new(4, 8), 33).unwrap();
    let data = TaskCorpus::Classification(synth.corpus.clone());
    let spec = NetworkSpec {
        embedding_dim: 16,
        hidden_size: 16,
        direction: Direction::Bidirectional,
        dropout: DropoutSpec {
            recurrent_rate: 0.1,
            output_rate: 0.1,
        },
        embedding_source: EmbeddingSource::Random,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = spec
        .build(&synth.vocabulary, data.task_kind(), &mut rng)
        .unwrap();
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 8,
        validation_fraction: 0.15,
        patience: 300,
        seed: 17,
        adam: AdamConfig {
            learning_rate: 0.02,
            ..AdamConfig::default()
        },
        weighted_loss: true,
        scope: FineTuneScope::Full,
    };
    let result = train(&mut net, &data, None, &cfg, &mut |_, _, _| {}).unwrap();
    let elapsed = started.elapsed();
    let reached = result
        .train_accuracies
        .iter()
        .position(|&a| a == 1.0)
        .map(|i| i + 1);
    assert!(
        reached.is_some(),
        "training accuracy never reached 1.0 (best {:?})",
        result
            .train_accuracies
            .iter()
            .cloned()
            .fold(0.0f64, f64::max)
    );
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 3 PASS: train accuracy 1.0 at epoch {} of {} in {elapsed:?}",
        reached.unwrap(),
        result.epochs_run
    );
}

/// Criterion 4: on a 9:1 two-class corpus the weighted-loss model's macro
/// recall beats the unweighted model's by at least 0.2 on average over 10
/// paired seeds.
#[test]
fn criterion_04_imbalance_property() {
    let spec = ImbalancedSpec {
        majority_docs: 180,
        minority_docs: 20,
        leak_rate: 0.3,
        vocab_size: 12,
        doc_len: 6,
    };
    let net_spec = NetworkSpec {
        embedding_dim: 12,
        hidden_size: 12,
        direction: Direction::Unidirectional,
        dropout: DropoutSpec {
            recurrent_rate: 0.2,
            output_rate: 0.2,
        },
        embedding_source: EmbeddingSource::Random,
    };
    let mut diff_sum = 0.0;
    for seed in 0..10u64 {
        let synth = synthesize_imbalanced(&spec, 1000 + seed).unwrap();
        let data = TaskCorpus::Classification(synth.corpus.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let split_seed = rng.gen::<u64>();
        let (train_part, test_part) = data.split(0.8, split_seed).unwrap();

        let mut recalls = [0.0f64; 2];
        for (slot, weighted) in [(0, true), (1, false)] {
            let mut net = net_spec
                .build(
                    &synth.vocabulary,
                    data.task_kind(),
                    &mut ChaCha8Rng::seed_from_u64(seed * 7 + 1),
                )
                .unwrap();
            let cfg = TrainConfig {
                epochs: 40,
                batch_size: 16,
                validation_fraction: 0.15,
                patience: 40,
                seed: seed * 13 + 3,
                adam: AdamConfig {
                    learning_rate: 0.02,
                    ..AdamConfig::default()
                },
                weighted_loss: weighted,
                scope: FineTuneScope::Full,
            };
            let result =
                train(&mut net, &train_part, Some(&test_part), &cfg, &mut |_, _, _| {}).unwrap();
            match result.metrics.unwrap() {
                TaskReport::Classification(r) => recalls[slot] = r.macro_recall(),
                _ => unreachable!(),
            }
        }
        diff_sum += recalls[0] - recalls[1];
    }
    let mean_diff = diff_sum / 10.0;
    assert!(
        mean_diff >= 0.2,
        "mean macro-recall advantage {mean_diff:.3} below 0.2"
    );
    println!("criterion 4 PASS: weighted loss adds {mean_diff:.3} macro recall over 10 paired seeds");
}

/// Criterion 5: sent2affect reaches 90% validation accuracy in strictly
/// fewer epochs than random initialization on at least 8 of 10 paired
/// seeds, and the head swap preserves every non-head parameter bit-exactly.
#[test]
fn criterion_05_transfer_property() {
    let pair = synthesize_transfer_pair(&TransferPairSpec::default(), 2024).unwrap();
    let target = TaskCorpus::Classification(pair.target.clone());
    let plan = TransferPlan {
        vocabulary: &pair.vocabulary,
        source: &pair.source,
        target: &target,
        network: NetworkSpec {
            embedding_dim: 12,
            hidden_size: 12,
            direction: Direction::Bidirectional,
            dropout: DropoutSpec::none(),
            embedding_source: EmbeddingSource::Random,
        },
        scope: FineTuneScope::Full,
    };
    let source_cfg = TrainConfig {
        epochs: 5,
        batch_size: 16,
        validation_fraction: 0.15,
        patience: 5,
        seed: 0,
        adam: AdamConfig {
            learning_rate: 0.02,
            ..AdamConfig::default()
        },
        weighted_loss: true,
        scope: FineTuneScope::Full,
    };
    let target_cfg = TrainConfig {
        epochs: 40,
        batch_size: 16,
        validation_fraction: 0.25,
        patience: 40,
        seed: 0,
        adam: AdamConfig {
            learning_rate: 0.02,
            ..AdamConfig::default()
        },
        weighted_loss: true,
        scope: FineTuneScope::Full,
    };
    let comparison =
        compare_with_random_init(&plan, &source_cfg, &target_cfg, 0.8, 500, 10).unwrap();
    let wins = comparison.transferred_wins(0.9);
    assert!(wins >= 8, "transfer won only {wins}/10 paired seeds");

    // bit-exact parameter transfer through the head swap
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = plan
        .network
        .build(&pair.vocabulary, TaskKind::Classification { classes: 2 }, &mut rng)
        .unwrap();
    let swapped = swap_head(&net, TaskKind::Classification { classes: 4 }, &mut rng).unwrap();
    let before = net.parameters();
    let after = swapped.parameters();
    for (a, b) in before[..before.len() - 2].iter().zip(&after[..after.len() - 2]) {
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.value), bits(&b.value), "{} changed", a.name());
    }
    println!("criterion 5 PASS: transfer faster on {wins}/10 seeds; swap preserves parameters");
}

/// Criterion 6: the classification report matches a brute-force per-class
/// recount on 1000 random confusion matrices, plus the hand cases.
#[test]
fn criterion_06_metric_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..1000 {
        let k = rng.gen_range(2..=8);
        let n = rng.gen_range(1..=80);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let cm = confusion(&preds, &labels, k).unwrap();
        let report = classification_report(&cm).unwrap();

        // independent recount straight from the prediction pairs
        let mut weighted_f1 = 0.0;
        for c in 0..k {
            let tp = preds.iter().zip(&labels).filter(|&(&p, &t)| p == c && t == c).count() as f64;
            let fp = preds.iter().zip(&labels).filter(|&(&p, &t)| p == c && t != c).count() as f64;
            let fn_ = preds.iter().zip(&labels).filter(|&(&p, &t)| p != c && t == c).count() as f64;
            let tn = preds.iter().zip(&labels).filter(|&(&p, &t)| p != c && t != c).count() as f64;
            let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            let recall = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            let specificity = if tn + fp == 0.0 { 0.0 } else { tn / (tn + fp) };
            let got = &report.per_class[c];
            assert!((got.precision - precision).abs() < 1e-12);
            assert!((got.recall - recall).abs() < 1e-12);
            assert!((got.f1 - f1).abs() < 1e-12);
            assert!((got.sensitivity - recall).abs() < 1e-12);
            assert!((got.specificity - specificity).abs() < 1e-12);
            weighted_f1 += f1 * (tp + fn_) / n as f64;
        }
        assert!((report.weighted_f1 - weighted_f1).abs() < 1e-12);
    }

    // hand cases
    let cm = ConfusionMatrix::from_counts(2, vec![2, 1, 1, 3]).unwrap();
    let report = classification_report(&cm).unwrap();
    assert!((report.per_class[0].precision - 2.0 / 3.0).abs() < 1e-15);
    assert!((report.per_class[0].recall - 2.0 / 3.0).abs() < 1e-15);
    assert!((report.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-15);

    let cm = ConfusionMatrix::from_counts(2, vec![3, 1, 1, 4]).unwrap();
    let report = classification_report(&cm).unwrap();
    assert!((report.per_class[0].sensitivity - 0.75).abs() < 1e-15);
    assert!((report.per_class[0].specificity - 0.8).abs() < 1e-15);

    assert!((support_weighted(&[0.8, 0.5], &[3, 1]) - 0.725).abs() < 1e-15);
    println!("criterion 6 PASS: report matches brute-force recount on 1000 matrices + hand cases");
}

/// Criterion 7: eval-mode predictions are bit-identical across calls, and
/// the train-mode Monte-Carlo mean over 10,000 output-dropout masks
/// matches the eval encoding within 3 standard errors (recurrent rate 0,
/// where inverted dropout is exactly unbiased).
#[test]
fn criterion_07_dropout_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let eval_net = AffectNetwork::new(
        NetworkConfig {
            vocab_size: 14,
            embedding_dim: 6,
            hidden_size: 4,
            direction: Direction::Bidirectional,
            task: TaskKind::Classification { classes: 3 },
            dropout: DropoutSpec {
                recurrent_rate: 0.5,
                output_rate: 0.5,
            },
        },
        &mut rng,
    )
    .unwrap();
    let seq = vec![2usize, 7, 9, 3, 5];
    let a = eval_net.predict(&seq).unwrap();
    let b = eval_net.predict(&seq).unwrap();
    assert_eq!(
        a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        "eval-mode predictions differ between calls"
    );

    let mc_net = AffectNetwork::new(
        NetworkConfig {
            vocab_size: 14,
            embedding_dim: 6,
            hidden_size: 4,
            direction: Direction::Bidirectional,
            task: TaskKind::Classification { classes: 3 },
            dropout: DropoutSpec {
                recurrent_rate: 0.0,
                output_rate: 0.5,
            },
        },
        &mut rng,
    )
    .unwrap();
    let reference = mc_net.encode_seq(&seq, Mode::Eval, None).unwrap();
    let samples = 10_000usize;
    let mut sums = vec![0.0; reference.len()];
    let mut sq_sums = vec![0.0; reference.len()];
    for _ in 0..samples {
        let enc = mc_net.encode_seq(&seq, Mode::Train, Some(&mut rng)).unwrap();
        for (i, v) in enc.iter().enumerate() {
            sums[i] += v;
            sq_sums[i] += v * v;
        }
    }
    let mut worst_z = 0.0f64;
    for i in 0..reference.len() {
        let mean = sums[i] / samples as f64;
        let var = (sq_sums[i] / samples as f64 - mean * mean).max(0.0);
        let se = (var / samples as f64).sqrt();
        let z = (mean - reference[i]).abs() / se.max(1e-15);
        worst_z = worst_z.max(z);
        assert!(
            z <= 3.0,
            "coordinate {i}: MC mean {mean} vs eval {} is {z:.2} standard errors",
            reference[i]
        );
    }
    println!("criterion 7 PASS: eval bit-identical; MC mean within 3 SE (worst {worst_z:.2})");
}

/// Criterion 8: probability rows sum to one within 1e-12 and are shift
/// invariant, over 1000 random inputs.
#[test]
fn criterion_08_softmax_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..1000 {
        let k = rng.gen_range(2..=10);
        let logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let shift = rng.gen_range(-20.0..20.0);
        let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();

        let mut tape = affectnet::numerics::Tape::new();
        let a = tape.leaf(Tensor::row_vector(&logits));
        let b = tape.leaf(Tensor::row_vector(&shifted));
        let pa = tape.softmax(a);
        let pb = tape.softmax(b);
        let sum: f64 = tape.value(pa).data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
        for (x, y) in tape.value(pa).data().iter().zip(tape.value(pb).data()) {
            assert!(x.is_finite() && *x >= 0.0);
            assert!((x - y).abs() < 1e-12, "shift changed probability by {}", x - y);
        }
    }
    println!("criterion 8 PASS: softmax rows sum to 1 and are shift-invariant on 1000 inputs");
}

/// Criterion 9: archive round-trip restores bit-identical parameters and
/// predictions on 100 random inputs.
#[test]
fn criterion_09_persistence_round_trip() {
    use affectnet::cli::{load_archive, save_archive, ArchiveMetadata};
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let net = AffectNetwork::new(
        NetworkConfig {
            vocab_size: 18,
            embedding_dim: 7,
            hidden_size: 5,
            direction: Direction::Bidirectional,
            task: TaskKind::Classification { classes: 4 },
            dropout: DropoutSpec::default(),
        },
        &mut rng,
    )
    .unwrap();
    let metadata = ArchiveMetadata {
        network: net.config.clone(),
        vocabulary: (0..16).map(|i| format!("tok{i}")).collect(),
        preprocess: affectnet::corpus::PreprocessOptions::for_network(),
        class_names: Some(vec!["anger".into(), "fear".into(), "joy".into(), "sadness".into()]),
        dimensions: None,
        score_ranges: None,
        text_column: "text".into(),
        label_column: Some("label".into()),
        embedding_trainable: true,
        train_config: None,
        metrics: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.affect");
    save_archive(&path, &net, &metadata).unwrap();
    let (_, loaded) = load_archive(&path).unwrap();

    for (a, b) in net.parameters().iter().zip(loaded.parameters()) {
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.value), bits(&b.value), "{} drifted", a.name());
    }
    for _ in 0..100 {
        let len = rng.gen_range(1..=9);
        let seq: Vec<usize> = (0..len).map(|_| rng.gen_range(2..18)).collect();
        let p = net.predict(&seq).unwrap();
        let q = loaded.predict(&seq).unwrap();
        assert_eq!(
            p.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            q.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
    println!("criterion 9 PASS: archive round-trip bit-identical on parameters and 100 predictions");
}

/// Criterion 10: the full CLI pipeline on a synthetic corpus with an
/// embedding file: `train --runs 10` completes in under 5 minutes and
/// emits the comparison table with the baseline row and relative-change
/// column.
#[test]
fn criterion_10_end_to_end_cli() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let synth = synthesize_corpus(
        &SyntheticSpec {
            classes: 3,
            docs_per_class: 20,
            vocab_size: 15,
            noise_rate: 0.25,
            doc_len: 8,
        },
        77,
    )
    .unwrap();

    // dataset CSV from the synthetic corpus
    let mut csv = String::from("text,label\n");
    for (doc, label) in synth.corpus.documents() {
        let words: Vec<&str> = doc
            .iter()
            .map(|&t| synth.vocabulary.token_at(t).unwrap())
            .collect();
        csv.push_str(&format!(
            "{},{}\n",
            words.join(" "),
            synth.corpus.class_names()[*label]
        ));
    }
    let data_path = dir.path().join("synthetic.csv");
    std::fs::write(&data_path, csv).unwrap();

    // word-vector file covering the whole vocabulary, 16 dims
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut vectors = String::new();
    for token in synth.vocabulary.retained_tokens() {
        let values: Vec<String> = (0..16)
            .map(|_| format!("{:.4}", rng.gen_range(-0.5..0.5)))
            .collect();
        vectors.push_str(&format!("{token} {}\n", values.join(" ")));
    }
    let vectors_path = dir.path().join("vectors.txt");
    std::fs::write(&vectors_path, vectors).unwrap();

    let config = format!(
        "[data]\ntask = classification\ntrain = {}\n\n[model]\nhidden_size = 16\nembedding_dim = 16\ndirection = bidirectional\nembedding = {}\nrecurrent_dropout = 0.1\noutput_dropout = 0.1\n\n[train]\nepochs = 30\nbatch_size = 16\nvalidation_fraction = 0.2\npatience = 5\nseed = 11\nlearning_rate = 0.02\nsplit_ratio = 0.8\n",
        data_path.display(),
        vectors_path.display()
    );
    let config_path = dir.path().join("run.ini");
    std::fs::write(&config_path, config).unwrap();

    let out_dir = dir.path().join("out");
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_affect"))
        .args([
            "train",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--runs",
            "10",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let report = std::fs::read_to_string(out_dir.join("report.txt")).unwrap();
    assert!(report.contains("linear baseline"), "report: {report}");
    assert!(report.contains("rel_change"), "report: {report}");
    assert!(report.contains("bilstm"), "report: {report}");
    assert!(out_dir.join("report.csv").exists());
    assert!(out_dir.join("per_run_metrics.csv").exists());
    assert!(out_dir.join("model.affect").exists());
    assert!(out_dir.join("config_echo.ini").exists());

    // progress log discipline on stdout
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout
            .lines()
            .any(|l| l.starts_with("epoch ") && l.contains(" train_loss ") && l.contains(" val_loss ")),
        "missing progress log lines"
    );

    // the deep model separates the marker corpus
    let per_run = std::fs::read_to_string(out_dir.join("per_run_metrics.csv")).unwrap();
    let mut f1_column = None;
    let mut bilstm_f1 = Vec::new();
    for (i, line) in per_run.lines().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if i == 0 {
            f1_column = cells.iter().position(|c| *c == "weighted_f1");
            continue;
        }
        if cells[0].starts_with("bilstm") {
            bilstm_f1.push(cells[f1_column.unwrap()].parse::<f64>().unwrap());
        }
    }
    assert_eq!(bilstm_f1.len(), 10);
    let mean_f1 = bilstm_f1.iter().sum::<f64>() / 10.0;
    assert!(mean_f1 >= 0.95, "mean weighted F1 {mean_f1}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}");
    println!(
        "criterion 10 PASS: end-to-end train --runs 10 in {elapsed:?}, mean weighted F1 {mean_f1:.3}"
    );
}
