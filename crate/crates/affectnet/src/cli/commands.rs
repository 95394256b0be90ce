use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::archive::{load_archive, save_archive, ArchiveMetadata};
use super::config::{DataTask, RunSettings, TransferSettings};
use super::report::{
    classification_csv, comparison_table, regression_csv, render_classification,
    render_regression, twin_table, ComparisonRow,
};
use crate::baseline::{train_linear_classifier, train_linear_regressor, SparseVector, TfidfVectorizer};
use crate::baseline::{dense_to_sparse, LinearConfig};
use crate::corpus::{
    tokenize, tokenize_classification_csv, tokenize_classification_views, tokenize_regression_views,
    PreprocessOptions, Vocabulary, UNK_INDEX,
};
use crate::error::{Error, Result};
use crate::layers::{argmax, AffectNetwork, Direction, TaskKind};
use crate::metrics::{classification_report, confusion, regression_report};
use crate::objective::class_weights;
use crate::training::{
    multirun, EmbeddingSource, MultirunResult, TaskCorpus, TaskReport, TrainConfig,
};
use crate::transfer::{random_init_baseline, sent2affect, TransferPlan};

/// Accuracy threshold used in transfer epochs-to-threshold comparisons.
const TRANSFER_ACCURACY_THRESHOLD: f64 = 0.9;

/// The two corpus views a run needs: near-raw sequences for the network
/// and fully preprocessed ones for the bag-of-words baseline, paired row
/// for row.
struct LoadedViews {
    network_data: TaskCorpus,
    network_vocab: Vocabulary,
    baseline_data: TaskCorpus,
    baseline_vocab: Vocabulary,
    dropped_rows: usize,
    class_names: Option<Vec<String>>,
    dimensions: Option<Vec<String>>,
    score_ranges: Option<Vec<(f64, f64)>>,
    text_column: String,
    label_column: Option<String>,
}

fn load_views(settings: &RunSettings) -> Result<LoadedViews> {
    let net_opts = PreprocessOptions::for_network();
    let base_opts = PreprocessOptions::full_pipeline();
    match &settings.data.task {
        DataTask::Classification(schema) => {
            let (net_tok, base_tok) = tokenize_classification_views(
                &settings.data.train_path,
                schema,
                &net_opts,
                &base_opts,
            )?;
            let network_vocab = Vocabulary::build(
                &net_tok.token_lists(),
                settings.data.min_count,
                settings.data.max_vocab,
            )?;
            let baseline_vocab = Vocabulary::build(
                &base_tok.token_lists(),
                settings.data.min_count,
                settings.data.max_vocab,
            )?;
            let names = net_tok.label_names();
            let network_corpus = net_tok.encode_with_names(&network_vocab, &names)?;
            let baseline_corpus = base_tok.encode_with_names(&baseline_vocab, &names)?;
            Ok(LoadedViews {
                network_data: TaskCorpus::Classification(network_corpus),
                network_vocab,
                baseline_data: TaskCorpus::Classification(baseline_corpus),
                baseline_vocab,
                dropped_rows: net_tok.dropped_rows,
                class_names: Some(names),
                dimensions: None,
                score_ranges: None,
                text_column: schema.text_column.clone(),
                label_column: Some(schema.label_column.clone()),
            })
        }
        DataTask::Regression(schema) => {
            let (net_tok, base_tok) = tokenize_regression_views(
                &settings.data.train_path,
                schema,
                &net_opts,
                &base_opts,
            )?;
            let network_vocab = Vocabulary::build(
                &net_tok.token_lists(),
                settings.data.min_count,
                settings.data.max_vocab,
            )?;
            let baseline_vocab = Vocabulary::build(
                &base_tok.token_lists(),
                settings.data.min_count,
                settings.data.max_vocab,
            )?;
            let network_corpus = net_tok.encode(&network_vocab)?;
            let baseline_corpus = base_tok.encode(&baseline_vocab)?;
            Ok(LoadedViews {
                network_data: TaskCorpus::Regression(network_corpus),
                network_vocab,
                baseline_data: TaskCorpus::Regression(baseline_corpus),
                baseline_vocab,
                dropped_rows: net_tok.dropped_rows,
                class_names: None,
                dimensions: Some(schema.score_columns.clone()),
                score_ranges: Some(schema.score_ranges.clone()),
                text_column: schema.text_column.clone(),
                label_column: None,
            })
        }
    }
}

/// tf-idf + linear-model protocol over the same per-run splits as the
/// deep model (identical seed derivation, identical document count).
fn baseline_runs(
    data: &TaskCorpus,
    vocab_size: usize,
    split_ratio: f64,
    runs: usize,
    base_seed: u64,
    weighted: bool,
) -> Result<Vec<TaskReport>> {
    let mut reports = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut run_rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(run as u64));
        let split_seed = run_rng.gen::<u64>();
        let (train_part, test_part) = data.split(split_ratio, split_seed)?;
        let cfg = LinearConfig {
            seed: run_rng.gen::<u64>(),
            ..LinearConfig::default()
        };
        let report = match (&train_part, &test_part) {
            (TaskCorpus::Classification(train), TaskCorpus::Classification(test)) => {
                let vectorizer =
                    TfidfVectorizer::fit(train.documents().iter().map(|(s, _)| s.as_slice()), vocab_size)?;
                let features: Vec<SparseVector> = train
                    .documents()
                    .iter()
                    .map(|(s, _)| vectorizer.transform(s))
                    .collect();
                let labels: Vec<usize> = train.labels().collect();
                let weights = if weighted {
                    Some(class_weights(labels.iter().copied(), train.num_classes())?)
                } else {
                    None
                };
                let model = train_linear_classifier(
                    &features,
                    &labels,
                    train.num_classes(),
                    weights.as_ref(),
                    vocab_size,
                    &cfg,
                )?;
                let predictions: Vec<usize> = test
                    .documents()
                    .iter()
                    .map(|(s, _)| model.predict_label(&vectorizer.transform(s)))
                    .collect();
                let actual: Vec<usize> = test.labels().collect();
                let cm = confusion(&predictions, &actual, test.num_classes())?;
                TaskReport::Classification(classification_report(&cm)?)
            }
            (TaskCorpus::Regression(train), TaskCorpus::Regression(test)) => {
                let vectorizer =
                    TfidfVectorizer::fit(train.documents().iter().map(|(s, _)| s.as_slice()), vocab_size)?;
                let features: Vec<SparseVector> = train
                    .documents()
                    .iter()
                    .map(|(s, _)| vectorizer.transform(s))
                    .collect();
                let targets: Vec<Vec<f64>> =
                    train.documents().iter().map(|(_, t)| t.clone()).collect();
                let dims = train.dimensions().len();
                let model =
                    train_linear_regressor(&features, &targets, dims, vocab_size, &cfg)?;
                let predictions: Vec<Vec<f64>> = test
                    .documents()
                    .iter()
                    .map(|(s, _)| model.predict_scores(&vectorizer.transform(s)))
                    .collect();
                let actual: Vec<Vec<f64>> =
                    test.documents().iter().map(|(_, t)| t.clone()).collect();
                TaskReport::Regression(regression_report(&predictions, &actual, test.dimensions())?)
            }
            _ => unreachable!("split preserves the task type"),
        };
        reports.push(report);
    }
    Ok(reports)
}

fn mean_summary(reports: &[TaskReport]) -> (Vec<String>, Vec<f64>) {
    let summaries: Vec<Vec<(String, f64)>> = reports.iter().map(TaskReport::summary).collect();
    let names: Vec<String> = summaries[0].iter().map(|(n, _)| n.clone()).collect();
    let mut means = vec![0.0; names.len()];
    for s in &summaries {
        for (i, (_, v)) in s.iter().enumerate() {
            means[i] += v;
        }
    }
    for m in &mut means {
        *m /= reports.len() as f64;
    }
    (names, means)
}

fn model_name(settings: &RunSettings) -> String {
    let base = match settings.network.direction {
        Direction::Bidirectional => "bilstm",
        Direction::Unidirectional => "lstm",
    };
    match settings.network.embedding_source {
        EmbeddingSource::Random => base.to_string(),
        EmbeddingSource::Pretrained(_) => format!("{base} (pretrained embeddings)"),
    }
}

fn primary_metric(data: &TaskCorpus) -> &'static str {
    match data {
        TaskCorpus::Classification(_) => "weighted_f1",
        TaskCorpus::Regression(_) => "mse_mean",
    }
}

fn write_per_run_csv(
    path: &Path,
    model: &str,
    agg: &MultirunResult,
    baseline_name: &str,
    baseline_reports: &[TaskReport],
    base_seed: u64,
) -> Result<()> {
    let mut out = String::from("model,run,seed,epochs_run,best_epoch,best_val_loss");
    for name in &agg.metric_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, run) in agg.runs.iter().enumerate() {
        out.push_str(&format!(
            "{model},{i},{},{},{},{}",
            run.seed, run.epochs_run, run.best_epoch, run.best_val_loss
        ));
        for (_, v) in run.metrics.as_ref().expect("metrics").summary() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    for (i, report) in baseline_reports.iter().enumerate() {
        out.push_str(&format!(
            "{baseline_name},{i},{},,,",
            base_seed.wrapping_add(i as u64)
        ));
        for (_, v) in report.summary() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn archive_metadata(
    settings: &RunSettings,
    views: &LoadedViews,
    metrics: Option<TaskReport>,
) -> ArchiveMetadata {
    ArchiveMetadata {
        network: crate::layers::NetworkConfig {
            vocab_size: views.network_vocab.size(),
            embedding_dim: settings.network.embedding_dim,
            hidden_size: settings.network.hidden_size,
            direction: settings.network.direction,
            task: views.network_data.task_kind(),
            dropout: settings.network.dropout,
        },
        vocabulary: views.network_vocab.retained_tokens().to_vec(),
        preprocess: PreprocessOptions::for_network(),
        class_names: views.class_names.clone(),
        dimensions: views.dimensions.clone(),
        score_ranges: views.score_ranges.clone(),
        text_column: views.text_column.clone(),
        label_column: views.label_column.clone(),
        embedding_trainable: true,
        train_config: Some(settings.train.clone()),
        metrics,
    }
}

/// `train`: the multirun protocol plus the linear baseline, a comparison
/// table with a relative-change column, per-run metrics CSV, and an
/// archive of the best run's model.
pub fn cmd_train(config_path: &Path, out_dir: &Path, runs_override: Option<usize>) -> Result<()> {
    let mut settings = RunSettings::from_file(config_path)?;
    if let Some(runs) = runs_override {
        settings.runs = runs;
    }
    if settings.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let views = load_views(&settings)?;
    if views.dropped_rows > 0 {
        eprintln!(
            "note: dropped {} row(s) that were empty after preprocessing",
            views.dropped_rows
        );
    }
    std::fs::write(out_dir.join("config_echo.ini"), settings.echo())?;

    let mut last_run = usize::MAX;
    let stdout = std::io::stdout();
    let (agg, best_net) = multirun(
        &settings.network,
        &views.network_vocab,
        &views.network_data,
        settings.split_ratio,
        settings.runs,
        &settings.train,
        &mut |run, epoch, train_loss, val_loss| {
            let mut lock = stdout.lock();
            if run != last_run {
                let _ = writeln!(lock, "# run {run} seed {}", settings.train.seed.wrapping_add(run as u64));
                last_run = run;
            }
            let _ = writeln!(lock, "epoch {epoch} train_loss {train_loss} val_loss {val_loss}");
        },
    )?;

    let baseline_reports = baseline_runs(
        &views.baseline_data,
        views.baseline_vocab.size(),
        settings.split_ratio,
        settings.runs,
        settings.train.seed,
        settings.train.weighted_loss,
    )?;
    let (names, baseline_means) = mean_summary(&baseline_reports);
    debug_assert_eq!(names, agg.metric_names);

    let rows = vec![
        ComparisonRow {
            model: "linear baseline".into(),
            values: baseline_means,
        },
        ComparisonRow {
            model: model_name(&settings),
            values: agg.means.clone(),
        },
    ];
    let (text, csv) = comparison_table(
        &agg.metric_names,
        &rows,
        0,
        primary_metric(&views.network_data),
    )?;
    println!("\n{text}");
    std::fs::write(out_dir.join("report.txt"), &text)?;
    std::fs::write(out_dir.join("report.csv"), &csv)?;
    write_per_run_csv(
        &out_dir.join("per_run_metrics.csv"),
        &model_name(&settings),
        &agg,
        "linear baseline",
        &baseline_reports,
        settings.train.seed,
    )?;

    let best_metrics = agg.runs[agg.best_run].metrics.clone();
    let meta = archive_metadata(&settings, &views, best_metrics);
    save_archive(&out_dir.join("model.affect"), &best_net, &meta)?;
    println!(
        "best run {} (seed {}); model archived to {}",
        agg.best_run,
        agg.runs[agg.best_run].seed,
        out_dir.join("model.affect").display()
    );
    Ok(())
}

/// `transfer`: sentiment pretraining, head swap, fine-tuning, compared
/// against random initialization under shared seeds.
pub fn cmd_transfer(config_path: &Path, out_dir: &Path) -> Result<()> {
    let settings = RunSettings::from_file(config_path)?;
    let transfer: &TransferSettings = settings
        .transfer
        .as_ref()
        .ok_or_else(|| Error::Config("transfer command needs a [transfer] section".into()))?;
    std::fs::create_dir_all(out_dir)?;

    let net_opts = PreprocessOptions::for_network();
    let source_schema = crate::corpus::ClassificationSchema::new("text", "label");
    let source_tok = tokenize_classification_csv(&transfer.source_path, &source_schema, &net_opts)?;
    let source_names = source_tok.label_names();
    if source_names != ["negative".to_string(), "positive".to_string()] {
        return Err(Error::Schema(format!(
            "sentiment source labels must be exactly {{negative, positive}}, found {source_names:?}"
        )));
    }

    // Shared vocabulary over source and target documents.
    enum TokenizedTarget {
        Classification(crate::corpus::TokenizedClassification),
        Regression(crate::corpus::TokenizedRegression),
    }
    let tokenized_target = match &settings.data.task {
        DataTask::Classification(schema) => TokenizedTarget::Classification(
            tokenize_classification_csv(&settings.data.train_path, schema, &net_opts)?,
        ),
        DataTask::Regression(schema) => TokenizedTarget::Regression(
            crate::corpus::tokenize_regression_csv(&settings.data.train_path, schema, &net_opts)?,
        ),
    };
    let mut all_lists = source_tok.token_lists();
    all_lists.extend(match &tokenized_target {
        TokenizedTarget::Classification(t) => t.token_lists(),
        TokenizedTarget::Regression(t) => t.token_lists(),
    });
    let vocabulary = Vocabulary::build(&all_lists, settings.data.min_count, settings.data.max_vocab)?;
    let source_corpus = source_tok.encode_with_names(&vocabulary, &source_names)?;
    let target_data = match &tokenized_target {
        TokenizedTarget::Classification(t) => TaskCorpus::Classification(t.encode(&vocabulary)?),
        TokenizedTarget::Regression(t) => TaskCorpus::Regression(t.encode(&vocabulary)?),
    };

    std::fs::write(out_dir.join("config_echo.ini"), settings.echo())?;

    let plan = TransferPlan {
        vocabulary: &vocabulary,
        source: &source_corpus,
        target: &target_data,
        network: settings.network.clone(),
        scope: transfer.scope,
    };
    let source_cfg = TrainConfig {
        epochs: transfer.source_epochs.unwrap_or(settings.train.epochs),
        ..settings.train.clone()
    };
    let target_cfg = settings.train.clone();

    let is_classification = matches!(target_data, TaskCorpus::Classification(_));
    let mut per_seed_rows: Vec<Vec<String>> = Vec::new();
    let mut best: Option<(f64, AffectNetwork, TaskReport)> = None;
    let mut transferred_wins = 0usize;
    let mut transferred_sum = 0.0;
    let mut scratch_sum = 0.0;

    for run in 0..settings.runs {
        let seed = settings.train.seed.wrapping_add(run as u64);
        println!("# pair {run} seed {seed}");
        let outcome = sent2affect(
            &plan,
            &source_cfg,
            &target_cfg,
            settings.split_ratio,
            seed,
            &mut |phase, epoch, train_loss, val_loss| {
                println!("# {phase}");
                println!("epoch {epoch} train_loss {train_loss} val_loss {val_loss}");
            },
        )?;
        let (_, scratch) = random_init_baseline(
            &plan,
            &target_cfg,
            settings.split_ratio,
            seed,
            &mut |epoch, train_loss, val_loss| {
                println!("# scratch");
                println!("epoch {epoch} train_loss {train_loss} val_loss {val_loss}");
            },
        )?;

        let t_metrics = outcome.target_result.metrics.clone().expect("test metrics");
        let s_metrics = scratch.metrics.as_ref().expect("test metrics");
        let metric = primary_metric(&target_data);
        let value_of = |r: &TaskReport| {
            r.summary()
                .into_iter()
                .find(|(n, _)| n == metric)
                .map(|(_, v)| v)
                .unwrap_or(f64::NAN)
        };
        let t_value = value_of(&t_metrics);
        let s_value = value_of(s_metrics);
        transferred_sum += t_value;
        scratch_sum += s_value;

        let (t_epochs, s_epochs) = if is_classification {
            let fmt = |r: &crate::training::RunResult| {
                r.epochs_to_val_accuracy(TRANSFER_ACCURACY_THRESHOLD)
                    .map(|e| e.to_string())
                    .unwrap_or_else(|| "never".to_string())
            };
            let te = outcome
                .target_result
                .epochs_to_val_accuracy(TRANSFER_ACCURACY_THRESHOLD)
                .unwrap_or(usize::MAX);
            let se = scratch
                .epochs_to_val_accuracy(TRANSFER_ACCURACY_THRESHOLD)
                .unwrap_or(usize::MAX);
            if te < se {
                transferred_wins += 1;
            }
            (fmt(&outcome.target_result), fmt(&scratch))
        } else {
            (String::new(), String::new())
        };

        per_seed_rows.push(vec![
            seed.to_string(),
            format!("{t_value:.4}"),
            format!("{s_value:.4}"),
            t_epochs,
            s_epochs,
        ]);

        let better = best
            .as_ref()
            .is_none_or(|(v, _, _)| outcome.target_result.best_val_loss < *v);
        if better {
            best = Some((
                outcome.target_result.best_val_loss,
                outcome.transferred.clone(),
                t_metrics,
            ));
        }
    }

    let metric = primary_metric(&target_data);
    let headers: Vec<String> = vec![
        "seed".into(),
        format!("transferred_{metric}"),
        format!("random_init_{metric}"),
        "transferred_epochs_to_90".into(),
        "random_init_epochs_to_90".into(),
    ];
    let (mut text, csv) = twin_table(&headers, &per_seed_rows);
    let runs = settings.runs as f64;
    text.push_str(&format!(
        "\nmean transferred {metric} {:.4}; mean random-init {metric} {:.4}\n",
        transferred_sum / runs,
        scratch_sum / runs
    ));
    if is_classification {
        text.push_str(&format!(
            "transferred reached {:.0}% validation accuracy first on {transferred_wins}/{} seeds\n",
            TRANSFER_ACCURACY_THRESHOLD * 100.0,
            settings.runs
        ));
    }
    println!("\n{text}");
    std::fs::write(out_dir.join("transfer_report.txt"), &text)?;
    std::fs::write(out_dir.join("transfer_report.csv"), &csv)?;

    let (_, net, metrics) = best.expect("at least one run");
    let class_names = match &target_data {
        TaskCorpus::Classification(c) => Some(c.class_names().to_vec()),
        TaskCorpus::Regression(_) => None,
    };
    drop(plan);
    let views_like = LoadedViews {
        network_vocab: vocabulary.clone(),
        network_data: target_data,
        baseline_data: TaskCorpus::Classification(source_corpus.clone()),
        baseline_vocab: vocabulary.clone(),
        dropped_rows: 0,
        class_names,
        dimensions: match &settings.data.task {
            DataTask::Regression(schema) => Some(schema.score_columns.clone()),
            _ => None,
        },
        score_ranges: match &settings.data.task {
            DataTask::Regression(schema) => Some(schema.score_ranges.clone()),
            _ => None,
        },
        text_column: match &settings.data.task {
            DataTask::Classification(s) => s.text_column.clone(),
            DataTask::Regression(s) => s.text_column.clone(),
        },
        label_column: match &settings.data.task {
            DataTask::Classification(s) => Some(s.label_column.clone()),
            DataTask::Regression(_) => None,
        },
    };
    let meta = archive_metadata(&settings, &views_like, Some(metrics));
    save_archive(&out_dir.join("model.affect"), &net, &meta)?;
    println!("best transferred model archived to {}", out_dir.join("model.affect").display());
    Ok(())
}

fn encode_for_model(meta: &ArchiveMetadata, vocab: &Vocabulary, text: &str) -> Vec<usize> {
    let tokens = tokenize(text, &meta.preprocess);
    let seq = vocab.encode(&tokens);
    if seq.is_empty() {
        // A document with no surviving tokens still gets a prediction,
        // via the unknown-token index.
        vec![UNK_INDEX]
    } else {
        seq
    }
}

/// `evaluate` with `--external-predictions`: score externally computed
/// predictions (CSV `doc_id,predicted_label` or `doc_id,<dim scores>`,
/// doc_id being the 0-based row index among kept dataset rows) against a
/// dataset, for baseline comparisons computed outside this crate.
pub fn cmd_evaluate_external(
    predictions_path: &Path,
    data_path: &Path,
    csv_out: Option<&Path>,
) -> Result<()> {
    use crate::baseline::{load_external_predictions, ExternalPredictions};
    let opts = PreprocessOptions::for_network();
    match load_external_predictions(predictions_path)? {
        ExternalPredictions::Labels(rows) => {
            let schema = crate::corpus::ClassificationSchema::new("text", "label");
            let tok = tokenize_classification_csv(data_path, &schema, &opts)?;
            let names = tok.label_names();
            let by_id: std::collections::HashMap<&str, &str> = rows
                .iter()
                .map(|(id, l)| (id.as_str(), l.as_str()))
                .collect();
            let mut predictions = Vec::with_capacity(tok.documents.len());
            let mut labels = Vec::with_capacity(tok.documents.len());
            for (i, (_, label)) in tok.documents.iter().enumerate() {
                let id = i.to_string();
                let predicted = by_id.get(id.as_str()).ok_or_else(|| {
                    Error::Validation(format!("no external prediction for doc_id {id}"))
                })?;
                let class = names.iter().position(|n| n == predicted).ok_or_else(|| {
                    Error::Validation(format!(
                        "predicted label '{predicted}' not among dataset classes {names:?}"
                    ))
                })?;
                predictions.push(class);
                labels.push(names.iter().position(|n| n == label).expect("own label"));
            }
            let cm = confusion(&predictions, &labels, names.len())?;
            let report = classification_report(&cm)?;
            print!("{}", render_classification(&report, &names));
            if let Some(path) = csv_out {
                std::fs::write(path, classification_csv(&report, &names))?;
            }
        }
        ExternalPredictions::Scores { dimensions, rows } => {
            let schema = crate::corpus::RegressionSchema {
                text_column: "text".into(),
                score_columns: dimensions.clone(),
                score_ranges: vec![(-f64::MAX, f64::MAX); dimensions.len()],
            };
            let tok = crate::corpus::tokenize_regression_csv(data_path, &schema, &opts)?;
            let by_id: std::collections::HashMap<&str, &[f64]> = rows
                .iter()
                .map(|(id, v)| (id.as_str(), v.as_slice()))
                .collect();
            let mut predictions = Vec::with_capacity(tok.documents.len());
            let mut targets = Vec::with_capacity(tok.documents.len());
            for (i, (_, scores)) in tok.documents.iter().enumerate() {
                let id = i.to_string();
                let predicted = by_id.get(id.as_str()).ok_or_else(|| {
                    Error::Validation(format!("no external prediction for doc_id {id}"))
                })?;
                predictions.push(predicted.to_vec());
                targets.push(scores.clone());
            }
            let report = regression_report(&predictions, &targets, &dimensions)?;
            print!("{}", render_regression(&report));
            if let Some(path) = csv_out {
                std::fs::write(path, regression_csv(&report))?;
            }
        }
    }
    Ok(())
}

/// `evaluate`: score a dataset CSV with an archived model.
pub fn cmd_evaluate(model_path: &Path, data_path: &Path, csv_out: Option<&Path>) -> Result<()> {
    let (meta, net) = load_archive(model_path)?;
    let vocab = meta.vocabulary();
    match net.config.task {
        TaskKind::Classification { .. } => {
            let names = meta.class_names.clone().ok_or_else(|| {
                Error::Archive("classification archive lacks class names".into())
            })?;
            let schema = crate::corpus::ClassificationSchema::new(
                meta.text_column.clone(),
                meta.label_column.clone().unwrap_or_else(|| "label".into()),
            );
            let tok = tokenize_classification_csv(data_path, &schema, &meta.preprocess)?;
            let corpus = tok.encode_with_names(&vocab, &names)?;
            let mut predictions = Vec::with_capacity(corpus.len());
            let mut labels = Vec::with_capacity(corpus.len());
            for (seq, label) in corpus.documents() {
                predictions.push(argmax(&net.predict(seq)?));
                labels.push(*label);
            }
            let cm = confusion(&predictions, &labels, corpus.num_classes())?;
            let report = classification_report(&cm)?;
            print!("{}", render_classification(&report, &names));
            if let Some(path) = csv_out {
                std::fs::write(path, classification_csv(&report, &names))?;
            }
        }
        TaskKind::Regression { .. } => {
            let dims = meta
                .dimensions
                .clone()
                .ok_or_else(|| Error::Archive("regression archive lacks dimension names".into()))?;
            let ranges = meta
                .score_ranges
                .clone()
                .ok_or_else(|| Error::Archive("regression archive lacks score ranges".into()))?;
            let schema = crate::corpus::RegressionSchema {
                text_column: meta.text_column.clone(),
                score_columns: dims.clone(),
                score_ranges: ranges,
            };
            let tok =
                crate::corpus::tokenize_regression_csv(data_path, &schema, &meta.preprocess)?;
            let corpus = tok.encode(&vocab)?;
            let mut predictions = Vec::with_capacity(corpus.len());
            let mut targets = Vec::with_capacity(corpus.len());
            for (seq, scores) in corpus.documents() {
                predictions.push(net.predict(seq)?);
                targets.push(scores.clone());
            }
            let report = regression_report(&predictions, &targets, &dims)?;
            print!("{}", render_regression(&report));
            if let Some(path) = csv_out {
                std::fs::write(path, regression_csv(&report))?;
            }
        }
    }
    Ok(())
}

fn gather_inputs(text: Option<&str>, file: Option<&Path>) -> Result<Vec<String>> {
    match (text, file) {
        (Some(t), None) => Ok(vec![t.to_string()]),
        (None, Some(path)) => {
            let bytes = std::fs::read(path)?;
            let content = String::from_utf8(bytes).map_err(|e| Error::Encoding {
                offset: e.utf8_error().valid_up_to(),
            })?;
            Ok(content.lines().map(str::to_string).collect())
        }
        _ => Err(Error::Config(
            "provide exactly one of --text or --file".into(),
        )),
    }
}

/// `predict`: per input document, the argmax label plus the full
/// probability vector (classification) or the score vector (regression),
/// as CSV on stdout.
pub fn cmd_predict(model_path: &Path, text: Option<&str>, file: Option<&Path>) -> Result<()> {
    let (meta, net) = load_archive(model_path)?;
    let vocab = meta.vocabulary();
    let inputs = gather_inputs(text, file)?;
    match net.config.task {
        TaskKind::Classification { classes } => {
            let names = meta
                .class_names
                .clone()
                .ok_or_else(|| Error::Archive("classification archive lacks class names".into()))?;
            let mut header = String::from("doc_id,label");
            for k in 0..classes {
                header.push_str(&format!(",p_{k}"));
            }
            println!("{header}");
            for (i, input) in inputs.iter().enumerate() {
                let seq = encode_for_model(&meta, &vocab, input);
                let probs = net.predict(&seq)?;
                let label = &names[argmax(&probs)];
                let values: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
                println!("{i},{label},{}", values.join(","));
            }
        }
        TaskKind::Regression { .. } => {
            let dims = meta
                .dimensions
                .clone()
                .ok_or_else(|| Error::Archive("regression archive lacks dimension names".into()))?;
            println!("doc_id,{}", dims.join(","));
            for (i, input) in inputs.iter().enumerate() {
                let seq = encode_for_model(&meta, &vocab, input);
                let scores = net.predict(&seq)?;
                let values: Vec<String> = scores.iter().map(|s| s.to_string()).collect();
                println!("{i},{}", values.join(","));
            }
        }
    }
    Ok(())
}

/// `affect-features`: per-document probability vectors as a CSV file for
/// downstream tasks.
pub fn cmd_affect_features(model_path: &Path, file: &Path, out: &Path) -> Result<()> {
    let (meta, net) = load_archive(model_path)?;
    let TaskKind::Classification { classes } = net.config.task else {
        return Err(Error::InvalidArgument(
            "affect-features needs a classification model archive".into(),
        ));
    };
    let vocab = meta.vocabulary();
    let inputs = gather_inputs(None, Some(file))?;
    let mut csv = String::from("doc_id");
    for k in 0..classes {
        csv.push_str(&format!(",p_{k}"));
    }
    csv.push('\n');
    for (i, input) in inputs.iter().enumerate() {
        let seq = encode_for_model(&meta, &vocab, input);
        let probs = net.predict(&seq)?;
        let values: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
        csv.push_str(&format!("{i},{}\n", values.join(",")));
    }
    std::fs::write(out, csv)?;
    println!("wrote {} feature rows to {}", inputs.len(), out.display());
    Ok(())
}

fn read_feature_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let content = std::fs::read_to_string(path)?;
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Data {
        line: 1,
        message: e.to_string(),
    })?.clone();
    if headers.get(0) != Some("doc_id") {
        return Err(Error::Schema(format!(
            "feature CSV must start with a doc_id column, found {:?}",
            headers.get(0)
        )));
    }
    let width = headers.len() - 1;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != width + 1 {
            return Err(Error::Data {
                line,
                message: format!("expected {} fields, found {}", width + 1, record.len()),
            });
        }
        let doc_id = record.get(0).unwrap_or_default().to_string();
        let values: Vec<f64> = (1..record.len())
            .map(|i| {
                record
                    .get(i)
                    .unwrap_or_default()
                    .trim()
                    .parse()
                    .map_err(|_| Error::Data {
                        line,
                        message: format!("'{}' is not a number", record.get(i).unwrap_or_default()),
                    })
            })
            .collect::<Result<_>>()?;
        rows.push((doc_id, values));
    }
    Ok(rows)
}

fn read_label_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let content = std::fs::read_to_string(path)?;
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let doc_id = record
            .get(0)
            .ok_or(Error::Data {
                line,
                message: "missing doc_id".into(),
            })?
            .to_string();
        let label = record
            .get(1)
            .ok_or(Error::Data {
                line,
                message: "missing label".into(),
            })?
            .trim()
            .to_string();
        rows.push((doc_id, label));
    }
    Ok(rows)
}

/// `downstream`: train a logistic classifier on exported affect features
/// against binary labels and report its held-out accuracy.
pub fn cmd_downstream(features_path: &Path, labels_path: &Path, seed: u64) -> Result<()> {
    let features = read_feature_csv(features_path)?;
    let labels = read_label_csv(labels_path)?;
    let label_by_id: std::collections::HashMap<&str, &str> = labels
        .iter()
        .map(|(id, l)| (id.as_str(), l.as_str()))
        .collect();

    let mut names: Vec<String> = labels.iter().map(|(_, l)| l.clone()).collect();
    names.sort();
    names.dedup();
    if names.len() != 2 {
        return Err(Error::Validation(format!(
            "downstream task needs exactly two label values, found {names:?}"
        )));
    }

    let mut xs: Vec<SparseVector> = Vec::new();
    let mut ys: Vec<usize> = Vec::new();
    let width = features.first().map(|(_, v)| v.len()).unwrap_or(0);
    for (doc_id, values) in &features {
        if values.len() != width {
            return Err(Error::Validation(format!(
                "feature row {doc_id} has {} values, expected {width}",
                values.len()
            )));
        }
        if let Some(label) = label_by_id.get(doc_id.as_str()) {
            xs.push(dense_to_sparse(values));
            ys.push(names.iter().position(|n| n == label).expect("known label"));
        }
    }
    if xs.len() < 2 {
        return Err(Error::Validation(
            "fewer than two documents join features with labels".into(),
        ));
    }

    // Seeded 80/20 split of the joined rows.
    let mut order: Vec<usize> = (0..xs.len()).collect();
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let take = ((order.len() as f64 * 0.8).round() as usize).clamp(1, order.len() - 1);
    let (train_idx, test_idx) = order.split_at(take);

    let train_x: Vec<SparseVector> = train_idx.iter().map(|&i| xs[i].clone()).collect();
    let train_y: Vec<usize> = train_idx.iter().map(|&i| ys[i]).collect();
    let cfg = LinearConfig {
        seed: rng.gen::<u64>(),
        ..LinearConfig::default()
    };
    let model = train_linear_classifier(&train_x, &train_y, 2, None, width, &cfg)?;

    let correct = test_idx
        .iter()
        .filter(|&&i| model.predict_label(&xs[i]) == ys[i])
        .count();
    let accuracy = correct as f64 / test_idx.len() as f64;
    println!(
        "downstream task: {} joined documents, {} train / {} test, labels {names:?}",
        xs.len(),
        train_idx.len(),
        test_idx.len()
    );
    println!("downstream accuracy {accuracy:.4}");
    Ok(())
}
