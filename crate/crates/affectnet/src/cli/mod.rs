//! Batch command-line surface: dataset training with the multirun
//! protocol, sent2affect transfer, evaluation, prediction, affect-feature
//! extraction and the downstream demo, plus model persistence.
//!
//! Exit codes: 1 for configuration errors, 2 for data errors, 3 for
//! training failures.

mod archive;
mod commands;
mod config;
mod report;

pub use archive::{load_archive, save_archive, ArchiveMetadata, ARCHIVE_MAGIC};
pub use config::{DataSettings, DataTask, RunSettings, TransferSettings};
pub use report::{comparison_table, render_classification, render_regression, ComparisonRow};

use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Text-based emotion recognition: train, transfer, evaluate, predict.
#[derive(Parser)]
#[command(name = "affect", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train with the multirun protocol and emit a comparison report.
    Train {
        /// Run configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the archive, reports and config echo.
        #[arg(long)]
        out: PathBuf,
        /// Number of independent runs (overrides the config; default 10).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Pretrain on sentiment, swap the head, fine-tune on the affect task.
    Transfer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a dataset with an archived model, or with externally
    /// computed predictions.
    Evaluate {
        #[arg(long, conflicts_with = "external_predictions")]
        model: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Predictions CSV (doc_id,predicted_label or doc_id,<scores>)
        /// from an external model, scored instead of an archive.
        #[arg(long)]
        external_predictions: Option<PathBuf>,
        /// Also write the report as CSV to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict labels/scores for raw text.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// A single document passed inline.
        #[arg(long)]
        text: Option<String>,
        /// A file with one document per line.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Write per-document probability vectors as CSV.
    AffectFeatures {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a logistic classifier on exported features vs binary labels.
    Downstream {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Parses arguments and runs the selected command, returning the process
/// exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            return 1;
        }
    };
    let result = match &cli.command {
        Command::Train { config, out, runs } => commands::cmd_train(config, out, *runs),
        Command::Transfer { config, out } => commands::cmd_transfer(config, out),
        Command::Evaluate {
            model,
            data,
            external_predictions,
            out,
        } => match (model, external_predictions) {
            (Some(model), None) => commands::cmd_evaluate(model, data, out.as_deref()),
            (None, Some(predictions)) => {
                commands::cmd_evaluate_external(predictions, data, out.as_deref())
            }
            _ => Err(crate::error::Error::Config(
                "evaluate needs exactly one of --model or --external-predictions".into(),
            )),
        },
        Command::Predict { model, text, file } => {
            commands::cmd_predict(model, text.as_deref(), file.as_deref())
        }
        Command::AffectFeatures { model, file, out } => {
            commands::cmd_affect_features(model, file, out)
        }
        Command::Downstream {
            features,
            labels,
            seed,
        } => commands::cmd_downstream(features, labels, *seed),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
