//! Text-based emotion recognition built from first principles: corpus
//! ingestion and preprocessing, a tape-based reverse-mode gradient engine,
//! LSTM/BiLSTM sequence encoders with variational recurrent dropout,
//! class-weighted losses for imbalanced labels, sentiment-to-affect transfer
//! learning, tf-idf linear baselines, and a full evaluation harness.
//!
//! See the crate examples for runnable walkthroughs of each capability and
//! the `affect` binary for the batch CLI.

pub mod baseline;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod layers;
pub mod metrics;
pub mod numerics;
pub mod objective;
pub mod training;
pub mod transfer;

pub use error::{Error, Result};
