//! Model persistence. An archive is a single binary file:
//!
//! * 8-byte magic `AFFECTV1`
//! * u64 little-endian length, then that many bytes of UTF-8 JSON
//!   metadata (architecture, vocabulary, preprocessing options, task
//!   labels, training config, metric summary)
//! * u32 little-endian tensor count, then per tensor: u32 name length +
//!   UTF-8 name, u64 rows, u64 cols, then rows*cols little-endian IEEE-754
//!   f64 values in row-major order.
//!
//! Save followed by load restores bit-identical parameters and therefore
//! identical predictions.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{PreprocessOptions, Vocabulary};
use crate::error::{Error, Result};
use crate::layers::{AffectNetwork, NetworkConfig};
use crate::numerics::Tensor;
use crate::training::{TaskReport, TrainConfig};

pub const ARCHIVE_MAGIC: &[u8; 8] = b"AFFECTV1";

/// Everything about a model except the tensor payloads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchiveMetadata {
    pub network: NetworkConfig,
    /// Vocabulary tokens at indices 2.., in order.
    pub vocabulary: Vec<String>,
    pub preprocess: PreprocessOptions,
    /// Class names for classification tasks.
    pub class_names: Option<Vec<String>>,
    /// Dimension names and ranges for regression tasks.
    pub dimensions: Option<Vec<String>>,
    pub score_ranges: Option<Vec<(f64, f64)>>,
    /// Column names the training data used.
    pub text_column: String,
    pub label_column: Option<String>,
    pub embedding_trainable: bool,
    pub train_config: Option<TrainConfig>,
    pub metrics: Option<TaskReport>,
}

impl ArchiveMetadata {
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_retained_tokens(self.vocabulary.clone())
    }
}

pub fn save_archive(path: &Path, net: &AffectNetwork, metadata: &ArchiveMetadata) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(ARCHIVE_MAGIC)?;
    let json = serde_json::to_vec(metadata)
        .map_err(|e| Error::Archive(format!("cannot serialize metadata: {e}")))?;
    file.write_all(&(json.len() as u64).to_le_bytes())?;
    file.write_all(&json)?;

    let params = net.parameters();
    file.write_all(&(params.len() as u32).to_le_bytes())?;
    for p in params {
        let name = p.name().as_bytes();
        file.write_all(&(name.len() as u32).to_le_bytes())?;
        file.write_all(name)?;
        file.write_all(&(p.value.rows() as u64).to_le_bytes())?;
        file.write_all(&(p.value.cols() as u64).to_le_bytes())?;
        for v in p.value.data() {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact(file: &mut impl Read, len: usize, what: &str) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    file.read_exact(&mut buf)
        .map_err(|_| Error::Archive(format!("truncated archive while reading {what}")))?;
    Ok(buf)
}

fn read_u32(file: &mut impl Read, what: &str) -> Result<u32> {
    let b = read_exact(file, 4, what)?;
    Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
}

fn read_u64(file: &mut impl Read, what: &str) -> Result<u64> {
    let b = read_exact(file, 8, what)?;
    Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
}

pub fn load_archive(path: &Path) -> Result<(ArchiveMetadata, AffectNetwork)> {
    let mut file = std::fs::File::open(path)?;
    let magic = read_exact(&mut file, 8, "magic")?;
    if magic != ARCHIVE_MAGIC {
        return Err(Error::Archive(format!(
            "not an AFFECTV1 archive (magic {:?})",
            String::from_utf8_lossy(&magic)
        )));
    }
    let json_len = read_u64(&mut file, "metadata length")? as usize;
    let json = read_exact(&mut file, json_len, "metadata")?;
    let metadata: ArchiveMetadata = serde_json::from_slice(&json)
        .map_err(|e| Error::Archive(format!("bad metadata: {e}")))?;

    // Build a network of the right shape, then overwrite every parameter
    // with the stored tensors.
    let mut throwaway_rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = AffectNetwork::new(metadata.network.clone(), &mut throwaway_rng)?;
    net.embedding.trainable = metadata.embedding_trainable;

    let count = read_u32(&mut file, "tensor count")? as usize;
    if count != net.parameters().len() {
        return Err(Error::Archive(format!(
            "archive holds {count} tensors but the architecture has {}",
            net.parameters().len()
        )));
    }
    for param in net.parameters_mut() {
        let name_len = read_u32(&mut file, "tensor name length")? as usize;
        let name = String::from_utf8(read_exact(&mut file, name_len, "tensor name")?)
            .map_err(|_| Error::Archive("tensor name is not UTF-8".into()))?;
        if name != param.name() {
            return Err(Error::Archive(format!(
                "tensor order mismatch: expected {}, found {name}",
                param.name()
            )));
        }
        let rows = read_u64(&mut file, "tensor rows")? as usize;
        let cols = read_u64(&mut file, "tensor cols")? as usize;
        if (rows, cols) != param.value.shape() {
            return Err(Error::Archive(format!(
                "tensor {name} has shape {rows}x{cols}, expected {:?}",
                param.value.shape()
            )));
        }
        let bytes = read_exact(&mut file, rows * cols * 8, "tensor data")?;
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        param.value = Tensor::new(rows, cols, data)
            .map_err(|e| Error::Archive(format!("tensor {name}: {e}")))?;
    }
    Ok((metadata, net))
}
