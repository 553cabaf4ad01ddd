//! On-disk formats: binary tensors, pipeline configuration, and JSON Lines
//! helpers.

mod config;
mod tensor_file;

pub use config::{AlignScope, ClipConfig, EmbeddingConfig, GridConfig, MaskConfig, MetricsConfig, PipelineConfig};
pub use tensor_file::{Tensor, DTYPE_F32, MAGIC, VERSION};

use std::io::BufRead;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    Ok(buf)
}
