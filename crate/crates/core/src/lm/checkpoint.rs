//! Checkpoint container.
//!
//! ```text
//! offset  size  content
//! 0       4     magic "PSCK"
//! 4       4     format version, u32 little-endian (currently 1)
//! 8       8     header length H, u64 little-endian
//! 16      H     UTF-8 JSON header: {"config", "vocab", "state", "tensors": [{"name", "shape"}]}
//! 16+H    8·N   every tensor's values in header order, row-major f64 little-endian
//! ```
//!
//! Tensor names and shapes must match the network built from `config` and
//! `vocab` exactly; values are copied bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::Vocabulary;
use crate::error::{Error, Result};
use crate::tensorgrad::Tensor;

use super::{LmConfig, ProcessLm, TrainState};

pub const MAGIC: &[u8; 4] = b"PSCK";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: LmConfig,
    vocab: Vec<String>,
    state: TrainState,
    tensors: Vec<TensorEntry>,
}

pub fn write_checkpoint<W: Write>(mut w: W, model: &ProcessLm, state: &TrainState) -> Result<()> {
    let header = Header {
        config: model.config.clone(),
        vocab: model.vocab.tokens().to_vec(),
        state: state.clone(),
        tensors: model
            .store
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let mut buf = Vec::with_capacity(16 + json.len() + 8 * model.store.numel());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for (_, t) in model.store.iter() {
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(|e| Error::Format(format!("writing checkpoint: {e}")))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ProcessLm, TrainState)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Format(format!("reading checkpoint: {e}")))?;
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes
        .get(16..16usize.saturating_add(hlen))
        .ok_or_else(|| Error::Format("truncated checkpoint header".into()))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let vocab = Vocabulary::from_tokens(header.vocab)?;
    let mut model = ProcessLm::new(header.config, vocab, None)?;

    if header.tensors.len() != model.store.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} tensors, model expects {}",
            header.tensors.len(),
            model.store.len()
        )));
    }
    let mut payload = &bytes[16 + hlen..];
    for entry in header.tensors {
        let n: usize = entry.shape.iter().product();
        if payload.len() < 8 * n {
            return Err(Error::Format(format!("truncated data for tensor {}", entry.name)));
        }
        let data = payload[..8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        payload = &payload[8 * n..];
        model.store.assign(&entry.name, Tensor::new(entry.shape, data)?)?;
    }
    if !payload.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes in checkpoint", payload.len())));
    }
    Ok((model, header.state))
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &ProcessLm, state: &TrainState) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_checkpoint(&mut w, model, state)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ProcessLm, TrainState)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file))
}
