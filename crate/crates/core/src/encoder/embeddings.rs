//! Word-vector text files: one `token v1 v2 ... vd` record per line,
//! single-space separated, no header.

use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensorgrad::Tensor;

use super::Vocabulary;

pub const OOV_RANGE: f64 = 0.1;

/// FNV-1a, stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic row for a token with no pretrained vector: uniform in
/// `[-0.1, 0.1]`, seeded by the token's hash.
pub fn hashed_row(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()) ^ seed);
    (0..dim).map(|_| rng.gen_range(-OOV_RANGE..=OOV_RANGE)).collect()
}

pub fn random_embeddings(vocab: &Vocabulary, dim: usize, seed: u64) -> Tensor {
    let data = vocab.tokens().iter().flat_map(|t| hashed_row(t, dim, seed)).collect();
    Tensor::matrix(vocab.len(), dim, data).expect("rows match vocabulary")
}

#[derive(Clone, Debug)]
pub struct LoadedEmbeddings {
    pub matrix: Tensor,
    /// Vocabulary entries that received a pretrained vector.
    pub coverage: usize,
}

/// Read pretrained vectors for the tokens of `vocab`.
///
/// With `dim = Some(d)` every record must have `d` values (a parse error at
/// the offending line otherwise). With `dim = None` the first record fixes
/// the dimension and a later disagreement is a format error.
pub fn load_embeddings_from<R: BufRead>(
    reader: R,
    vocab: &Vocabulary,
    dim: Option<usize>,
    seed: u64,
) -> Result<LoadedEmbeddings> {
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    let mut file_dim = dim;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let token = fields.next().unwrap_or_default();
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad number {f:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if token.is_empty() || values.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "record needs a token and at least one value".into(),
            });
        }
        match (dim, file_dim) {
            (Some(d), _) if values.len() != d => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", d + 1, values.len() + 1),
                })
            }
            (None, Some(d)) if values.len() != d => {
                return Err(Error::Format(format!(
                    "line {lineno}: dimension {} disagrees with earlier dimension {d}",
                    values.len()
                )))
            }
            (None, None) => file_dim = Some(values.len()),
            _ => {}
        }
        if let Some(id) = vocab.get(token) {
            rows[id] = Some(values);
        }
    }
    let d = file_dim.ok_or_else(|| Error::Format("embedding file has no records".into()))?;
    let coverage = rows.iter().filter(|r| r.is_some()).count();
    let data = rows
        .into_iter()
        .zip(vocab.tokens())
        .flat_map(|(row, tok)| row.unwrap_or_else(|| hashed_row(tok, d, seed)))
        .collect();
    Ok(LoadedEmbeddings {
        matrix: Tensor::matrix(vocab.len(), d, data)?,
        coverage,
    })
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: Option<usize>,
    seed: u64,
) -> Result<LoadedEmbeddings> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_embeddings_from(BufReader::new(file), vocab, dim, seed)
}
