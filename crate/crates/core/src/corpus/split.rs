use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

use super::doc::ProcessDoc;

/// Seeded shuffle, then the first `train_fraction` (rounded) of the
/// documents go to training and the rest to test.
pub fn split_corpus(
    docs: &[ProcessDoc],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<ProcessDoc>, Vec<ProcessDoc>)> {
    if docs.len() < 10 {
        return Err(Error::Config(format!(
            "need at least 10 processes to split, got {}",
            docs.len()
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((docs.len() as f64 * train_fraction).round() as usize).clamp(1, docs.len() - 1);
    let train = order[..n_train].iter().map(|&i| docs[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| docs[i].clone()).collect();
    Ok((train, test))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusStats {
    /// Distinct source documents (process ids up to the first `/`).
    pub documents: usize,
    pub processes: usize,
    pub sentences: usize,
    pub avg_words_per_sentence: f64,
    pub max_words_per_sentence: usize,
    pub avg_sentences_per_process: f64,
}

pub fn stats(docs: &[ProcessDoc]) -> Result<CorpusStats> {
    if docs.is_empty() {
        return Err(Error::contract("statistics of an empty corpus"));
    }
    let documents: BTreeSet<&str> = docs
        .iter()
        .map(|d| d.id.split('/').next().unwrap_or(&d.id))
        .collect();
    let sentences: usize = docs.iter().map(ProcessDoc::len).sum();
    let words: usize = docs.iter().map(ProcessDoc::token_count).sum();
    let max_words = docs
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| s.tokens.len()))
        .max()
        .unwrap_or(0);
    Ok(CorpusStats {
        documents: documents.len(),
        processes: docs.len(),
        sentences,
        avg_words_per_sentence: words as f64 / sentences.max(1) as f64,
        max_words_per_sentence: max_words,
        avg_sentences_per_process: sentences as f64 / docs.len() as f64,
    })
}
