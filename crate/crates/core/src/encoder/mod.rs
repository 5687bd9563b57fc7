//! Word embeddings and the two-level (sentence, then process) BiLSTM encoder.

mod embeddings;
mod lstm;
mod vocab;

pub use embeddings::{hashed_row, load_embeddings, load_embeddings_from, random_embeddings, LoadedEmbeddings, OOV_RANGE};
pub use lstm::{BiLayer, BiLstm, BiLstmOutput, LstmGates, LstmParams};
pub use vocab::Vocabulary;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensorgrad::{Bound, Dropout, ParamId, ParamStore, Tape, Tensor, Var};

/// Word-level states of one sentence plus its summary vector
/// `[last forward ; last backward]`.
pub struct SentenceEncoding {
    pub words: Vec<Var>,
    pub summary: Var,
}

/// Embedding table, stacked sentence BiLSTM and a single-layer process BiLSTM.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchicalEncoder {
    pub embedding: ParamId,
    pub vocab_size: usize,
    pub emb_dim: usize,
    pub sentence: BiLstm,
    pub process: BiLstm,
}

impl HierarchicalEncoder {
    /// Register all encoder parameters under `prefix`; `embeddings` is the
    /// initial `[vocab_size × emb_dim]` table.
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        embeddings: Tensor,
        hidden: usize,
        sentence_layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let (vocab_size, emb_dim) = match embeddings.shape() {
            &[v, d] => (v, d),
            s => {
                return Err(Error::Shape {
                    op: "embedding matrix",
                    left: s.to_vec(),
                    right: vec![0, 0],
                })
            }
        };
        let embedding = store.add(format!("{prefix}.embedding"), embeddings)?;
        let sentence = BiLstm::register(store, &format!("{prefix}.sentence"), emb_dim, hidden, sentence_layers, rng)?;
        let process = BiLstm::register(store, &format!("{prefix}.process"), 2 * hidden, hidden, 1, rng)?;
        Ok(HierarchicalEncoder {
            embedding,
            vocab_size,
            emb_dim,
            sentence,
            process,
        })
    }

    /// Width of both ŝ and s̃.
    pub fn output_dim(&self) -> usize {
        self.sentence.output_dim()
    }

    pub fn embed(&self, tape: &mut Tape, bound: &Bound, token: usize) -> Result<Var> {
        tape.row(bound.var(self.embedding), token)
    }

    pub fn encode_sentence(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        tokens: &[usize],
        dropout: &mut Dropout,
    ) -> Result<SentenceEncoding> {
        if tokens.is_empty() {
            return Err(Error::contract("cannot encode an empty sentence"));
        }
        let xs = tokens
            .iter()
            .map(|&t| {
                let e = self.embed(tape, bound, t)?;
                Ok(dropout.apply(tape, e))
            })
            .collect::<Result<Vec<_>>>()?;
        let out = self.sentence.run(tape, bound, &xs, dropout)?;
        let summary = tape.concat(&[out.last_forward, out.last_backward], 0)?;
        Ok(SentenceEncoding {
            words: out.states,
            summary,
        })
    }

    /// ŝ for every sentence of a document (token ids).
    pub fn encode_sentences(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        doc: &[Vec<usize>],
        dropout: &mut Dropout,
    ) -> Result<Vec<Var>> {
        doc.iter()
            .map(|s| Ok(self.encode_sentence(tape, bound, s, dropout)?.summary))
            .collect()
    }

    /// Process-level BiLSTM over sentence vectors; returns s̃ per position.
    pub fn contextualize(&self, tape: &mut Tape, bound: &Bound, sentences: &[Var]) -> Result<Vec<Var>> {
        if sentences.is_empty() {
            return Err(Error::contract("cannot encode an empty process"));
        }
        Ok(self.process.run(tape, bound, sentences, &mut Dropout::disabled())?.states)
    }

    pub fn encode_process(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        doc: &[Vec<usize>],
        dropout: &mut Dropout,
    ) -> Result<Vec<Var>> {
        if doc.is_empty() {
            return Err(Error::contract("cannot encode an empty process"));
        }
        let s = self.encode_sentences(tape, bound, doc, dropout)?;
        self.contextualize(tape, bound, &s)
    }
}
