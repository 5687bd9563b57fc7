use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::ProcessDoc;
use crate::encoder::{random_embeddings, HierarchicalEncoder, LstmParams, Vocabulary};
use crate::error::{Error, Result};
use crate::onlstm::OnLstm;
use crate::tensorgrad::{Bound, Dropout, ParamId, ParamStore, Tape, Tensor, Var};

use super::{ContextMode, LmConfig};

/// Parameter handles of the whole network.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub encoder: HierarchicalEncoder,
    pub onlstm: OnLstm,
    /// Context used when predicting the first sentence.
    pub start: ParamId,
    pub init_h_w: ParamId,
    pub init_h_b: ParamId,
    pub init_c_w: ParamId,
    pub init_c_b: ParamId,
    pub decoder: LstmParams,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

/// Process-level language model: each sentence is decoded word by word from
/// an ON-LSTM summary of the sentences before it.
#[derive(Clone, Debug)]
pub struct ProcessLm {
    pub config: LmConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub net: Network,
}

/// Loss of one document on a tape.
pub struct DocLoss {
    /// Summed negative log-likelihood.
    pub total: Var,
    pub per_sentence: Vec<Var>,
    /// Predicted tokens, `<eos>` included.
    pub tokens: usize,
}

impl ProcessLm {
    /// Fresh model; `embeddings` (if any) must be `[vocab.len() × emb_dim]`.
    pub fn new(config: LmConfig, vocab: Vocabulary, embeddings: Option<Tensor>) -> Result<Self> {
        config.validate()?;
        let emb = match embeddings {
            Some(t) => {
                if t.shape() != [vocab.len(), config.emb_dim] {
                    return Err(Error::Shape {
                        op: "initial embeddings",
                        left: t.shape().to_vec(),
                        right: vec![vocab.len(), config.emb_dim],
                    });
                }
                t
            }
            None => random_embeddings(&vocab, config.emb_dim, config.seed),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let c = &config;
        let encoder = HierarchicalEncoder::register(&mut store, "enc", emb, c.hidden, c.sentence_layers, &mut rng)?;
        let onlstm = OnLstm::register(
            &mut store,
            "onlstm",
            encoder.output_dim(),
            c.d_m,
            c.onlstm_layers,
            c.chunk,
            c.master_input,
            &mut rng,
        )?;
        let k = 1.0 / (c.d_m as f64).sqrt();
        let start = store.add("start", Tensor::uniform(&[c.d_m], k, &mut rng))?;
        let init_h_w = store.add("init_h.w", Tensor::uniform(&[c.decoder_hidden, c.d_m], k, &mut rng))?;
        let init_h_b = store.add("init_h.b", Tensor::zeros(&[c.decoder_hidden]))?;
        let init_c_w = store.add("init_c.w", Tensor::uniform(&[c.decoder_hidden, c.d_m], k, &mut rng))?;
        let init_c_b = store.add("init_c.b", Tensor::zeros(&[c.decoder_hidden]))?;
        let decoder = LstmParams::register(&mut store, "dec", c.emb_dim, c.decoder_hidden, &mut rng)?;
        let ko = 1.0 / (c.decoder_hidden as f64).sqrt();
        let out_w = store.add("out.w", Tensor::uniform(&[vocab.len(), c.decoder_hidden], ko, &mut rng))?;
        let out_b = store.add("out.b", Tensor::zeros(&[vocab.len()]))?;
        Ok(ProcessLm {
            config,
            vocab,
            store,
            net: Network {
                encoder,
                onlstm,
                start,
                init_h_w,
                init_h_b,
                init_c_w,
                init_c_b,
                decoder,
                out_w,
                out_b,
            },
        })
    }

    pub fn encode_doc(&self, doc: &ProcessDoc) -> Vec<Vec<usize>> {
        self.vocab.encode_doc(doc)
    }

    /// ON-LSTM context for each sentence `1..=L`: the start vector for the
    /// first, the top-layer state after consuming `s̃_1..s̃_{l-1}` for the rest.
    pub fn contexts(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        sentences: &[Var],
        dropout: &mut Dropout,
    ) -> Result<Vec<Var>> {
        let net = &self.net;
        let mut ctx = vec![bound.var(net.start)];
        if sentences.len() < 2 {
            return Ok(ctx);
        }
        match self.config.context {
            ContextMode::Prefix => {
                for l in 1..sentences.len() {
                    let s = net.encoder.contextualize(tape, bound, &sentences[..l])?;
                    let out = net.onlstm.forward(tape, bound, &s, None, dropout)?;
                    ctx.push(*out.outputs.last().expect("nonempty"));
                }
            }
            ContextMode::Full => {
                let s = net.encoder.contextualize(tape, bound, sentences)?;
                let out = net.onlstm.forward(tape, bound, &s[..s.len() - 1], None, dropout)?;
                ctx.extend(out.outputs);
            }
        }
        Ok(ctx)
    }

    /// Teacher-forced decoder loss of one sentence given its context.
    pub fn decode_nll(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        tokens: &[usize],
        ctx: Var,
        dropout: &mut Dropout,
    ) -> Result<Var> {
        let net = &self.net;
        let zh = tape.matmul(bound.var(net.init_h_w), ctx)?;
        let zh = tape.add(zh, bound.var(net.init_h_b))?;
        let mut h = tape.tanh(zh);
        let zc = tape.matmul(bound.var(net.init_c_w), ctx)?;
        let mut c = tape.add(zc, bound.var(net.init_c_b))?;
        let mut terms = Vec::with_capacity(tokens.len() + 1);
        let mut prev = Vocabulary::BOS;
        for &target in tokens.iter().chain(std::iter::once(&Vocabulary::EOS)) {
            let e = net.encoder.embed(tape, bound, prev)?;
            let e = dropout.apply(tape, e);
            (h, c) = net.decoder.step(tape, bound, e, h, c)?;
            let hd = dropout.apply(tape, h);
            let logits = tape.matmul(bound.var(net.out_w), hd)?;
            let logits = tape.add(logits, bound.var(net.out_b))?;
            terms.push(tape.cross_entropy(logits, target)?);
            prev = target;
        }
        tape.add_all(&terms)
    }

    /// Summed loss of every sentence of a document (token ids).
    pub fn doc_loss(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        doc: &[Vec<usize>],
        dropout: &mut Dropout,
    ) -> Result<DocLoss> {
        if doc.is_empty() {
            return Err(Error::contract("document has no sentences"));
        }
        let s = self.net.encoder.encode_sentences(tape, bound, doc, dropout)?;
        let ctx = self.contexts(tape, bound, &s, dropout)?;
        let per_sentence = doc
            .iter()
            .zip(&ctx)
            .map(|(tokens, c)| self.decode_nll(tape, bound, tokens, *c, dropout))
            .collect::<Result<Vec<_>>>()?;
        Ok(DocLoss {
            total: tape.add_all(&per_sentence)?,
            per_sentence,
            tokens: doc.iter().map(|s| s.len() + 1).sum(),
        })
    }

    /// Negative log-likelihood of sentence `l` (1-based) of `doc`.
    pub fn sentence_nll(&self, doc: &ProcessDoc, l: usize) -> Result<f64> {
        if l == 0 || l > doc.len() {
            return Err(Error::contract(format!(
                "sentence {l} out of range 1..={}",
                doc.len()
            )));
        }
        let ids = self.encode_doc(doc);
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let mut off = Dropout::disabled();
        let s = self.net.encoder.encode_sentences(&mut tape, &bound, &ids, &mut off)?;
        let ctx = self.contexts(&mut tape, &bound, &s, &mut off)?;
        let nll = self.decode_nll(&mut tape, &bound, &ids[l - 1], ctx[l - 1], &mut off)?;
        Ok(tape.scalar(nll))
    }

    /// `(summed nll, predicted tokens)` of one document, without dropout.
    pub fn doc_nll(&self, doc: &ProcessDoc) -> Result<(f64, usize)> {
        let ids = self.encode_doc(doc);
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let loss = self.doc_loss(&mut tape, &bound, &ids, &mut Dropout::disabled())?;
        Ok((tape.scalar(loss.total), loss.tokens))
    }

    /// Per-sentence master forget gates `f̃_l` (full width) of ON-LSTM layer
    /// `layer`, taken at step `l` of a run over `s̃_1..s̃_l`.
    pub fn master_forget_profile(&self, doc: &ProcessDoc, layer: usize) -> Result<Vec<Vec<f64>>> {
        let layers = self.net.onlstm.layers.len();
        if layer >= layers {
            return Err(Error::Index {
                what: "gate layer",
                index: layer,
                bound: layers,
            });
        }
        let ids = self.encode_doc(doc);
        if ids.is_empty() {
            return Err(Error::contract("document has no sentences"));
        }
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let mut off = Dropout::disabled();
        let enc = &self.net.encoder;
        let s = enc.encode_sentences(&mut tape, &bound, &ids, &mut off)?;
        let gate = |tape: &Tape, out: &crate::onlstm::OnLstmOutput, t: usize| {
            tape.value(out.steps[layer][t].master_forget).to_vec()
        };
        match self.config.context {
            ContextMode::Prefix => (1..=s.len())
                .map(|l| {
                    let st = enc.contextualize(&mut tape, &bound, &s[..l])?;
                    let out = self.net.onlstm.forward(&mut tape, &bound, &st, None, &mut off)?;
                    Ok(gate(&tape, &out, l - 1))
                })
                .collect(),
            ContextMode::Full => {
                let st = enc.contextualize(&mut tape, &bound, &s)?;
                let out = self.net.onlstm.forward(&mut tape, &bound, &st, None, &mut off)?;
                Ok((0..s.len()).map(|t| gate(&tape, &out, t)).collect())
            }
        }
    }
}
