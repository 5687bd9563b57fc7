use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ProcessDoc;
use crate::error::{Error, Result};
use crate::parallel::map_ordered;
use crate::tensorgrad::{Dropout, Tape};

use super::ProcessLm;

/// Where a run stands; stored in checkpoints so training can resume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    /// Parameter updates applied so far.
    pub step: u64,
    /// Completed epochs.
    pub epoch: usize,
    pub lr: f64,
    pub best_valid: Option<f64>,
}

impl TrainState {
    pub fn new(lr: f64) -> Self {
        TrainState {
            step: 0,
            epoch: 0,
            lr,
            best_valid: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub step: u64,
    pub lr: f64,
    /// Perplexity of the training loss as it was accumulated (dropout on).
    pub train_ppl: f64,
    pub valid_ppl: f64,
    pub mean_grad_norm: f64,
}

/// `exp(Σ nll / Σ tokens)` over documents, evaluated in parallel and summed
/// in document order.
pub fn perplexity(model: &ProcessLm, docs: &[ProcessDoc]) -> Result<f64> {
    let (nll, tokens) = corpus_nll(model, docs)?;
    Ok((nll / tokens as f64).exp())
}

/// Summed nll and token count over documents.
pub fn corpus_nll(model: &ProcessLm, docs: &[ProcessDoc]) -> Result<(f64, usize)> {
    if docs.is_empty() {
        return Err(Error::contract("perplexity of an empty document list"));
    }
    let parts = map_ordered(docs, |d| model.doc_nll(d))?;
    Ok(parts
        .into_iter()
        .fold((0.0, 0), |(n, t), (dn, dt)| (n + dn, t + dt)))
}

/// Scale `grads` in place so their global norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_gradients(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for x in grads.iter_mut().flat_map(|g| g.iter_mut()) {
            *x *= s;
        }
    }
    norm
}

/// Mean per-token loss gradient of a batch: `(grads, summed nll, tokens)`.
pub fn batch_gradients(
    model: &ProcessLm,
    docs: &[&ProcessDoc],
    dropout: &mut Dropout,
) -> Result<(Vec<Vec<f64>>, f64, usize)> {
    let mut sum: Option<Vec<Vec<f64>>> = None;
    let mut nll = 0.0;
    let mut tokens = 0;
    for doc in docs {
        let ids = model.encode_doc(doc);
        let mut tape = Tape::new();
        let bound = model.store.bind(&mut tape);
        let loss = model.doc_loss(&mut tape, &bound, &ids, dropout)?;
        nll += tape.scalar(loss.total);
        tokens += loss.tokens;
        let g = model.store.gradients(&bound, &tape.backward(loss.total)?);
        match &mut sum {
            None => sum = Some(g),
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(&g) {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                }
            }
        }
    }
    let mut grads = sum.ok_or_else(|| Error::contract("empty batch"))?;
    let inv = 1.0 / tokens as f64;
    for x in grads.iter_mut().flat_map(|g| g.iter_mut()) {
        *x *= inv;
    }
    Ok((grads, nll, tokens))
}

/// `p ← p − lr·g` for every parameter.
pub fn sgd_update(model: &mut ProcessLm, grads: &[Vec<f64>], lr: f64) {
    let ids: Vec<_> = model.store.ids().collect();
    for (id, g) in ids.into_iter().zip(grads) {
        for (p, d) in model.store.get_mut(id).data_mut().iter_mut().zip(g) {
            *p -= lr * d;
        }
    }
}

fn mix(seed: u64, salt: u64, n: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ n.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Train until `model.config.epochs` epochs are complete, starting from
/// `state`. Document order and dropout masks are derived from the seed and
/// the epoch/step counters, so resuming from a saved state continues the
/// same trajectory. `on_epoch` sees each epoch's metrics as they finish.
pub fn train(
    model: &mut ProcessLm,
    state: &mut TrainState,
    train_docs: &[ProcessDoc],
    valid_docs: &[ProcessDoc],
    mut on_epoch: impl FnMut(&EpochMetrics, &ProcessLm, &TrainState) -> Result<()>,
) -> Result<Vec<EpochMetrics>> {
    if train_docs.is_empty() {
        return Err(Error::contract("no training documents"));
    }
    let seed = model.config.seed;
    let batch = model.config.batch_size;
    let mut log = Vec::new();
    while state.epoch < model.config.epochs {
        let mut order: Vec<&ProcessDoc> = train_docs.iter().collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(seed, 1, state.epoch as u64)));
        let (mut nll, mut tokens, mut norms) = (0.0, 0usize, 0.0);
        let mut updates = 0u64;
        for chunk in order.chunks(batch) {
            let mut dropout = Dropout::new(model.config.dropout, mix(seed, 2, state.step));
            let (mut grads, n, t) = batch_gradients(model, chunk, &mut dropout)?;
            if !n.is_finite() {
                return Err(Error::Diverged {
                    step: state.step,
                    detail: format!("training loss {n} on a batch of {t} tokens"),
                });
            }
            norms += clip_gradients(&mut grads, model.config.clip);
            sgd_update(model, &grads, state.lr);
            nll += n;
            tokens += t;
            updates += 1;
            state.step += 1;
        }
        let valid_ppl = if valid_docs.is_empty() {
            f64::NAN
        } else {
            perplexity(model, valid_docs)?
        };
        if !valid_ppl.is_nan() && !valid_ppl.is_finite() {
            return Err(Error::Diverged {
                step: state.step,
                detail: format!("validation perplexity {valid_ppl}"),
            });
        }
        let metrics = EpochMetrics {
            epoch: state.epoch + 1,
            step: state.step,
            lr: state.lr,
            train_ppl: (nll / tokens as f64).exp(),
            valid_ppl,
            mean_grad_norm: norms / updates as f64,
        };
        state.epoch += 1;
        if valid_ppl.is_finite() {
            match state.best_valid {
                Some(best) if valid_ppl >= best => state.lr *= 0.5,
                _ => state.best_valid = Some(valid_ppl),
            }
        }
        on_epoch(&metrics, model, state)?;
        log.push(metrics);
    }
    Ok(log)
}
