//! Named finite-difference checks over every differentiable primitive, the
//! recurrent cells and the full language-model loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::ProcessDoc;
use crate::encoder::{LstmParams, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::{LmConfig, ProcessLm};
use crate::onlstm::{cumax, MasterInput, OnLstmCellParams};
use crate::tensorgrad::gradcheck::{check_gradients, check_store_gradients, GradCheckOptions, GradCheckReport};
use crate::tensorgrad::{Dropout, ParamStore, Tape, Tensor, Var};

/// Relative-error bound every check must stay under.
pub const TOLERANCE: f64 = 1e-4;

pub const OPS: [&str; 19] = [
    "matmul",
    "matvec",
    "add",
    "sub",
    "mul",
    "affine",
    "sigmoid",
    "tanh",
    "softmax",
    "cumsum",
    "cumax",
    "concat",
    "narrow",
    "repeat",
    "sum",
    "cross_entropy",
    "lstm_step",
    "onlstm_step",
    "lm_loss",
];

/// Deliberately broken fixture: part of the loss bypasses the tape.
pub const INJECTED_BUG: &str = "injected_bug";

#[derive(Clone, Debug, Serialize)]
pub struct OpCheck {
    pub op: String,
    pub seeds: usize,
    pub coords: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape matches data")
}

/// `Σ out ⊙ r` with a fixed random `r`, so that every output entry carries
/// a distinct weight.
fn project(t: &mut Tape, out: Var, rng_seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5eed);
    let r = rand_tensor(&mut rng, t.shape(out));
    let r = t.constant(r);
    let m = t.mul(out, r)?;
    Ok(t.sum(m))
}

fn unary(seed: u64, opts: &GradCheckOptions, f: fn(&mut Tape, Var) -> Result<Var>) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..10);
    check_gradients(&[rand_tensor(&mut rng, &[n])], opts, |t, v| {
        let out = f(t, v[0])?;
        project(t, out, seed)
    })
}

fn binary(seed: u64, opts: &GradCheckOptions, f: fn(&mut Tape, Var, Var) -> Result<Var>) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..10);
    let inputs = [rand_tensor(&mut rng, &[n]), rand_tensor(&mut rng, &[n])];
    check_gradients(&inputs, opts, |t, v| {
        let out = f(t, v[0], v[1])?;
        project(t, out, seed)
    })
}

/// Toy dimensions of the end-to-end loss check.
pub fn toy_lm_config(seed: u64) -> LmConfig {
    LmConfig {
        emb_dim: 8,
        hidden: 8,
        sentence_layers: 3,
        onlstm_layers: 3,
        d_m: 8,
        chunk: 1,
        decoder_hidden: 8,
        dropout: 0.0,
        seed,
        ..LmConfig::default()
    }
}

/// 20-entry vocabulary and a random 3-sentence document of ≤ 5 words each.
pub fn toy_lm_case(seed: u64) -> Result<(ProcessLm, ProcessDoc)> {
    let words: Vec<String> = (0..16).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::build([&ProcessDoc::from_texts("v", &[&words.join(" ")])]);
    debug_assert_eq!(vocab.len(), 20);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texts: Vec<String> = (0..3)
        .map(|_| {
            let n = rng.gen_range(1..=5);
            (0..n).map(|_| words[rng.gen_range(0..words.len())].clone()).collect::<Vec<_>>().join(" ")
        })
        .collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let doc = ProcessDoc::from_texts("toy", &refs);
    Ok((ProcessLm::new(toy_lm_config(seed), vocab, None)?, doc))
}

fn check_once(op: &str, seed: u64, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    match op {
        "matmul" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (m, k, n) = (rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(2..6));
            let inputs = [rand_tensor(&mut rng, &[m, k]), rand_tensor(&mut rng, &[k, n])];
            check_gradients(&inputs, opts, |t, v| {
                let out = t.matmul(v[0], v[1])?;
                project(t, out, seed)
            })
        }
        "matvec" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (m, k) = (rng.gen_range(1..8), rng.gen_range(1..8));
            let inputs = [rand_tensor(&mut rng, &[m, k]), rand_tensor(&mut rng, &[k])];
            check_gradients(&inputs, opts, |t, v| {
                let out = t.matmul(v[0], v[1])?;
                project(t, out, seed)
            })
        }
        "add" => binary(seed, opts, |t, a, b| t.add(a, b)),
        "sub" => binary(seed, opts, |t, a, b| t.sub(a, b)),
        "mul" => binary(seed, opts, |t, a, b| t.mul(a, b)),
        "affine" => unary(seed, opts, |t, a| Ok(t.affine(a, -1.7, 0.3))),
        "sigmoid" => unary(seed, opts, |t, a| Ok(t.sigmoid(a))),
        "tanh" => unary(seed, opts, |t, a| Ok(t.tanh(a))),
        "softmax" => unary(seed, opts, |t, a| Ok(t.softmax(a))),
        "cumsum" => unary(seed, opts, |t, a| Ok(t.cumsum(a))),
        "cumax" => unary(seed, opts, |t, a| Ok(cumax(t, a))),
        "concat" => binary(seed, opts, |t, a, b| t.concat(&[a, b, a], 0)),
        "narrow" => unary(seed, opts, |t, a| {
            let n = t.shape(a)[0];
            t.narrow(a, 1, n - 1)
        }),
        "repeat" => unary(seed, opts, |t, a| t.repeat(a, 3)),
        "sum" => unary(seed, opts, |t, a| {
            let s = t.sum(a);
            t.mul(s, s)
        }),
        "cross_entropy" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..12);
            let target = rng.gen_range(0..n);
            check_gradients(&[rand_tensor(&mut rng, &[n])], opts, |t, v| {
                let s = t.scale(v[0], 2.0);
                t.cross_entropy(s, target)
            })
        }
        "lstm_step" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (input, hidden) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let mut store = ParamStore::new();
            let cell = LstmParams::register(&mut store, "cell", input, hidden, &mut rng)?;
            let x = rand_tensor(&mut rng, &[input]);
            let h = rand_tensor(&mut rng, &[hidden]);
            let c = rand_tensor(&mut rng, &[hidden]);
            check_store_gradients(&store, opts, |t, b| {
                let (xv, hv, cv) = (t.constant(x.clone()), t.constant(h.clone()), t.constant(c.clone()));
                let (h1, c1) = cell.step(t, b, xv, hv, cv)?;
                let both = t.concat(&[h1, c1], 0)?;
                project(t, both, seed)
            })
        }
        "onlstm_step" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chunk = [1, 2][rng.gen_range(0..2)];
            let hidden = 2 * chunk * rng.gen_range(1..3);
            let input = rng.gen_range(1..5);
            let mode = if rng.gen_bool(0.5) {
                MasterInput::Independent
            } else {
                MasterInput::ComplementOfForget
            };
            let mut store = ParamStore::new();
            let cell = OnLstmCellParams::register(&mut store, "cell", input, hidden, chunk, mode, &mut rng)?;
            let x = rand_tensor(&mut rng, &[input]);
            let h = rand_tensor(&mut rng, &[hidden]);
            let c = rand_tensor(&mut rng, &[hidden]);
            check_store_gradients(&store, opts, |t, b| {
                let (xv, hv, cv) = (t.constant(x.clone()), t.constant(h.clone()), t.constant(c.clone()));
                let s = cell.step(t, b, xv, hv, cv)?;
                let both = t.concat(&[s.h, s.c], 0)?;
                project(t, both, seed)
            })
        }
        "lm_loss" => {
            let (m, doc) = toy_lm_case(seed)?;
            let ids = m.encode_doc(&doc);
            check_store_gradients(&m.store, opts, |t, b| Ok(m.doc_loss(t, b, &ids, &mut Dropout::disabled())?.total))
        }
        INJECTED_BUG => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            check_gradients(&[rand_tensor(&mut rng, &[5])], opts, |t, v| {
                let th = t.tanh(v[0]);
                let tracked = project(t, th, seed)?;
                // The square is recomputed off-tape, so its gradient is lost.
                let sq: f64 = t.value(v[0]).iter().map(|x| x * x).sum();
                let detached = t.constant(Tensor::scalar(sq));
                t.add(tracked, detached)
            })
        }
        other => Err(Error::Config(format!(
            "unknown op {other:?}; expected one of {} or {INJECTED_BUG}",
            OPS.join(", ")
        ))),
    }
}

/// Run `op` on seeds `seed..seed + seeds` and keep the worst error.
pub fn check_op(op: &str, seed: u64, seeds: usize, opts: &GradCheckOptions) -> Result<OpCheck> {
    if seeds == 0 {
        return Err(Error::Config("gradient check needs at least one seed".into()));
    }
    let mut out = OpCheck {
        op: op.to_string(),
        seeds,
        coords: 0,
        max_rel_error: 0.0,
        passed: true,
    };
    for s in 0..seeds as u64 {
        let r = check_once(op, seed.wrapping_add(s), opts)?;
        out.coords += r.coords_checked;
        out.max_rel_error = out.max_rel_error.max(r.max_rel_error);
    }
    out.passed = out.max_rel_error < TOLERANCE;
    Ok(out)
}

/// Every op in [`OPS`]: `seeds` seeds per primitive or cell, and
/// `lm_seeds` for the (much larger) language-model loss.
pub fn check_all(seed: u64, seeds: usize, lm_seeds: usize, opts: &GradCheckOptions) -> Result<Vec<OpCheck>> {
    OPS.iter()
        .map(|op| check_op(op, seed, if *op == "lm_loss" { lm_seeds } else { seeds }, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_primitive_passes_on_many_seeds() {
        for op in OPS.iter().filter(|op| **op != "lm_loss") {
            let r = check_op(op, 0, 100, &GradCheckOptions::default()).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.coords > 0);
        }
    }

    #[test]
    fn injected_bug_is_caught() {
        let r = check_op(INJECTED_BUG, 0, 3, &GradCheckOptions::default()).unwrap();
        assert!(!r.passed, "{r:?}");
        assert!(r.max_rel_error > 0.1);
    }

    #[test]
    fn toy_case_has_twenty_tokens_and_short_sentences() {
        let (m, doc) = toy_lm_case(4).unwrap();
        assert_eq!(m.vocab.len(), 20);
        assert_eq!(doc.len(), 3);
        assert!(doc.sentences.iter().all(|s| (1..=5).contains(&s.tokens.len())));
    }

    #[test]
    fn unknown_op_is_a_config_error() {
        assert!(matches!(
            check_op("conv2d", 0, 1, &GradCheckOptions::default()),
            Err(Error::Config(_))
        ));
        assert!(check_op("add", 0, 0, &GradCheckOptions::default()).is_err());
    }
}
