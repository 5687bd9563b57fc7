//! C ABI over `procstruct`.
//!
//! Objects cross the boundary as opaque handles (`PsCorpus`, `PsModel`)
//! created by `*_parse`/`*_load` and released with the matching `*_free`.
//! Every fallible call returns a `PsStatus`; on failure a message for the
//! calling thread is available from `ps_last_error` until the next call.
//! Strings returned through `char**` out-parameters are owned by the caller
//! and must be released with `ps_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use procstruct::corpus::{parse_corpus_str, preprocess, PreprocessOptions, ProcessDoc};
use procstruct::eval::{label_similarity, score_pair, EvalOptions, ProcessGraph, SimWeights};
use procstruct::induce::{default_gate_layer, greedy_tree, induce, tree_to_graph, ProcessTree};
use procstruct::lm::{load_checkpoint, ProcessLm};
use procstruct::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Format = 4,
    Config = 5,
    Contract = 6,
    Shape = 7,
    Index = 8,
    Io = 9,
    Diverged = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Parsed and preprocessed corpus.
pub struct PsCorpus {
    docs: Vec<ProcessDoc>,
}

/// Trained language model loaded from a checkpoint.
pub struct PsModel {
    model: ProcessLm,
}

/// Scoring options; obtain defaults from `ps_sim_options_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PsSimOptions {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub theta: f64,
    pub filter_unmatched: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PsSimScore {
    pub simged: f64,
    pub node_rate: f64,
    pub edge_rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Fail(PsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Shape { .. } => PsStatus::Shape,
            Error::Index { .. } => PsStatus::Index,
            Error::Contract(_) => PsStatus::Contract,
            Error::Parse { .. } => PsStatus::Parse,
            Error::Format(_) => PsStatus::Format,
            Error::Config(_) => PsStatus::Config,
            Error::Diverged { .. } => PsStatus::Diverged,
            Error::Io { .. } => PsStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| Fail(PsStatus::Format, "string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn doc_at<'a>(corpus: *const PsCorpus, index: usize) -> Result<&'a ProcessDoc, Fail> {
    let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
    c.docs.get(index).ok_or_else(|| {
        Fail::from(Error::Index {
            what: "process",
            index,
            bound: c.docs.len(),
        })
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread ("" after a success).
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse corpus text (outline-numbered sentences, blank-line separated
/// processes) and apply the default length and depth preprocessing.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_parse(text: *const c_char, out: *mut *mut PsCorpus) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = str_arg(text, "text")?;
        let docs = preprocess(&parse_corpus_str(text)?, PreprocessOptions::default())?;
        *out = Box::into_raw(Box::new(PsCorpus { docs }));
        Ok(())
    })
}

/// Number of processes; 0 for NULL.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_len(corpus: *const PsCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.docs.len())
}

/// Sentence count of process `index`.
///
/// # Safety
/// `corpus` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_sentences(corpus: *const PsCorpus, index: usize, out: *mut usize) -> PsStatus {
    guard(|| {
        let d = doc_at(corpus, index)?;
        *out.as_mut().ok_or_else(|| null("output pointer"))? = d.len();
        Ok(())
    })
}

/// Identifier of process `index`, as a caller-owned string.
///
/// # Safety
/// `corpus` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_id(corpus: *const PsCorpus, index: usize, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let d = doc_at(corpus, index)?;
        put_string(out, d.id.clone())
    })
}

/// # Safety
/// `corpus` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_corpus_free(corpus: *mut PsCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Load a checkpoint written by `procstruct train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_load(path: *const c_char, out: *mut *mut PsModel) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let path = str_arg(path, "path")?;
        let (model, _) = load_checkpoint(path)?;
        *out = Box::into_raw(Box::new(PsModel { model }));
        Ok(())
    })
}

/// Number of ON-LSTM layers of a model; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_model_layers(model: *const PsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.config.onlstm_layers)
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_model_free(model: *mut PsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Greedy top-down tree over `n + 1` sentences from `n` level distances
/// (`d[k]` between sentences k and k+1), as a bracketed string like
/// `(1 (2 3))`. `d` may be NULL when `n` is 0.
///
/// # Safety
/// `d` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_greedy_tree(d: *const f64, n: usize, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let d: &[f64] = if n == 0 {
            &[]
        } else if d.is_null() {
            return Err(null("distances"));
        } else {
            std::slice::from_raw_parts(d, n)
        };
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Fail(PsStatus::Contract, "distances must be finite".into()));
        }
        put_string(out, greedy_tree(d).to_string())
    })
}

/// Induce the tree of process `index`. `gate_layer` is 1-based; 0 picks
/// the middle layer. When `distances` is non-NULL the `L - 1` level
/// distances are copied into it; `distances_cap` must be at least `L - 1`.
///
/// # Safety
/// Handles must be live, `distances` must hold `distances_cap` doubles and
/// `out_tree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_induce(
    model: *const PsModel,
    corpus: *const PsCorpus,
    index: usize,
    gate_layer: u32,
    distances: *mut f64,
    distances_cap: usize,
    out_tree: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let d = doc_at(corpus, index)?;
        let layers = m.config.onlstm_layers;
        let layer = match gate_layer as usize {
            0 => default_gate_layer(layers),
            l if l <= layers => l - 1,
            l => {
                return Err(Fail(
                    PsStatus::Config,
                    format!("gate layer {l} outside 1..={layers}"),
                ))
            }
        };
        let ind = induce(m, d, layer)?;
        if !distances.is_null() {
            if distances_cap < ind.distances.len() {
                return Err(Fail(
                    PsStatus::BufferTooSmall,
                    format!("need {} distances, buffer holds {distances_cap}", ind.distances.len()),
                ));
            }
            ptr::copy_nonoverlapping(ind.distances.as_ptr(), distances, ind.distances.len());
        }
        put_string(out_tree, ind.tree.to_string())
    })
}

#[no_mangle]
pub extern "C" fn ps_sim_options_default() -> PsSimOptions {
    let o = EvalOptions::default();
    PsSimOptions {
        w1: o.weights.w1,
        w2: o.weights.w2,
        w3: o.weights.w3,
        theta: o.theta,
        filter_unmatched: o.filter_unmatched,
    }
}

/// Score a bracketed tree for process `index` against its gold outline.
/// `opts` may be NULL for the defaults.
///
/// # Safety
/// `corpus` must be live, `tree` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_tree_score(
    corpus: *const PsCorpus,
    index: usize,
    tree: *const c_char,
    opts: *const PsSimOptions,
    out: *mut PsSimScore,
) -> PsStatus {
    guard(|| {
        let d = doc_at(corpus, index)?;
        let tree: ProcessTree = str_arg(tree, "tree")?.parse()?;
        let o = opts.as_ref().copied().unwrap_or_else(|| ps_sim_options_default());
        if !(0.0..=1.0).contains(&o.theta) {
            return Err(Error::Config(format!("theta {} outside [0, 1]", o.theta)).into());
        }
        let eo = EvalOptions {
            weights: SimWeights::new(o.w1, o.w2, o.w3)?,
            theta: o.theta,
            filter_unmatched: o.filter_unmatched,
        };
        let s = score_pair(&d.id, &ProcessGraph::gold(d)?, &tree_to_graph(&tree, d)?, &eo)?;
        *out.as_mut().ok_or_else(|| null("output pointer"))? = PsSimScore {
            simged: s.simged,
            node_rate: s.node_rate,
            edge_rate: s.edge_rate,
        };
        Ok(())
    })
}

/// Dice similarity of two labels' token multisets.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_label_similarity(a: *const c_char, b: *const c_char, out: *mut f64) -> PsStatus {
    guard(|| {
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        *out.as_mut().ok_or_else(|| null("output pointer"))? = label_similarity(a, b);
        Ok(())
    })
}
