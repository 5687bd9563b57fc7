use std::ffi::{c_char, CStr, CString};
use std::ptr;

use procstruct::corpus::ProcessDoc;
use procstruct::encoder::Vocabulary;
use procstruct::lm::{save_checkpoint, LmConfig, ProcessLm, TrainState};
use procstruct_ffi::*;

const CORPUS: &str = "#process p1\n1 open the queue\n1.1 select an invoice\n1.2 check the amount\n2 close the queue\n\n#process p2\n1 start\n\n";

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { ps_string_free(s) };
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ps_last_error()) }.to_str().unwrap().to_owned()
}

fn corpus() -> *mut PsCorpus {
    let text = CString::new(CORPUS).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { ps_corpus_parse(text.as_ptr(), &mut c) }, PsStatus::Ok);
    c
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(ps_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn greedy_tree_round_trip() {
    let d = [5.0, 1.0];
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ps_greedy_tree(d.as_ptr(), 2, &mut out) }, PsStatus::Ok);
    assert_eq!(take(out), "(1 (2 3))");
    assert_eq!(unsafe { ps_greedy_tree(ptr::null(), 0, &mut out) }, PsStatus::Ok);
    assert_eq!(take(out), "1");
    assert_eq!(unsafe { ps_greedy_tree(ptr::null(), 2, &mut out) }, PsStatus::NullPointer);
    assert!(last_error().contains("null"));
    let bad = [f64::NAN];
    assert_eq!(unsafe { ps_greedy_tree(bad.as_ptr(), 1, &mut out) }, PsStatus::Contract);
}

#[test]
fn corpus_handles_and_scoring() {
    let c = corpus();
    assert_eq!(unsafe { ps_corpus_len(c) }, 2);
    let mut n = 0;
    assert_eq!(unsafe { ps_corpus_sentences(c, 0, &mut n) }, PsStatus::Ok);
    assert_eq!(n, 4);
    let mut id = ptr::null_mut();
    assert_eq!(unsafe { ps_corpus_id(c, 1, &mut id) }, PsStatus::Ok);
    assert_eq!(take(id), "p2");
    assert_eq!(unsafe { ps_corpus_sentences(c, 2, &mut n) }, PsStatus::Index);

    // Gold edges are 1→2 and 1→3; this tree yields exactly those plus 1→4.
    let tree = CString::new("(((1 2) 3) 4)").unwrap();
    let mut score = PsSimScore::default();
    assert_eq!(unsafe { ps_tree_score(c, 0, tree.as_ptr(), ptr::null(), &mut score) }, PsStatus::Ok);
    assert_eq!(score.node_rate, 1.0);
    assert!((score.edge_rate - 0.8).abs() < 1e-12);
    assert!(score.simged > 0.0 && score.simged < 1.0);

    let mut opts = ps_sim_options_default();
    assert_eq!((opts.w1, opts.w2, opts.w3, opts.theta), (0.3, 0.3, 0.4, 0.5));
    opts.w3 = 0.9;
    assert_eq!(unsafe { ps_tree_score(c, 0, tree.as_ptr(), &opts, &mut score) }, PsStatus::Config);
    let short = CString::new("(1 2)").unwrap();
    assert_eq!(unsafe { ps_tree_score(c, 0, short.as_ptr(), ptr::null(), &mut score) }, PsStatus::Contract);
    let junk = CString::new("(1 2").unwrap();
    assert_eq!(unsafe { ps_tree_score(c, 0, junk.as_ptr(), ptr::null(), &mut score) }, PsStatus::Format);
    unsafe { ps_corpus_free(c) };
    unsafe { ps_corpus_free(ptr::null_mut()) };
}

#[test]
fn parse_errors_carry_messages() {
    let text = CString::new("#process a\n1 x\n1.1.1 y\n\n").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { ps_corpus_parse(text.as_ptr(), &mut c) }, PsStatus::Parse);
    assert!(c.is_null());
    assert!(last_error().contains("line"));
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { ps_corpus_parse(bad.as_ptr().cast(), &mut c) }, PsStatus::InvalidUtf8);
}

#[test]
fn label_similarity_matches_dice() {
    let a = CString::new("create purchase order").unwrap();
    let b = CString::new("create the purchase order").unwrap();
    let mut s = 0.0;
    assert_eq!(unsafe { ps_label_similarity(a.as_ptr(), b.as_ptr(), &mut s) }, PsStatus::Ok);
    assert!((s - 6.0 / 7.0).abs() < 1e-15);
}

#[test]
fn induce_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let doc = ProcessDoc::from_texts("v", &["open the queue select an invoice check amount close start"]);
    let config = LmConfig {
        emb_dim: 6,
        hidden: 4,
        sentence_layers: 1,
        onlstm_layers: 3,
        d_m: 8,
        chunk: 2,
        decoder_hidden: 4,
        ..LmConfig::default()
    };
    let m = ProcessLm::new(config, Vocabulary::build([&doc]), None).unwrap();
    save_checkpoint(&path, &m, &TrainState::new(1.0)).unwrap();

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { ps_model_load(cpath.as_ptr(), &mut model) }, PsStatus::Ok);
    assert_eq!(unsafe { ps_model_layers(model) }, 3);
    let c = corpus();
    let mut d = [0.0; 3];
    let mut tree = ptr::null_mut();
    assert_eq!(unsafe { ps_induce(model, c, 0, 0, d.as_mut_ptr(), 3, &mut tree) }, PsStatus::Ok);
    let t = take(tree);
    assert_eq!(t.matches(char::is_numeric).count(), 4);
    assert!(d.iter().all(|x| (0.0..=8.0).contains(x)));
    assert_eq!(unsafe { ps_induce(model, c, 0, 0, d.as_mut_ptr(), 2, &mut tree) }, PsStatus::BufferTooSmall);
    assert_eq!(unsafe { ps_induce(model, c, 0, 4, ptr::null_mut(), 0, &mut tree) }, PsStatus::Config);
    assert_eq!(unsafe { ps_induce(model, c, 1, 2, ptr::null_mut(), 0, &mut tree) }, PsStatus::Ok);
    assert_eq!(take(tree), "1");

    let missing = CString::new(dir.path().join("nope").to_str().unwrap()).unwrap();
    let mut m2 = ptr::null_mut();
    assert_eq!(unsafe { ps_model_load(missing.as_ptr(), &mut m2) }, PsStatus::Io);
    unsafe {
        ps_corpus_free(c);
        ps_model_free(model);
    }
}
