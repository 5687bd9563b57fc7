use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use procstruct::cli::RunManifest;
use procstruct::corpus::parse_corpus;
use procstruct::induce::parse_induced;
use procstruct::lm::load_checkpoint;

fn procstruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procstruct"))
        .args(args)
        .env("PROCSTRUCT_THREADS", "1")
        .output()
        .expect("run procstruct")
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    let ckpt = dir.path().join("m.ckpt");
    let induced = dir.path().join("i.txt");
    let report = dir.path().join("e.json");

    let out = procstruct(&["gen", "--processes", "30", "--seed", "1", "--out", &s(&corpus)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(parse_corpus(&corpus).unwrap().len(), 30);

    let out = procstruct(&[
        "train", "--corpus", &s(&corpus), "--seed", "1", "--epochs", "2", "--emb-dim", "8", "--hidden", "8", "--d-m",
        "16", "--chunk", "4", "--decoder-hidden", "8", "--out", &s(&ckpt),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (model, state) = load_checkpoint(&ckpt).unwrap();
    assert_eq!(state.epoch, 2);
    assert_eq!(model.config.d_m, 16);
    let metrics = fs::read_to_string(dir.path().join("m.ckpt.metrics.jsonl")).unwrap();
    // Epoch 0 is the untrained model.
    assert_eq!(metrics.lines().count(), 3);
    let test_corpus = dir.path().join("m.ckpt.test.corpus");
    let test_docs = parse_corpus(&test_corpus).unwrap();
    assert_eq!(test_docs.len(), 3);

    let out = procstruct(&[
        "induce", "--checkpoint", &s(&ckpt), "--corpus", &s(&test_corpus), "--gate-layer", "2", "--out", &s(&induced),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = parse_induced(&fs::read_to_string(&induced).unwrap()).unwrap();
    assert_eq!(records.len(), test_docs.len());
    for (r, d) in records.iter().zip(&test_docs) {
        assert_eq!(r.doc_id, d.id);
        assert_eq!(r.tree.len(), d.len());
        assert_eq!(r.edges.len(), d.len() - 1);
    }

    let out = procstruct(&[
        "eval", "--corpus", &s(&test_corpus), "--induced", &s(&induced), "--baseline", "random", "--paper-reference",
        "--out", &s(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("simged"), "{stdout}");
    assert!(stdout.contains("57%"), "{stdout}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let mean = json["induced"]["mean_simged"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));
    assert!(json["baseline"]["mean_simged"].as_f64().is_some());
    assert!(dir.path().join("e.json.csv").exists());

    for primary in [&corpus, &ckpt, &induced, &report] {
        let m = RunManifest::path_for(primary);
        let into = dir.path().join(format!("{}.replay", primary.file_name().unwrap().to_string_lossy()));
        let out = procstruct(&["replay", &s(&m), "--into", &s(&into)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
        assert!(String::from_utf8_lossy(&out.stdout).contains("MATCH"));
    }
}

#[test]
fn exit_codes() {
    assert_eq!(procstruct(&[]).status.code(), Some(2));
    assert_eq!(procstruct(&["induce", "--checkpoint", "x"]).status.code(), Some(2));
    assert_eq!(procstruct(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = s(&dir.path().join("nope.ckpt"));
    let out = s(&dir.path().join("o.txt"));
    let r = procstruct(&["induce", "--checkpoint", &missing, "--corpus", &missing, "--out", &out]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("error"));
}

#[test]
fn gradcheck_reports_every_op() {
    let out = procstruct(&["gradcheck", "--seeds", "2"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for op in procstruct::checks::OPS {
        assert!(stdout.contains(op), "{op} missing from\n{stdout}");
    }
}
