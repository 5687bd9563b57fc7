use super::*;

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn go(args: &[&str]) -> i32 {
    run(std::iter::once("procstruct").chain(args.iter().copied()))
}

#[test]
fn weights_flag_parsing() {
    assert_eq!(parse_weights("0.3,0.3,0.4").unwrap(), SimWeights::default());
    assert_eq!(parse_weights(" 1, 0 ,0").unwrap(), SimWeights::new(1.0, 0.0, 0.0).unwrap());
    for bad in ["0.3,0.3", "a,b,c", "0.5,0.5,0.5", "-1,1,1", ""] {
        assert!(matches!(parse_weights(bad), Err(Error::Config(_))), "{bad}");
    }
}

#[test]
fn sibling_appends_to_file_name() {
    assert_eq!(sibling(Path::new("a/b.ckpt"), ".metrics.jsonl"), PathBuf::from("a/b.ckpt.metrics.jsonl"));
    assert_eq!(RunManifest::path_for(Path::new("x")), PathBuf::from("x.manifest.json"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("c.txt"));
    assert_eq!(go(&["gen", "--out", &out, "--depth-max", "9"]), 2);
    assert!(!Path::new(&out).exists());
    assert_eq!(go(&["gen"]), 2);
    assert_eq!(go(&["frobnicate"]), 2);
    assert_eq!(go(&["eval"]), 2);
    assert_eq!(go(&["eval", "--paper-reference", "--weights", "1,1,1"]), 2);
    assert_eq!(go(&["gradcheck", "--op", "nope"]), 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = s(&dir.path().join("missing.txt"));
    let out = s(&dir.path().join("m.ckpt"));
    assert_eq!(go(&["train", "--corpus", &missing, "--out", &out]), 1);
}

#[test]
fn deep_generation_needs_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("deep.txt"));
    let args = ["gen", "--processes", "3", "--depth-min", "7", "--depth-max", "8", "--out", &out];
    assert_eq!(go(&args), 2);
    let mut allowed = args.to_vec();
    allowed.push("--allow-deep");
    assert_eq!(go(&allowed), 0);
}

#[test]
fn gen_is_deterministic_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    assert_eq!(go(&["gen", "--processes", "20", "--seed", "7", "--out", &s(&a)]), 0);
    assert_eq!(go(&["gen", "--processes", "20", "--seed", "7", "--out", &s(&b)]), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let m = RunManifest::load(&RunManifest::path_for(&a)).unwrap();
    assert_eq!(m.command, "gen");
    assert_eq!(m.seed, Some(7));
    assert_eq!(m.outputs[0].sha256, sha256_file(&a).unwrap());
    let replay_dir = dir.path().join("replay");
    assert_eq!(
        go(&["replay", &s(&RunManifest::path_for(&a)), "--into", &s(&replay_dir)]),
        0
    );
    assert_eq!(fs::read(replay_dir.join("a.txt")).unwrap(), fs::read(&a).unwrap());
}

#[test]
fn replay_detects_tampered_outputs_and_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    assert_eq!(go(&["gen", "--processes", "5", "--out", &s(&a)]), 0);
    let mpath = RunManifest::path_for(&a);
    let mut m = RunManifest::load(&mpath).unwrap();
    m.outputs[0].sha256 = "0".repeat(64);
    m.save(&mpath).unwrap();
    assert_eq!(go(&["replay", &s(&mpath), "--into", &s(&dir.path().join("r"))]), 1);

    m.inputs.push(FileDigest {
        path: a.clone(),
        sha256: "0".repeat(64),
    });
    m.save(&mpath).unwrap();
    assert_eq!(go(&["replay", &s(&mpath), "--into", &s(&dir.path().join("r2"))]), 1);
}

#[test]
fn gradcheck_ops_and_negative_control() {
    assert_eq!(go(&["gradcheck", "--op", "matmul", "--seeds", "5"]), 0);
    assert_eq!(go(&["gradcheck", "--inject-bug"]), 1);
    assert_eq!(go(&["gradcheck", "--op", "add", "--inject-bug"]), 2);
    assert_eq!(go(&["gradcheck", "--list"]), 0);
}

#[test]
fn paper_reference_rows() {
    let rows = reference_rows();
    assert!(rows.contains("Edges   57%"));
    assert!(rows.contains("Nodes   76%"));
    assert!(rows.contains("simged  32%"));
    assert_eq!(go(&["eval", "--paper-reference"]), 0);
}
