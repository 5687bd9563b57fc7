use proptest::prelude::*;

use super::*;
use crate::error::Error;

fn outlined(id: &str, lines: &[(&str, &str)]) -> ProcessDoc {
    let sentences = lines
        .iter()
        .map(|(o, t)| Sentence::new(tokenize(t), Some(o.parse().unwrap())))
        .collect();
    ProcessDoc::new(id, sentences)
}

#[test]
fn two_sentence_document() {
    let docs = parse_corpus_str("#process p1\n1 a b\n1.1 c\n").unwrap();
    assert_eq!(docs.len(), 1);
    assert_eq!(docs[0].len(), 2);
    assert_eq!(docs[0].gold_parents().unwrap(), vec![None, Some(0)]);
}

#[test]
fn tokenization_lowercases_and_strips_punctuation() {
    let docs = parse_corpus_str("#process x\n1 Open the SAP-invoice, then \"save\".\n").unwrap();
    assert_eq!(
        docs[0].sentences[0].tokens,
        vec!["open", "the", "sapinvoice", "then", "save"]
    );
}

#[test]
fn orphan_outline_is_rejected_with_line_number() {
    let err = parse_corpus_str("#process p\n1 a\n1.1 b\n1.2.1 c\n").unwrap_err();
    match err {
        Error::Parse { line, msg } => {
            assert_eq!(line, 4);
            assert!(msg.contains("orphan"), "{msg}");
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn malformed_inputs() {
    for (text, line) in [
        ("#process p\n1.x a\n", 2),
        ("#process p\n0 a\n", 2),
        ("#process p\n1 a\n2 ...\n", 3),
        ("#process p\n2 a\n1 b\n", 3),
        ("1 a\n", 1),
        ("#process p\n1 a\n- b\n", 3),
        ("#process p\n\n", 1),
        ("#process p\n1 a\n\n#process p\n1 b\n", 4),
    ] {
        match parse_corpus_str(text) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: expected parse error, got {other:?}"),
        }
    }
}

#[test]
fn comments_and_unlabeled_processes() {
    let text = "# header comment\n#process a\n- First step.\n# inline comment\n- Second step.\n\n#process b\n1 x\n";
    let docs = parse_corpus_str(text).unwrap();
    assert_eq!(docs.len(), 2);
    assert!(!docs[0].has_gold());
    assert_eq!(docs[0].len(), 2);
    assert!(docs[1].has_gold());
}

#[test]
fn serializer_is_canonical() {
    let doc = outlined("p", &[("1", "a b"), ("1.1", "c")]);
    assert_eq!(serialize_corpus(&[doc]), "#process p\n1 a b\n1.1 c\n\n");
}

#[test]
fn preprocess_keeps_short_sentences() {
    let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let doc = outlined("p", &[("1", &words.join(" "))]);
    let out = preprocess(&[doc.clone()], PreprocessOptions::default()).unwrap();
    assert_eq!(out, vec![doc]);
}

#[test]
fn preprocess_chunks_long_sentences() {
    let words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
    let doc = outlined("p", &[("1", &words.join(" ")), ("1.1", "child")]);
    let out = preprocess(&[doc], PreprocessOptions::default()).unwrap();
    assert_eq!(out.len(), 1);
    let d = &out[0];
    assert_eq!(d.sentences[0].tokens.len(), 15);
    assert_eq!(d.sentences[1].tokens.len(), 5);
    assert_eq!(d.sentences[1].tokens[0], "w15");
    // Continuation chunk is the first child, the original child follows.
    assert_eq!(d.gold_parents().unwrap(), vec![None, Some(0), Some(0)]);
    assert_eq!(d.sentences[2].tokens, vec!["child"]);
}

fn chain(id: &str, depth: usize) -> ProcessDoc {
    let mut lines = Vec::new();
    let mut outline = String::new();
    for d in 0..depth {
        outline = if d == 0 { "1".into() } else { format!("{outline}.1") };
        lines.push((outline.clone(), format!("s{d}")));
    }
    // A sibling branch at depth 2 for good measure.
    lines.push(("2".into(), "tail".into()));
    let refs: Vec<(&str, &str)> = lines.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    outlined(id, &refs)
}

#[test]
fn preprocess_splits_deep_processes() {
    let doc = chain("deep", 8);
    assert_eq!(doc.gold_depth(), Some(8));
    let out = preprocess(&[doc.clone()], PreprocessOptions::default()).unwrap();
    assert!(out.len() >= 2);
    for d in &out {
        d.validate().unwrap();
        assert!(d.gold_depth().unwrap() <= 6, "{d:?}");
    }
    let mut before: Vec<String> = doc.sentences.iter().map(Sentence::text).collect();
    let mut after: Vec<String> = out.iter().flat_map(|d| d.sentences.iter().map(Sentence::text)).collect();
    before.sort();
    after.sort();
    assert_eq!(before, after);
    assert_eq!(out[1].id, "deep/1");
}

#[test]
fn preprocess_rejects_degenerate_limits() {
    let doc = chain("c", 3);
    assert!(preprocess(&[doc.clone()], PreprocessOptions { max_words: 0, max_depth: 6 }).is_err());
    assert!(preprocess(&[doc], PreprocessOptions { max_words: 15, max_depth: 1 }).is_err());
}

#[test]
fn split_sizes_and_determinism() {
    let docs: Vec<ProcessDoc> = (0..100).map(|i| chain(&format!("d{i}"), 2)).collect();
    let (train, test) = split_corpus(&docs, 0.9, 7).unwrap();
    assert_eq!((train.len(), test.len()), (90, 10));
    let (train2, _) = split_corpus(&docs, 0.9, 7).unwrap();
    assert_eq!(train, train2);

    let mut ids: Vec<&str> = train.iter().chain(&test).map(|d| d.id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 100);

    let firsts: std::collections::BTreeSet<Vec<String>> = (0..10u64)
        .map(|s| split_corpus(&docs, 0.9, s).unwrap().1.iter().map(|d| d.id.clone()).collect())
        .collect();
    assert_eq!(firsts.len(), 10);

    assert!(split_corpus(&docs[..9], 0.9, 0).is_err());
}

#[test]
fn stats_of_single_sentence() {
    let docs = vec![ProcessDoc::from_texts("a", &["one two three"])];
    let s = stats(&docs).unwrap();
    assert_eq!(s.avg_words_per_sentence, 3.0);
    assert_eq!(s.max_words_per_sentence, 3);
    assert_eq!(s.avg_sentences_per_process, 1.0);
    assert_eq!(s.documents, 1);
    assert!(stats(&[]).is_err());
}

#[test]
fn synthetic_corpus_is_deterministic_and_respects_depth() {
    let p = SynthParams {
        processes: 60,
        seed: 3,
        ..SynthParams::default()
    };
    let a = gen_synthetic(&p).unwrap();
    let b = gen_synthetic(&p).unwrap();
    assert_eq!(serialize_corpus(&a), serialize_corpus(&b));
    for d in &a {
        d.validate().unwrap();
        let depth = d.gold_depth().unwrap();
        assert!((2..=4).contains(&depth), "depth {depth}");
        assert!(d.sentences.iter().all(|s| s.tokens.len() <= 15));
    }
    let c = gen_synthetic(&SynthParams { seed: 4, ..p }).unwrap();
    assert_ne!(serialize_corpus(&a), serialize_corpus(&c));
}

#[test]
fn synthetic_stats_track_parameters() {
    let p = SynthParams::default();
    let docs = gen_synthetic(&p).unwrap();
    let s = stats(&docs).unwrap();
    let expected_words = (p.words_min + p.words_max) as f64 / 2.0;
    assert!((s.avg_words_per_sentence - expected_words).abs() <= 0.1 * expected_words, "{s:?}");
    assert!(s.max_words_per_sentence <= p.words_max);
    assert_eq!(s.processes, p.processes);
    let vocab: std::collections::BTreeSet<&str> = docs
        .iter()
        .flat_map(|d| d.sentences.iter().flat_map(|s| s.tokens.iter().map(String::as_str)))
        .collect();
    assert!(vocab.len() <= p.vocab_size);
    assert!(vocab.len() as f64 >= 0.9 * p.vocab_size as f64, "{}", vocab.len());
}

#[test]
fn synthetic_parameter_guards() {
    let deep = SynthParams {
        depth_max: 9,
        ..SynthParams::default()
    };
    assert!(matches!(gen_synthetic(&deep), Err(Error::Config(_))));
    let allowed = SynthParams {
        depth_max: 7,
        depth_min: 7,
        vocab_size: 300,
        processes: 2,
        allow_deep: true,
        ..SynthParams::default()
    };
    assert!(gen_synthetic(&allowed).is_ok());
    let bad_len = SynthParams {
        words_max: 20,
        ..SynthParams::default()
    };
    assert!(gen_synthetic(&bad_len).is_err());
}

#[test]
fn zero_cue_strength_shares_vocabularies() {
    let p = SynthParams {
        processes: 200,
        cue_strength: 0.0,
        ..SynthParams::default()
    };
    let docs = gen_synthetic(&p).unwrap();
    // First tokens (verbs when no cue) are drawn from the shared pool at every depth.
    let mut by_depth: Vec<std::collections::BTreeSet<&str>> = vec![Default::default(); 4];
    for d in &docs {
        for s in &d.sentences {
            by_depth[s.outline.as_ref().unwrap().depth() - 1].insert(s.tokens[0].as_str());
        }
    }
    let overlap = by_depth[0].intersection(&by_depth[1]).count();
    assert!(overlap > 10, "overlap {overlap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_corpora_round_trip(seed in 0u64..1000, cue in 0.0f64..=1.0) {
        let p = SynthParams { processes: 8, seed, cue_strength: cue, ..SynthParams::default() };
        let docs = gen_synthetic(&p).unwrap();
        let text = serialize_corpus(&docs);
        prop_assert_eq!(parse_corpus_str(&text).unwrap(), docs);
    }

    #[test]
    fn preprocess_preserves_tokens_and_bounds(seed in 0u64..500, max_words in 3usize..9, max_depth in 2usize..5) {
        let p = SynthParams { processes: 6, seed, depth_min: 3, depth_max: 6, vocab_size: 300, ..SynthParams::default() };
        let docs = gen_synthetic(&p).unwrap();
        let opts = PreprocessOptions { max_words, max_depth };
        let out = preprocess(&docs, opts).unwrap();
        let before: usize = docs.iter().map(ProcessDoc::token_count).sum();
        let after: usize = out.iter().map(ProcessDoc::token_count).sum();
        prop_assert_eq!(before, after);
        for d in &out {
            d.validate().unwrap();
            prop_assert!(d.gold_depth().unwrap() <= max_depth);
            prop_assert!(d.sentences.iter().all(|s| s.tokens.len() <= max_words));
        }
    }
}
