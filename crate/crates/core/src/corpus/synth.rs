//! Synthetic process corpus with gold outline trees.
//!
//! Every sentence is built from a verb and a topic noun drawn from a
//! sub-vocabulary reserved for its depth, optionally preceded by a depth
//! cue token, padded with shared filler words, and closed by a mention of
//! its parent's topic noun. `cue_strength` is the probability that each of
//! those structural choices is made (depth pool, cue token, parent mention)
//! rather than drawn from the shared pool; at 0 the text carries no
//! structural signal at all.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::doc::{outlines_from_parents, ProcessDoc, Sentence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub processes: usize,
    pub vocab_size: usize,
    pub depth_min: usize,
    pub depth_max: usize,
    pub branching_min: usize,
    pub branching_max: usize,
    pub words_min: usize,
    pub words_max: usize,
    pub cue_strength: f64,
    /// Probability that an off-spine node below the target depth gets children.
    pub expand_prob: f64,
    pub seed: u64,
    /// Permit depths beyond the 6-layer preprocessing limit.
    pub allow_deep: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            processes: 500,
            vocab_size: 200,
            depth_min: 2,
            depth_max: 4,
            branching_min: 1,
            branching_max: 3,
            words_min: 5,
            words_max: 12,
            cue_strength: 0.9,
            expand_prob: 0.35,
            seed: 0,
            allow_deep: false,
        }
    }
}

const MAX_DEPTH: usize = 6;
const MAX_WORDS: usize = 15;
const MIN_POOL: usize = 6;

impl SynthParams {
    fn filler_count(&self) -> usize {
        (self.vocab_size / 5).max(4)
    }

    fn pool_size(&self) -> usize {
        self.vocab_size
            .saturating_sub(self.depth_max + self.filler_count())
            / self.depth_max.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.processes == 0 {
            return bad("processes must be positive".into());
        }
        if self.depth_min == 0 || self.depth_min > self.depth_max {
            return bad(format!(
                "depth range [{}, {}] is empty",
                self.depth_min, self.depth_max
            ));
        }
        if self.depth_max > MAX_DEPTH && !self.allow_deep {
            return bad(format!(
                "depth {} exceeds the {MAX_DEPTH}-layer limit (allow_deep not set)",
                self.depth_max
            ));
        }
        if self.branching_min == 0 || self.branching_min > self.branching_max {
            return bad(format!(
                "branching range [{}, {}] must be nonempty and start at 1 or more",
                self.branching_min, self.branching_max
            ));
        }
        if self.words_min < 4 || self.words_min > self.words_max || self.words_max > MAX_WORDS {
            return bad(format!(
                "sentence length range [{}, {}] must lie within [4, {MAX_WORDS}]",
                self.words_min, self.words_max
            ));
        }
        if !(0.0..=1.0).contains(&self.cue_strength) || !(0.0..=1.0).contains(&self.expand_prob) {
            return bad("cue strength and expand probability must lie in [0, 1]".into());
        }
        if self.pool_size() < MIN_POOL {
            return bad(format!(
                "vocabulary of {} is too small for depth {}",
                self.vocab_size, self.depth_max
            ));
        }
        Ok(())
    }
}

struct Lexicon {
    cues: Vec<String>,
    verbs: Vec<Vec<String>>,
    nouns: Vec<Vec<String>>,
    all_verbs: Vec<String>,
    all_nouns: Vec<String>,
    fillers: Vec<String>,
}

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    const ONSETS: &[&str] = &[
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st",
        "pl", "gr", "sk",
    ];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let w: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.gen_range(0..ONSETS.len())],
                    VOWELS[rng.gen_range(0..VOWELS.len())]
                )
            })
            .collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

impl Lexicon {
    fn new(p: &SynthParams, rng: &mut ChaCha8Rng) -> Self {
        let pool = p.pool_size();
        let fill = p.filler_count();
        let total = p.depth_max + p.depth_max * pool + fill;
        let mut words = pseudo_words(rng, total).into_iter();
        let cues: Vec<String> = words.by_ref().take(p.depth_max).collect();
        let n_verbs = pool / 3;
        let mut verbs = Vec::new();
        let mut nouns = Vec::new();
        for _ in 0..p.depth_max {
            let level: Vec<String> = words.by_ref().take(pool).collect();
            verbs.push(level[..n_verbs].to_vec());
            nouns.push(level[n_verbs..].to_vec());
        }
        let fillers = words.collect();
        Lexicon {
            all_verbs: verbs.concat(),
            all_nouns: nouns.concat(),
            cues,
            verbs,
            nouns,
            fillers,
        }
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [String]) -> &'a str {
    &pool[rng.gen_range(0..pool.len())]
}

/// Parent array (document order) of a random outline tree of exactly `depth`
/// levels.
fn gen_tree(p: &SynthParams, depth: usize, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
    fn grow(
        p: &SynthParams,
        rng: &mut ChaCha8Rng,
        parents: &mut Vec<Option<usize>>,
        parent: Option<usize>,
        level: usize,
        depth: usize,
        spine: bool,
    ) {
        let me = parents.len();
        parents.push(parent);
        if level == depth || !(spine || rng.gen_bool(p.expand_prob)) {
            return;
        }
        let k = rng.gen_range(p.branching_min..=p.branching_max);
        let spine_child = rng.gen_range(0..k);
        for j in 0..k {
            grow(p, rng, parents, Some(me), level + 1, depth, spine && j == spine_child);
        }
    }

    let mut parents = Vec::new();
    let roots = rng.gen_range(p.branching_min..=p.branching_max);
    let spine_root = rng.gen_range(0..roots);
    for r in 0..roots {
        grow(p, rng, &mut parents, None, 1, depth, r == spine_root);
    }
    parents
}

fn gen_process(p: &SynthParams, lex: &Lexicon, id: String, rng: &mut ChaCha8Rng) -> Result<ProcessDoc> {
    let depth = rng.gen_range(p.depth_min..=p.depth_max);
    let parents = gen_tree(p, depth, rng);
    let outlines = outlines_from_parents(&parents)?;
    let s = p.cue_strength;

    let mut topics: Vec<String> = Vec::with_capacity(parents.len());
    let mut used = BTreeSet::new();
    let mut sentences = Vec::with_capacity(parents.len());
    for (i, outline) in outlines.into_iter().enumerate() {
        let level = outline.depth() - 1;
        let structured = rng.gen_bool(s);
        let noun_pool = if structured { &lex.nouns[level] } else { &lex.all_nouns };
        let mut topic = pick(rng, noun_pool).to_owned();
        for _ in 0..8 {
            if !used.contains(&topic) {
                break;
            }
            topic = pick(rng, noun_pool).to_owned();
        }
        used.insert(topic.clone());

        let mut head: Vec<String> = Vec::new();
        if rng.gen_bool(s) {
            head.push(lex.cues[level].clone());
        }
        let verb_pool = if rng.gen_bool(s) { &lex.verbs[level] } else { &lex.all_verbs };
        head.push(pick(rng, verb_pool).to_owned());
        head.push(topic.clone());
        let tail = match parents[i] {
            Some(pi) if rng.gen_bool(s) => topics[pi].clone(),
            _ => pick(rng, &lex.all_nouns).to_owned(),
        };
        let len = rng.gen_range(p.words_min..=p.words_max);
        let fillers = len - head.len() - 1;
        let mut tokens = head;
        for _ in 0..fillers {
            tokens.push(pick(rng, &lex.fillers).to_owned());
        }
        tokens.push(tail);
        topics.push(topic);
        sentences.push(Sentence::new(tokens, Some(outline)));
    }
    Ok(ProcessDoc::new(id, sentences))
}

/// Deterministic corpus of `processes` outline-numbered processes.
pub fn gen_synthetic(p: &SynthParams) -> Result<Vec<ProcessDoc>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let lex = Lexicon::new(p, &mut ChaCha8Rng::seed_from_u64(p.seed ^ 0x9e37_79b9_7f4a_7c15));
    let mut docs = Vec::with_capacity(p.processes);
    for i in 0..p.processes {
        docs.push(gen_process(p, &lex, format!("syn{:04}", i + 1), &mut rng)?);
    }
    Ok(docs)
}
