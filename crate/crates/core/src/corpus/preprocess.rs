use crate::error::{Error, Result};

use super::doc::{outlines_from_parents, ProcessDoc, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PreprocessOptions {
    pub max_words: usize,
    pub max_depth: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            max_words: 15,
            max_depth: 6,
        }
    }
}

/// Split over-long sentences into `max_words` chunks and over-deep processes
/// into separate processes.
///
/// Chunks after the first become leading children of the first chunk. A
/// process deeper than `max_depth` has every depth-`max_depth` node that has
/// children cut out, subtree and all, into a new process rooted at that node
/// (id `<id>/<k>`); this repeats until every process fits.
pub fn preprocess(docs: &[ProcessDoc], opts: PreprocessOptions) -> Result<Vec<ProcessDoc>> {
    if opts.max_words == 0 {
        return Err(Error::Config("max_words must be positive".into()));
    }
    if opts.max_depth < 2 {
        return Err(Error::Config("max_depth must be at least 2".into()));
    }
    let mut out = Vec::with_capacity(docs.len());
    for doc in docs {
        let split = split_sentences(doc, opts.max_words)?;
        if split.has_gold() {
            split_depth(split, opts.max_depth, &mut out)?;
        } else {
            out.push(split);
        }
    }
    Ok(out)
}

fn split_sentences(doc: &ProcessDoc, max_words: usize) -> Result<ProcessDoc> {
    let Some(parents) = doc.gold_parents() else {
        let sentences = doc
            .sentences
            .iter()
            .flat_map(|s| s.tokens.chunks(max_words).map(|c| Sentence::new(c.to_vec(), None)))
            .collect();
        return Ok(ProcessDoc::new(doc.id.clone(), sentences));
    };
    // Old index -> new index of the first chunk.
    let mut remap = Vec::with_capacity(doc.len());
    let mut tokens: Vec<Vec<String>> = Vec::new();
    let mut new_parents: Vec<Option<usize>> = Vec::new();
    for (s, parent) in doc.sentences.iter().zip(&parents) {
        let head = tokens.len();
        remap.push(head);
        for (k, chunk) in s.tokens.chunks(max_words).enumerate() {
            tokens.push(chunk.to_vec());
            new_parents.push(if k == 0 { parent.map(|p| remap[p]) } else { Some(head) });
        }
    }
    rebuild(&doc.id, tokens, &new_parents)
}

fn rebuild(id: &str, tokens: Vec<Vec<String>>, parents: &[Option<usize>]) -> Result<ProcessDoc> {
    let outlines = outlines_from_parents(parents)?;
    let sentences = tokens
        .into_iter()
        .zip(outlines)
        .map(|(t, o)| Sentence::new(t, Some(o)))
        .collect();
    Ok(ProcessDoc::new(id, sentences))
}

fn split_depth(doc: ProcessDoc, max_depth: usize, out: &mut Vec<ProcessDoc>) -> Result<()> {
    if doc.gold_depth().unwrap_or(0) <= max_depth {
        out.push(doc);
        return Ok(());
    }
    let parents = doc.gold_parents().expect("caller checked gold");
    let n = doc.len();
    let depth: Vec<usize> = doc
        .sentences
        .iter()
        .map(|s| s.outline.as_ref().map_or(1, |o| o.depth()))
        .collect();
    // Preorder subtree end (exclusive) of every node.
    let mut end: Vec<usize> = (0..n).map(|i| i + 1).collect();
    for i in (0..n).rev() {
        if let Some(p) = parents[i] {
            end[p] = end[p].max(end[i]);
        }
    }
    let cuts: Vec<usize> = (0..n)
        .filter(|&i| depth[i] == max_depth && end[i] > i + 1)
        .collect();

    let mut keep = vec![true; n];
    let mut pieces = Vec::new();
    for &c in &cuts {
        keep[c..end[c]].iter_mut().for_each(|k| *k = false);
        let tokens = doc.sentences[c..end[c]].iter().map(|s| s.tokens.clone()).collect();
        let sub_parents: Vec<Option<usize>> = (c..end[c])
            .map(|i| if i == c { None } else { parents[i].map(|p| p - c) })
            .collect();
        pieces.push((tokens, sub_parents));
    }

    let mut new_index = vec![usize::MAX; n];
    let mut tokens = Vec::new();
    let mut kept_parents = Vec::new();
    for i in (0..n).filter(|&i| keep[i]) {
        new_index[i] = tokens.len();
        tokens.push(doc.sentences[i].tokens.clone());
        kept_parents.push(parents[i].map(|p| new_index[p]));
    }
    out.push(rebuild(&doc.id, tokens, &kept_parents)?);
    for (k, (tokens, sub_parents)) in pieces.into_iter().enumerate() {
        let piece = rebuild(&format!("{}/{}", doc.id, k + 1), tokens, &sub_parents)?;
        split_depth(piece, max_depth, out)?;
    }
    Ok(())
}
