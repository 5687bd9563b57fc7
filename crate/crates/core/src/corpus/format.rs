//! Line-oriented corpus files.
//!
//! ```text
//! # free comment
//! #process invoice-approval
//! 1 Open the invoice queue.
//! 1.1 Select the oldest unpaid invoice.
//! 2 Close the queue.
//!
//! #process unlabeled-example
//! - Sentences without a gold outline use a dash.
//! ```
//!
//! A `#process <id>` header opens a process, each following line is one
//! sentence (`<outline> <text>` or `- <text>`), and a blank line closes it.
//! Any other line starting with `#` is a comment. Sentence text is
//! tokenized on read, so the serialized form is the lowercase,
//! punctuation-free token sequence joined by single spaces, and every
//! process is followed by exactly one blank line.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::doc::{check_outline_step, tokenize, Outline, ProcessDoc, Sentence};

const HEADER: &str = "#process";

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_corpus_str(text: &str) -> Result<Vec<ProcessDoc>> {
    let mut docs: Vec<ProcessDoc> = Vec::new();
    let mut ids = BTreeSet::new();
    let mut current: Option<(usize, ProcessDoc)> = None;

    let finish = |cur: Option<(usize, ProcessDoc)>, docs: &mut Vec<ProcessDoc>| -> Result<()> {
        if let Some((line, doc)) = cur {
            if doc.sentences.is_empty() {
                return Err(parse_err(line, format!("process {} has no sentences", doc.id)));
            }
            docs.push(doc);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(current.take(), &mut docs)?;
            continue;
        }
        if let Some(rest) = line.strip_prefix(HEADER) {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                let id = rest.trim();
                if id.is_empty() || id.contains(char::is_whitespace) {
                    return Err(parse_err(lineno, "process header needs a single-token id"));
                }
                if !ids.insert(id.to_owned()) {
                    return Err(parse_err(lineno, format!("duplicate process id {id}")));
                }
                finish(current.take(), &mut docs)?;
                current = Some((lineno, ProcessDoc::new(id, Vec::new())));
                continue;
            }
        }
        if line.starts_with('#') {
            continue;
        }
        let Some((_, doc)) = current.as_mut() else {
            return Err(parse_err(lineno, "sentence outside of a #process block"));
        };
        let (label, body) = match line.split_once(char::is_whitespace) {
            Some((l, b)) => (l, b),
            None => (line, ""),
        };
        let outline = if label == "-" {
            None
        } else {
            Some(label.parse::<Outline>().map_err(|m| parse_err(lineno, m))?)
        };
        let tokens = tokenize(body);
        if tokens.is_empty() {
            return Err(parse_err(lineno, "empty sentence"));
        }
        if let Some(first) = doc.sentences.first() {
            if first.outline.is_some() != outline.is_some() {
                return Err(parse_err(
                    lineno,
                    "process mixes outlined and unlabeled sentences",
                ));
            }
        }
        if let Some(o) = &outline {
            let prev = doc.sentences.last().and_then(|s| s.outline.as_ref());
            check_outline_step(prev, o, &doc.sentences).map_err(|m| parse_err(lineno, m))?;
        }
        doc.sentences.push(Sentence::new(tokens, outline));
    }
    finish(current.take(), &mut docs)?;
    Ok(docs)
}

pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Vec<ProcessDoc>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_str(&text)
}

pub fn serialize_corpus(docs: &[ProcessDoc]) -> String {
    let mut out = String::new();
    for doc in docs {
        let _ = writeln!(out, "{HEADER} {}", doc.id);
        for s in &doc.sentences {
            match &s.outline {
                Some(o) => {
                    let _ = write!(out, "{o}");
                }
                None => out.push('-'),
            }
            for t in &s.tokens {
                out.push(' ');
                out.push_str(t);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[ProcessDoc]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_corpus(docs)).map_err(|e| Error::io(path, e))
}
