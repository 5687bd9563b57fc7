use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Dot-separated outline number such as `1.2.1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Outline(Vec<u32>);

impl Outline {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::Format(format!("invalid outline {parts:?}")));
        }
        Ok(Outline(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// 1 for top-level entries.
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn parent(&self) -> Option<Outline> {
        (self.0.len() > 1).then(|| Outline(self.0[..self.0.len() - 1].to_vec()))
    }
}

impl PartialOrd for Outline {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Outline {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for Outline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for Outline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts = s
            .split('.')
            .map(|p| match p.parse::<u32>() {
                Ok(n) if n > 0 && p.bytes().all(|b| b.is_ascii_digit()) => Ok(n),
                _ => Err(format!("malformed outline number {s:?}")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Outline(parts))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub outline: Option<Outline>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>, outline: Option<Outline>) -> Self {
        Sentence { tokens, outline }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// One process description: an ordered list of sentences, optionally
/// carrying its gold outline hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessDoc {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

/// Lowercase, drop punctuation, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

impl ProcessDoc {
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        ProcessDoc {
            id: id.into(),
            sentences,
        }
    }

    /// Build an unlabeled document from raw sentence strings.
    pub fn from_texts(id: impl Into<String>, texts: &[&str]) -> Self {
        let sentences = texts.iter().map(|t| Sentence::new(tokenize(t), None)).collect();
        ProcessDoc::new(id, sentences)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn has_gold(&self) -> bool {
        !self.sentences.is_empty() && self.sentences.iter().all(|s| s.outline.is_some())
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    /// Gold parent of every sentence (`None` for top-level entries), or
    /// `None` when the document carries no outline.
    pub fn gold_parents(&self) -> Option<Vec<Option<usize>>> {
        if !self.has_gold() {
            return None;
        }
        let mut parents = Vec::with_capacity(self.len());
        for (i, s) in self.sentences.iter().enumerate() {
            let outline = s.outline.as_ref()?;
            let parent = match outline.parent() {
                None => None,
                Some(p) => Some(
                    self.sentences[..i]
                        .iter()
                        .rposition(|q| q.outline.as_ref() == Some(&p))?,
                ),
            };
            parents.push(parent);
        }
        Some(parents)
    }

    /// Depth of the gold hierarchy (1 = flat list of top-level entries).
    pub fn gold_depth(&self) -> Option<usize> {
        self.sentences
            .iter()
            .map(|s| s.outline.as_ref().map(Outline::depth))
            .collect::<Option<Vec<_>>>()
            .and_then(|d| d.into_iter().max())
    }

    /// Check the structural invariants: at least one sentence, no empty
    /// sentence, outline all-or-nothing, prefix-consistent and increasing.
    pub fn validate(&self) -> Result<()> {
        if self.sentences.is_empty() {
            return Err(Error::contract(format!("process {} has no sentences", self.id)));
        }
        if let Some(i) = self.sentences.iter().position(|s| s.tokens.is_empty()) {
            return Err(Error::contract(format!(
                "process {}: sentence {} is empty",
                self.id,
                i + 1
            )));
        }
        let labeled = self.sentences.iter().filter(|s| s.outline.is_some()).count();
        if labeled != 0 && labeled != self.sentences.len() {
            return Err(Error::contract(format!(
                "process {} mixes outlined and unlabeled sentences",
                self.id
            )));
        }
        if labeled == 0 {
            return Ok(());
        }
        let mut prev: Option<&Outline> = None;
        for (i, s) in self.sentences.iter().enumerate() {
            let o = s.outline.as_ref().expect("checked above");
            check_outline_step(prev, o, &self.sentences[..i])
                .map_err(|m| Error::contract(format!("process {}: {m}", self.id)))?;
            prev = Some(o);
        }
        Ok(())
    }
}

/// Ordering and orphan checks for the next outline number given the
/// sentences seen so far.
pub(crate) fn check_outline_step(
    prev: Option<&Outline>,
    next: &Outline,
    earlier: &[Sentence],
) -> std::result::Result<(), String> {
    if let Some(p) = prev {
        if next <= p {
            return Err(format!("outline {next} does not follow {p} in document order"));
        }
    }
    if let Some(parent) = next.parent() {
        if !earlier.iter().any(|s| s.outline.as_ref() == Some(&parent)) {
            return Err(format!("orphan outline {next}: parent {parent} missing"));
        }
    }
    Ok(())
}

/// Canonical outline numbers (children numbered 1..k) for a parent array in
/// document order. Every parent must precede its child and lie on the open
/// ancestor chain of the preceding sentence.
pub fn outlines_from_parents(parents: &[Option<usize>]) -> Result<Vec<Outline>> {
    let mut out: Vec<Outline> = Vec::with_capacity(parents.len());
    let mut child_count: Vec<u32> = vec![0; parents.len()];
    let mut roots = 0u32;
    for (i, p) in parents.iter().enumerate() {
        let outline = match *p {
            None => {
                roots += 1;
                Outline(vec![roots])
            }
            Some(p) if p < i => {
                child_count[p] += 1;
                let mut parts = out[p].0.clone();
                parts.push(child_count[p]);
                Outline(parts)
            }
            Some(p) => {
                return Err(Error::contract(format!(
                    "parent {p} of sentence {i} does not precede it"
                )))
            }
        };
        if let Some(last) = out.last() {
            if &outline <= last {
                return Err(Error::contract(format!(
                    "parent array is not in document order at sentence {i}"
                )));
            }
        }
        out.push(outline);
    }
    Ok(out)
}
