use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Binary tree over sentences `0..L` (printed 1-based). Leaves appear in
/// sentence order; internal nodes carry the distance they were split at.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessTree {
    Leaf(usize),
    Node {
        left: Box<ProcessTree>,
        right: Box<ProcessTree>,
        split: f64,
    },
}

impl ProcessTree {
    pub fn node(left: ProcessTree, right: ProcessTree, split: f64) -> Self {
        ProcessTree::Node {
            left: Box::new(left),
            right: Box::new(right),
            split,
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            ProcessTree::Leaf(i) => out.push(*i),
            ProcessTree::Node { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ProcessTree::Leaf(_) => 1,
            ProcessTree::Node { left, right, .. } => left.len() + right.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sentence heading this subtree: its leftmost leaf.
    pub fn head(&self) -> usize {
        match self {
            ProcessTree::Leaf(i) => *i,
            ProcessTree::Node { left, .. } => left.head(),
        }
    }

    /// `head(left) → head(right)` for every internal node, in pre-order.
    pub fn head_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.collect_edges(&mut out);
        out
    }

    fn collect_edges(&self, out: &mut Vec<(usize, usize)>) {
        if let ProcessTree::Node { left, right, .. } = self {
            out.push((left.head(), right.head()));
            left.collect_edges(out);
            right.collect_edges(out);
        }
    }

    /// Leaves are exactly `0..L` in order.
    pub fn is_well_formed(&self) -> bool {
        self.leaves().into_iter().enumerate().all(|(k, i)| k == i)
    }

    /// Same shape, ignoring split annotations.
    pub fn same_shape(&self, other: &ProcessTree) -> bool {
        match (self, other) {
            (ProcessTree::Leaf(a), ProcessTree::Leaf(b)) => a == b,
            (
                ProcessTree::Node { left: l1, right: r1, .. },
                ProcessTree::Node { left: l2, right: r2, .. },
            ) => l1.same_shape(l2) && r1.same_shape(r2),
            _ => false,
        }
    }
}

/// Bracketed form with 1-based leaves, e.g. `(1 (2 3))`.
impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTree::Leaf(i) => write!(f, "{}", i + 1),
            ProcessTree::Node { left, right, .. } => write!(f, "({left} {right})"),
        }
    }
}

impl FromStr for ProcessTree {
    type Err = Error;

    /// Parses the bracketed form; split annotations come back as 0.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<String> = s
            .replace('(', " ( ")
            .replace(')', " ) ")
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let mut pos = 0;
        let tree = parse_tree(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Format(format!("trailing input in tree {s:?}")));
        }
        if !tree.is_well_formed() {
            return Err(Error::Format(format!("tree {s:?} does not list leaves 1..L in order")));
        }
        Ok(tree)
    }
}

fn parse_tree(tokens: &[String], pos: &mut usize) -> Result<ProcessTree> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Format("unexpected end of tree".into()))?;
    *pos += 1;
    if tok == "(" {
        let left = parse_tree(tokens, pos)?;
        let right = parse_tree(tokens, pos)?;
        match tokens.get(*pos).map(String::as_str) {
            Some(")") => *pos += 1,
            _ => return Err(Error::Format("binary node must close after two children".into())),
        }
        Ok(ProcessTree::node(left, right, 0.0))
    } else {
        match tok.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(ProcessTree::Leaf(n - 1)),
            _ => Err(Error::Format(format!("bad leaf {tok:?}"))),
        }
    }
}

/// Top-down greedy split: `d[k]` is the distance between sentences `k` and
/// `k+1`; a span is cut before the sentence with the largest distance to
/// its predecessor, leftmost on ties.
pub fn greedy_tree(d: &[f64]) -> ProcessTree {
    build(d, 0, d.len())
}

fn build(d: &[f64], a: usize, b: usize) -> ProcessTree {
    if a == b {
        return ProcessTree::Leaf(a);
    }
    let mut best = a + 1;
    for l in a + 2..=b {
        if d[l - 1] > d[best - 1] {
            best = l;
        }
    }
    ProcessTree::node(build(d, a, best - 1), build(d, best, b), d[best - 1])
}

/// Uniformly random binary tree shape over `n ≥ 1` leaves (Rémy's
/// algorithm), leaves numbered in order.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ProcessTree> {
    if n == 0 {
        return Err(Error::contract("a tree needs at least one leaf"));
    }
    // Arena: children[i] = Some((l, r)) for internal nodes.
    let mut children: Vec<Option<(usize, usize)>> = vec![None];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut root = 0;
    for _ in 1..n {
        let x = rng.gen_range(0..children.len());
        let leaf = children.len();
        children.push(None);
        parent.push(None);
        let inner = children.len();
        let pair = if rng.gen_bool(0.5) { (x, leaf) } else { (leaf, x) };
        children.push(Some(pair));
        parent.push(parent[x]);
        match parent[x] {
            None => root = inner,
            Some(p) => {
                let (l, r) = children[p].expect("parent is internal");
                children[p] = Some(if l == x { (inner, r) } else { (l, inner) });
            }
        }
        parent[x] = Some(inner);
        parent[leaf] = Some(inner);
    }
    let mut next = 0;
    Ok(label(&children, root, &mut next))
}

fn label(children: &[Option<(usize, usize)>], node: usize, next: &mut usize) -> ProcessTree {
    match children[node] {
        None => {
            *next += 1;
            ProcessTree::Leaf(*next - 1)
        }
        Some((l, r)) => {
            let left = label(children, l, next);
            let right = label(children, r, next);
            ProcessTree::node(left, right, 0.0)
        }
    }
}
