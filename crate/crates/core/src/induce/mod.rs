//! Level distances from master forget gates, greedy tree retrieval and
//! conversion of trees to sentence graphs.
//!
//! Induced output is plain text, one record per process:
//!
//! ```text
//! #process <id>
//! tree <bracketed tree, 1-based leaves, e.g. (1 (2 3))>
//! distance <d_2> <d_3> ... <d_L>      (omitted when L = 1)
//! <parent> -> <child>                 (one line per edge, 1-based)
//! <blank line>
//! ```

mod tree;

pub use tree::{greedy_tree, random_tree, ProcessTree};

use std::fmt::Write as _;

use crate::corpus::ProcessDoc;
use crate::error::{Error, Result};
use crate::eval::ProcessGraph;
use crate::lm::ProcessLm;

/// `D_m − Σ_k f̃_lk` for `l = 2..L`, clamped to `[0, D_m]` against rounding.
pub fn level_distance(gates: &[Vec<f64>], d_m: usize) -> Result<Vec<f64>> {
    for (l, g) in gates.iter().enumerate() {
        if g.len() != d_m {
            return Err(Error::Shape {
                op: "level distance",
                left: vec![l, g.len()],
                right: vec![d_m],
            });
        }
    }
    let dm = d_m as f64;
    Ok(gates
        .iter()
        .skip(1)
        .map(|g| (dm - g.iter().sum::<f64>()).clamp(0.0, dm))
        .collect())
}

/// Left-head conversion: each internal node adds `head(left) → head(right)`.
pub fn tree_to_graph(tree: &ProcessTree, doc: &ProcessDoc) -> Result<ProcessGraph> {
    if tree.len() != doc.len() || !tree.is_well_formed() {
        return Err(Error::contract(format!(
            "tree with {} leaves does not match process {} with {} sentences",
            tree.len(),
            doc.id,
            doc.len()
        )));
    }
    ProcessGraph::from_doc(doc, tree.head_edges())
}

/// Default gate layer: the middle one.
pub fn default_gate_layer(layers: usize) -> usize {
    layers / 2
}

#[derive(Clone, Debug)]
pub struct Induction {
    pub doc_id: String,
    pub distances: Vec<f64>,
    pub tree: ProcessTree,
    pub graph: ProcessGraph,
}

/// Gates → distances → tree → graph for one document.
pub fn induce(model: &ProcessLm, doc: &ProcessDoc, gate_layer: usize) -> Result<Induction> {
    let gates = model.master_forget_profile(doc, gate_layer)?;
    let distances = level_distance(&gates, model.config.d_m)?;
    let tree = greedy_tree(&distances);
    let graph = tree_to_graph(&tree, doc)?;
    Ok(Induction {
        doc_id: doc.id.clone(),
        distances,
        tree,
        graph,
    })
}

/// One record of the induced-structure file.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedRecord {
    pub doc_id: String,
    pub tree: ProcessTree,
    pub distances: Vec<f64>,
    /// 0-based `(parent, child)` pairs.
    pub edges: Vec<(usize, usize)>,
}

impl From<&Induction> for InducedRecord {
    fn from(i: &Induction) -> Self {
        InducedRecord {
            doc_id: i.doc_id.clone(),
            tree: i.tree.clone(),
            distances: i.distances.clone(),
            edges: i.graph.edges().to_vec(),
        }
    }
}

pub fn write_induced(records: &[InducedRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "#process {}", r.doc_id);
        let _ = writeln!(s, "tree {}", r.tree);
        if !r.distances.is_empty() {
            let d: Vec<String> = r.distances.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "distance {}", d.join(" "));
        }
        for (p, c) in &r.edges {
            let _ = writeln!(s, "{} -> {}", p + 1, c + 1);
        }
        s.push('\n');
    }
    s
}

pub fn parse_induced(text: &str) -> Result<Vec<InducedRecord>> {
    let mut out = Vec::new();
    let mut cur: Option<(InducedRecord, bool)> = None;
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let finish = |cur: &mut Option<(InducedRecord, bool)>, out: &mut Vec<InducedRecord>, line: usize| {
        if let Some((r, has_tree)) = cur.take() {
            if !has_tree {
                return Err(err(line, format!("process {} has no tree line", r.doc_id)));
            }
            out.push(r);
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim_end();
        if t.is_empty() {
            finish(&mut cur, &mut out, line)?;
            continue;
        }
        if let Some(id) = t.strip_prefix("#process ") {
            finish(&mut cur, &mut out, line)?;
            cur = Some((
                InducedRecord {
                    doc_id: id.trim().to_string(),
                    tree: ProcessTree::Leaf(0),
                    distances: Vec::new(),
                    edges: Vec::new(),
                },
                false,
            ));
            continue;
        }
        let Some((rec, has_tree)) = cur.as_mut() else {
            return Err(err(line, "content outside a #process record".into()));
        };
        if let Some(tree) = t.strip_prefix("tree ") {
            rec.tree = tree.parse().map_err(|e: Error| err(line, e.to_string()))?;
            *has_tree = true;
        } else if let Some(d) = t.strip_prefix("distance ") {
            rec.distances = d
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| err(line, format!("bad distance {x:?}"))))
                .collect::<Result<_>>()?;
        } else if let Some((p, c)) = t.split_once("->") {
            let idx = |x: &str| match x.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n - 1),
                _ => Err(err(line, format!("bad node index {x:?}"))),
            };
            rec.edges.push((idx(p)?, idx(c)?));
        } else {
            return Err(err(line, format!("unrecognised line {t:?}")));
        }
    }
    finish(&mut cur, &mut out, text.lines().count() + 1)?;
    for r in &out {
        if !r.distances.is_empty() && r.distances.len() + 1 != r.tree.len() {
            return Err(Error::Format(format!(
                "process {}: {} distances for {} sentences",
                r.doc_id,
                r.distances.len(),
                r.tree.len()
            )));
        }
        let mut want = r.tree.head_edges();
        let mut got = r.edges.clone();
        want.sort_unstable();
        got.sort_unstable();
        if want != got {
            return Err(Error::Format(format!("process {}: edges disagree with the tree", r.doc_id)));
        }
    }
    Ok(out)
}
