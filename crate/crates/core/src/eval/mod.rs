//! Graph similarity between induced and gold process graphs, per-corpus
//! aggregation and a random-tree baseline.

mod graph;
mod sim;

pub use graph::{GraphNode, ProcessGraph};
pub use sim::{
    label_similarity, map_nodes, mapped_edge_count, match_rates, simged, MappedPair, NodeMapping, SimReport,
    SimWeights,
};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ProcessDoc;
use crate::error::{Error, Result};
use crate::induce::{random_tree, tree_to_graph};
use crate::parallel::map_ordered;

/// Published figures on the original (non-public) corpus, for context only.
pub const PUBLISHED_REFERENCE: [(&str, f64); 3] = [("Edges", 0.57), ("Nodes", 0.76), ("simged", 0.32)];

pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub weights: SimWeights,
    pub theta: f64,
    /// Drop nodes left unmapped by the matcher (and their edges) from both
    /// graphs before scoring.
    pub filter_unmatched: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            weights: SimWeights::default(),
            theta: DEFAULT_THETA,
            filter_unmatched: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocScore {
    pub doc_id: String,
    /// Gold node count.
    pub nodes: usize,
    /// Gold edge count.
    pub edges: usize,
    pub node_rate: f64,
    pub edge_rate: f64,
    pub simged: f64,
    /// Nodes removed by unmatched-node filtering (both graphs).
    pub filtered: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub docs: Vec<DocScore>,
    pub mean_node_rate: f64,
    pub mean_edge_rate: f64,
    pub mean_simged: f64,
}

/// Score one induced graph against its gold graph.
pub fn score_pair(doc_id: &str, gold: &ProcessGraph, induced: &ProcessGraph, opts: &EvalOptions) -> Result<DocScore> {
    let mut filtered = 0;
    let r = if opts.filter_unmatched {
        let m = map_nodes(gold, induced, opts.theta);
        let keep_g: BTreeSet<usize> = m.pairs.iter().map(|p| p.left).collect();
        let keep_i: BTreeSet<usize> = m.pairs.iter().map(|p| p.right).collect();
        let drop_g: BTreeSet<usize> = gold.nodes().iter().map(|n| n.id).filter(|i| !keep_g.contains(i)).collect();
        let drop_i: BTreeSet<usize> = induced.nodes().iter().map(|n| n.id).filter(|i| !keep_i.contains(i)).collect();
        filtered = drop_g.len() + drop_i.len();
        simged(&gold.without_nodes(&drop_g), &induced.without_nodes(&drop_i), opts.weights, opts.theta)?
    } else {
        simged(gold, induced, opts.weights, opts.theta)?
    };
    Ok(DocScore {
        doc_id: doc_id.to_string(),
        nodes: gold.nodes().len(),
        edges: gold.edges().len(),
        node_rate: r.node_rate,
        edge_rate: r.edge_rate,
        simged: r.simged,
        filtered,
    })
}

pub fn aggregate(docs: Vec<DocScore>) -> Result<CorpusReport> {
    if docs.is_empty() {
        return Err(Error::contract("no documents to evaluate"));
    }
    let n = docs.len() as f64;
    let mean = |f: fn(&DocScore) -> f64| docs.iter().map(f).sum::<f64>() / n;
    Ok(CorpusReport {
        mean_node_rate: mean(|d| d.node_rate),
        mean_edge_rate: mean(|d| d.edge_rate),
        mean_simged: mean(|d| d.simged),
        docs,
    })
}

/// Score `(doc id, gold, induced)` triples.
pub fn evaluate_graphs(pairs: &[(String, ProcessGraph, ProcessGraph)], opts: &EvalOptions) -> Result<CorpusReport> {
    if pairs.is_empty() {
        return Err(Error::contract("no documents to evaluate"));
    }
    let scores = map_ordered(pairs, |(id, g, i)| score_pair(id, g, i, opts))?;
    aggregate(scores)
}

/// Gold graph of every document paired with `induce(position, doc)`.
pub fn evaluate_docs<F>(docs: &[ProcessDoc], opts: &EvalOptions, induce: F) -> Result<CorpusReport>
where
    F: Fn(usize, &ProcessDoc) -> Result<ProcessGraph> + Sync + Send,
{
    if docs.is_empty() {
        return Err(Error::contract("no documents to evaluate"));
    }
    let indexed: Vec<(usize, &ProcessDoc)> = docs.iter().enumerate().collect();
    let scores = map_ordered(&indexed, |&(k, d)| score_pair(&d.id, &ProcessGraph::gold(d)?, &induce(k, d)?, opts))?;
    aggregate(scores)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    /// Mean simged over the documents, one entry per seed.
    pub seed_means: Vec<f64>,
    pub mean_node_rate: f64,
    pub mean_edge_rate: f64,
    pub mean_simged: f64,
}

/// Uniformly random binary trees (converted like induced trees) scored
/// against gold, averaged over `seeds` runs. Run `k` uses seed `seed + k`.
pub fn random_baseline(docs: &[ProcessDoc], seeds: usize, seed: u64, opts: &EvalOptions) -> Result<BaselineReport> {
    if seeds == 0 {
        return Err(Error::Config("baseline needs at least one seed".into()));
    }
    let mut reports = Vec::with_capacity(seeds);
    for run in 0..seeds as u64 {
        let s = seed.wrapping_add(run);
        // One stream per document so results do not depend on evaluation order.
        reports.push(evaluate_docs(docs, opts, |k, d| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            rng.set_stream(k as u64);
            let tree = random_tree(d.len(), &mut rng)?;
            tree_to_graph(&tree, d)
        })?);
    }
    let n = seeds as f64;
    Ok(BaselineReport {
        seed_means: reports.iter().map(|r| r.mean_simged).collect(),
        mean_node_rate: reports.iter().map(|r| r.mean_node_rate).sum::<f64>() / n,
        mean_edge_rate: reports.iter().map(|r| r.mean_edge_rate).sum::<f64>() / n,
        mean_simged: reports.iter().map(|r| r.mean_simged).sum::<f64>() / n,
    })
}

pub const CSV_HEADER: &str = "doc_id,nodes,edges,node_rate,edge_rate,simged";

pub fn to_csv(report: &CorpusReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for d in &report.docs {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6}",
            d.doc_id, d.nodes, d.edges, d.node_rate, d.edge_rate, d.simged
        );
    }
    s
}

/// Aligned text table with a closing mean row.
pub fn to_table(report: &CorpusReport) -> String {
    let w = report
        .docs
        .iter()
        .map(|d| d.doc_id.len())
        .max()
        .unwrap_or(0)
        .max(6);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<w$}  {:>5}  {:>5}  {:>9}  {:>9}  {:>7}",
        "doc_id", "nodes", "edges", "node_rate", "edge_rate", "simged"
    );
    for d in &report.docs {
        let _ = writeln!(
            s,
            "{:<w$}  {:>5}  {:>5}  {:>9.4}  {:>9.4}  {:>7.4}",
            d.doc_id, d.nodes, d.edges, d.node_rate, d.edge_rate, d.simged
        );
    }
    let _ = writeln!(
        s,
        "{:<w$}  {:>5}  {:>5}  {:>9.4}  {:>9.4}  {:>7.4}",
        "mean", "", "", report.mean_node_rate, report.mean_edge_rate, report.mean_simged
    );
    s
}

#[cfg(test)]
mod tests;
