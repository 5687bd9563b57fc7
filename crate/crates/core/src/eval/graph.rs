use std::collections::BTreeSet;

use crate::corpus::ProcessDoc;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub id: usize,
    pub label: String,
}

/// Directed graph of sentence nodes. Edges refer to node ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<(usize, usize)>,
}

impl ProcessGraph {
    /// Rejects duplicate node ids, dangling endpoints, self-loops and
    /// duplicate edges.
    pub fn new(nodes: Vec<GraphNode>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for n in &nodes {
            if !ids.insert(n.id) {
                return Err(Error::contract(format!("duplicate node id {}", n.id)));
            }
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in &edges {
            if !ids.contains(&a) || !ids.contains(&b) {
                return Err(Error::contract(format!("edge {a} -> {b} has a missing endpoint")));
            }
            if a == b {
                return Err(Error::contract(format!("self-loop on node {a}")));
            }
            if !seen.insert((a, b)) {
                return Err(Error::contract(format!("duplicate edge {a} -> {b}")));
            }
        }
        Ok(ProcessGraph { nodes, edges })
    }

    pub fn empty() -> Self {
        ProcessGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// One node per sentence (id = 0-based position, label = sentence text)
    /// and the given edges.
    pub fn from_doc(doc: &ProcessDoc, edges: Vec<(usize, usize)>) -> Result<Self> {
        let nodes = doc
            .sentences
            .iter()
            .enumerate()
            .map(|(id, s)| GraphNode { id, label: s.text() })
            .collect();
        Self::new(nodes, edges)
    }

    /// Gold graph: outline parent → child.
    pub fn gold(doc: &ProcessDoc) -> Result<Self> {
        let parents = doc
            .gold_parents()
            .ok_or_else(|| Error::contract(format!("process {} has no gold outline", doc.id)))?;
        let edges = parents
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (p, c)))
            .collect();
        Self::from_doc(doc, edges)
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    /// Position of node `id` in [`nodes`](Self::nodes).
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Ids adjacent to `id` in either direction.
    pub fn neighbours(&self, id: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Drop the nodes with the given ids and every edge touching them.
    pub fn without_nodes(&self, drop: &BTreeSet<usize>) -> Self {
        ProcessGraph {
            nodes: self.nodes.iter().filter(|n| !drop.contains(&n.id)).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| !drop.contains(a) && !drop.contains(b))
                .copied()
                .collect(),
        }
    }
}
