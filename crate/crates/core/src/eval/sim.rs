use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;
use crate::error::{Error, Result};

use super::ProcessGraph;

/// Component weights of the graph similarity; must be nonnegative and sum to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for SimWeights {
    fn default() -> Self {
        SimWeights {
            w1: 0.3,
            w2: 0.3,
            w3: 0.4,
        }
    }
}

impl SimWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let w = SimWeights { w1, w2, w3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w1, self.w2, self.w3];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!("weights {ws:?} must be nonnegative")));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("weights {ws:?} sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Dice coefficient of the two texts' token multisets.
pub fn label_similarity(a: &str, b: &str) -> f64 {
    let count = |s: &str| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for t in tokenize(s) {
            *m.entry(t).or_default() += 1;
        }
        m
    };
    let (ca, cb) = (count(a), count(b));
    let na: usize = ca.values().sum();
    let nb: usize = cb.values().sum();
    if na + nb == 0 {
        return 1.0;
    }
    let common: usize = ca
        .iter()
        .map(|(t, n)| (*n).min(cb.get(t).copied().unwrap_or(0)))
        .sum();
    2.0 * common as f64 / (na + nb) as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappedPair {
    /// Node id in the first graph.
    pub left: usize,
    /// Node id in the second graph.
    pub right: usize,
    pub label_sim: f64,
    pub sim_con: f64,
}

/// Partial injective node mapping, sorted by `left`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeMapping {
    pub pairs: Vec<MappedPair>,
}

impl NodeMapping {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn forward(&self) -> BTreeMap<usize, usize> {
        self.pairs.iter().map(|p| (p.left, p.right)).collect()
    }

    pub fn backward(&self) -> BTreeMap<usize, usize> {
        self.pairs.iter().map(|p| (p.right, p.left)).collect()
    }

    pub fn total_label_similarity(&self) -> f64 {
        self.pairs.iter().map(|p| p.label_sim).sum()
    }
}

/// Greedy matching: repeatedly take the most similar pair of unmatched nodes
/// with similarity ≥ `theta`. Ties go to the pair whose smaller
/// `(label, id)` key is smaller, then whose larger key is smaller, which
/// makes the result independent of argument order.
pub fn map_nodes(g1: &ProcessGraph, g2: &ProcessGraph, theta: f64) -> NodeMapping {
    let mut cands = Vec::new();
    for a in g1.nodes() {
        for b in g2.nodes() {
            let s = label_similarity(&a.label, &b.label);
            if s >= theta {
                let ka = (a.label.as_str(), a.id);
                let kb = (b.label.as_str(), b.id);
                cands.push((s, ka.min(kb), ka.max(kb), a.id, b.id));
            }
        }
    }
    cands.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then_with(|| x.1.cmp(&y.1))
            .then_with(|| x.2.cmp(&y.2))
    });
    let mut used1 = BTreeSet::new();
    let mut used2 = BTreeSet::new();
    let mut chosen = Vec::new();
    for (s, _, _, a, b) in cands {
        if used1.contains(&a) || used2.contains(&b) {
            continue;
        }
        used1.insert(a);
        used2.insert(b);
        chosen.push((a, b, s));
    }
    chosen.sort_by_key(|c| c.0);
    let fwd: BTreeMap<usize, usize> = chosen.iter().map(|c| (c.0, c.1)).collect();
    let pairs = chosen
        .into_iter()
        .map(|(a, b, s)| {
            let na: BTreeSet<usize> = g1.neighbours(a).iter().filter_map(|n| fwd.get(n).copied()).collect();
            let nb: BTreeSet<usize> = g2
                .neighbours(b)
                .into_iter()
                .filter(|n| used2.contains(n))
                .collect();
            let sim_con = if na.is_empty() && nb.is_empty() {
                1.0
            } else {
                2.0 * na.intersection(&nb).count() as f64 / (na.len() + nb.len()) as f64
            };
            MappedPair {
                left: a,
                right: b,
                label_sim: s,
                sim_con,
            }
        })
        .collect();
    NodeMapping { pairs }
}

/// Edges of `g1` whose endpoints map onto an edge of `g2` with the same direction.
pub fn mapped_edge_count(g1: &ProcessGraph, g2: &ProcessGraph, m: &NodeMapping) -> usize {
    let fwd = m.forward();
    g1.edges()
        .iter()
        .filter(|(a, b)| match (fwd.get(a), fwd.get(b)) {
            (Some(x), Some(y)) => g2.has_edge(*x, *y),
            _ => false,
        })
        .count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub simged: f64,
    pub sim_m: f64,
    pub sim_n: f64,
    pub sim_e: f64,
    /// `Σ (1 − sim_con)` over mapped pairs.
    pub m_star: f64,
    pub mapped_nodes: usize,
    pub mapped_edges: usize,
    pub node_rate: f64,
    pub edge_rate: f64,
}

/// `2|M| / (|N1|+|N2|)` and `2|mapped edges| / (|E1|+|E2|)`; 1.0 for two
/// empty sets.
pub fn match_rates(g1: &ProcessGraph, g2: &ProcessGraph, m: &NodeMapping) -> (f64, f64) {
    let rate = |k: usize, n: usize| if n == 0 { 1.0 } else { 2.0 * k as f64 / n as f64 };
    (
        rate(m.len(), g1.nodes().len() + g2.nodes().len()),
        rate(mapped_edge_count(g1, g2, m), g1.edges().len() + g2.edges().len()),
    )
}

/// `1 − (w1·sim_M + w2·sim_N + w3·sim_E)`.
///
/// `sim_M` is the mean contextual dissimilarity of mapped nodes (1 with no
/// mapped nodes), `sim_N` the fraction of unmapped nodes and `sim_E` the
/// fraction of unmapped edges (0 when neither graph has edges). Two empty
/// graphs score 1.
pub fn simged(g1: &ProcessGraph, g2: &ProcessGraph, weights: SimWeights, theta: f64) -> Result<SimReport> {
    weights.validate()?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Config(format!("theta {theta} outside [0, 1]")));
    }
    let m = map_nodes(g1, g2, theta);
    let (n1, n2) = (g1.nodes().len(), g2.nodes().len());
    let (e1, e2) = (g1.edges().len(), g2.edges().len());
    let me = mapped_edge_count(g1, g2, &m);
    let me_back = mapped_edge_count(g2, g1, &reverse(&m));
    debug_assert_eq!(me, me_back);
    let (node_rate, edge_rate) = match_rates(g1, g2, &m);
    if n1 + n2 == 0 {
        return Ok(SimReport {
            simged: 1.0,
            sim_m: 0.0,
            sim_n: 0.0,
            sim_e: 0.0,
            m_star: 0.0,
            mapped_nodes: 0,
            mapped_edges: 0,
            node_rate,
            edge_rate,
        });
    }
    let m_star: f64 = m.pairs.iter().map(|p| 1.0 - p.sim_con).sum();
    let sim_m = if m.is_empty() { 1.0 } else { m_star / m.len() as f64 };
    let sim_n = ((n1 - m.len()) + (n2 - m.len())) as f64 / (n1 + n2) as f64;
    let sim_e = if e1 + e2 == 0 {
        0.0
    } else {
        ((e1 - me) + (e2 - me_back)) as f64 / (e1 + e2) as f64
    };
    let s = 1.0 - (weights.w1 * sim_m + weights.w2 * sim_n + weights.w3 * sim_e);
    Ok(SimReport {
        simged: s.clamp(0.0, 1.0),
        sim_m,
        sim_n,
        sim_e,
        m_star,
        mapped_nodes: m.len(),
        mapped_edges: me,
        node_rate,
        edge_rate,
    })
}

fn reverse(m: &NodeMapping) -> NodeMapping {
    let mut pairs: Vec<MappedPair> = m
        .pairs
        .iter()
        .map(|p| MappedPair {
            left: p.right,
            right: p.left,
            ..p.clone()
        })
        .collect();
    pairs.sort_by_key(|p| p.left);
    NodeMapping { pairs }
}
