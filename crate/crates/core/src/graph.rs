//! Weighted undirected graphs and the single-mode projections of the
//! manuscript–concept bipartite network.
//!
//! Graphs are stored as CSR adjacency with sorted neighbour lists, so pair
//! lookup is a binary search over one row. Node ids are local to a graph and
//! assigned in lexicographic label order; two graphs with the same labelled
//! edge set are therefore identical regardless of how they were built.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::Exec;

pub type NodeId = u32;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedGraph {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    weights: Vec<u64>,
    strength: Vec<u64>,
}

/// Concepts linked by the number of manuscripts mentioning both.
pub type ConceptGraph = WeightedGraph;
/// Manuscripts linked by the number of concepts they share.
pub type ManuscriptGraph = WeightedGraph;

impl WeightedGraph {
    /// Builds a graph from labelled edges. Self-loops, zero weights and
    /// repeated pairs are rejected.
    pub fn from_labeled_edges<'a, I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        let mut vocab: HashMap<&str, u32> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut list = Vec::new();
        let mut intern = |l: &'a str, labels: &mut Vec<String>| -> u32 {
            *vocab.entry(l).or_insert_with(|| {
                labels.push(l.to_owned());
                (labels.len() - 1) as u32
            })
        };
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::Contract(format!("self-loop on {a:?}")));
            }
            if w == 0 {
                return Err(Error::Contract(format!("zero weight on ({a:?}, {b:?})")));
            }
            let i = intern(a, &mut labels);
            let j = intern(b, &mut labels);
            list.push((i.min(j), i.max(j), w));
        }
        list.sort_unstable();
        if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
            return Err(Error::Contract(format!(
                "duplicate edge ({:?}, {:?})",
                labels[pair[0].0 as usize], labels[pair[0].1 as usize]
            )));
        }
        Ok(Self::canonical(&labels, list))
    }

    /// Canonical construction: keeps only nodes with at least one edge,
    /// orders them by label and symmetrises the upper-triangular edge list.
    fn canonical(labels: &[String], edges: Vec<(u32, u32, u64)>) -> Self {
        let mut used = vec![false; labels.len()];
        for &(i, j, _) in &edges {
            used[i as usize] = true;
            used[j as usize] = true;
        }
        let mut kept: Vec<u32> = (0..labels.len() as u32).filter(|&i| used[i as usize]).collect();
        kept.sort_by(|&a, &b| labels[a as usize].cmp(&labels[b as usize]));
        let mut remap = vec![u32::MAX; labels.len()];
        for (new, &old) in kept.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let n = kept.len();
        let mut degree = vec![0usize; n];
        for &(i, j, _) in &edges {
            degree[remap[i as usize] as usize] += 1;
            degree[remap[j as usize] as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0; offsets[n]];
        let mut weights = vec![0; offsets[n]];
        for &(i, j, w) in &edges {
            let (a, b) = (remap[i as usize], remap[j as usize]);
            for (x, y) in [(a, b), (b, a)] {
                let slot = &mut cursor[x as usize];
                neighbors[*slot] = y;
                weights[*slot] = w;
                *slot += 1;
            }
        }
        let mut strength = vec![0u64; n];
        for v in 0..n {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            let mut row: Vec<(u32, u64)> = neighbors[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            row.sort_unstable();
            for (k, (nb, w)) in row.into_iter().enumerate() {
                neighbors[lo + k] = nb;
                weights[lo + k] = w;
            }
            strength[v] = weights[lo..hi].iter().sum();
        }
        let labels: Vec<String> = kept.iter().map(|&o| labels[o as usize].clone()).collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as NodeId))
            .collect();
        WeightedGraph {
            labels,
            index,
            offsets,
            neighbors,
            weights,
            strength,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    /// Sum of the weights of `v`'s incident edges.
    pub fn strength(&self, v: NodeId) -> u64 {
        self.strength[v as usize]
    }

    /// Sorted neighbour ids of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    /// Weights aligned with [`neighbors`](Self::neighbors).
    pub fn neighbor_weights(&self, v: NodeId) -> &[u64] {
        &self.weights[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    /// Position of `v`'s row in the flat adjacency arrays. Per-arc data
    /// computed by other modules is indexed `row_offset(v) + k`.
    pub fn row_offset(&self, v: NodeId) -> usize {
        self.offsets[v as usize]
    }

    pub fn arc_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn weight(&self, i: NodeId, j: NodeId) -> Option<u64> {
        self.arc(i, j).map(|a| self.weights[a])
    }

    /// Flat index of arc `i → j`, if the edge exists.
    pub fn arc(&self, i: NodeId, j: NodeId) -> Option<usize> {
        self.neighbors(i)
            .binary_search(&j)
            .ok()
            .map(|k| self.offsets[i as usize] + k)
    }

    /// Every edge once, as `(i, j, w)` with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, u64)> + '_ {
        (0..self.node_count() as NodeId).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .zip(self.neighbor_weights(i))
                .filter(move |(&j, _)| j > i)
                .map(move |(&j, &w)| (i, j, w))
        })
    }

    pub fn total_weight(&self) -> u64 {
        self.strength.iter().sum::<u64>() / 2
    }

    /// Subgraph with the edges for which `keep(i, j, w)` holds; nodes left
    /// without edges are dropped.
    pub fn retain_edges<F>(&self, mut keep: F) -> WeightedGraph
    where
        F: FnMut(NodeId, NodeId, u64) -> bool,
    {
        let edges = self.edges().filter(|&(i, j, w)| keep(i, j, w)).collect();
        Self::canonical(&self.labels, edges)
    }

    /// Writes `label_i<TAB>label_j<TAB>weight` lines, labels ordered within
    /// a line and lines sorted bytewise.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let mut lines: Vec<String> = self
            .edges()
            .map(|(i, j, w)| {
                let (a, b) = (self.label(i), self.label(j));
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                format!("{a}\t{b}\t{w}\n")
            })
            .collect();
        lines.sort_unstable();
        for line in lines {
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut rows: Vec<(String, String, u64)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: source.to_owned(),
                line: lineno + 1,
                message,
            };
            let mut fields = line.split('\t');
            let (Some(a), Some(b), Some(w), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(parse_err("expected three tab-separated fields".into()));
            };
            let w: u64 = w
                .parse()
                .map_err(|_| parse_err(format!("bad weight {w:?}")))?;
            rows.push((a.to_owned(), b.to_owned(), w));
        }
        Self::from_labeled_edges(rows.iter().map(|(a, b, w)| (a.as_str(), b.as_str(), *w)))
    }
}

/// Projects a bipartite adjacency onto its left side.
///
/// `left_to_right[u]` and `right_to_left[r]` are sorted member lists. For
/// each left node `u`, every co-member `v > u` reached through a shared
/// right node gets +1. Rows are independent, so the loop is parallel and
/// the output does not depend on the partitioning.
fn project(
    left_to_right: &[Vec<u32>],
    right_to_left: &[Vec<u32>],
    exec: Exec,
) -> Vec<(u32, u32, u64)> {
    let n = left_to_right.len();
    let rows: Vec<Vec<(u32, u64)>> = exec.map_range(n, |u| {
        let mut touched: Vec<u32> = Vec::new();
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for &r in &left_to_right[u] {
            let members = &right_to_left[r as usize];
            let start = members.partition_point(|&v| v <= u as u32);
            for &v in &members[start..] {
                let c = counts.entry(v).or_insert_with(|| {
                    touched.push(v);
                    0
                });
                *c += 1;
            }
        }
        touched.sort_unstable();
        touched.into_iter().map(|v| (v, counts[&v])).collect()
    });
    rows.into_iter()
        .enumerate()
        .flat_map(|(u, row)| row.into_iter().map(move |(v, w)| (u as u32, v, w)))
        .collect()
}

fn incidence(corpus: &Corpus) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let manuscripts: Vec<Vec<u32>> = corpus
        .records()
        .iter()
        .map(|r| r.concepts.iter().map(|c| c.0).collect())
        .collect();
    let mut concepts = vec![Vec::new(); corpus.vocabulary().len()];
    for (m, members) in manuscripts.iter().enumerate() {
        for &c in members {
            concepts[c as usize].push(m as u32);
        }
    }
    (manuscripts, concepts)
}

/// Concept co-occurrence network: `w_ij` counts manuscripts containing
/// both concepts. Concepts that never co-occur are not nodes.
pub fn project_to_concepts(corpus: &Corpus, exec: Exec) -> ConceptGraph {
    let (manuscripts, concepts) = incidence(corpus);
    let edges = project(&concepts, &manuscripts, exec);
    WeightedGraph::canonical(corpus.vocabulary().labels(), edges)
}

/// Manuscript network: `w_ij` counts shared concepts. Nodes are labelled by
/// manuscript id, which must be unique within the corpus.
pub fn project_to_manuscripts(corpus: &Corpus, exec: Exec) -> Result<ManuscriptGraph> {
    let labels: Vec<String> = corpus
        .records()
        .iter()
        .map(|r| r.manuscript_id.clone())
        .collect();
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
        return Err(Error::Contract(format!("duplicate manuscript id {dup:?}")));
    }
    let (manuscripts, concepts) = incidence(corpus);
    let edges = project(&manuscripts, &concepts, exec);
    Ok(WeightedGraph::canonical(&labels, edges))
}

/// Labels that are nodes of both graphs.
pub fn shared_nodes(g1: &WeightedGraph, g2: &WeightedGraph) -> BTreeSet<String> {
    let (small, large) = if g1.node_count() <= g2.node_count() {
        (g1, g2)
    } else {
        (g2, g1)
    };
    small
        .labels()
        .iter()
        .filter(|l| large.node(l).is_some())
        .cloned()
        .collect()
}
