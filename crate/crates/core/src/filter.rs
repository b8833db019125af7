//! Backbone extraction: hard weight threshold and the disparity filter.
//!
//! The disparity filter tests every edge against a null model in which a
//! node's strength is split uniformly at random among its `k` links. The
//! p-value of edge `(i, j)` seen from `i` is
//!
//! ```text
//! α_ij = 1 − (k_i − 1) ∫₀^{p_ij} (1 − x)^{k_i − 2} dx = (1 − p_ij)^{k_i − 1},
//! p_ij = w_ij / s_i
//! ```
//!
//! An edge survives when it is significant from at least one endpoint
//! (`α_ij < ρ` or `α_ji < ρ`). Both filters drop nodes left isolated.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{NodeId, WeightedGraph};

pub const DEFAULT_OMEGA: u64 = 10;
pub const DEFAULT_RHO: f64 = 0.1;

/// Disparity p-value of an edge of weight `weight` from the standpoint of
/// a node with `degree` links and total `strength`.
///
/// A degree-one node always yields `α = 1`: the integral term carries the
/// prefactor `k − 1 = 0`.
pub fn disparity_alpha(weight: u64, degree: usize, strength: u64) -> Result<f64> {
    if degree == 0 {
        return Err(Error::Contract("disparity_alpha: degree must be >= 1".into()));
    }
    if weight == 0 || weight > strength {
        return Err(Error::Contract(format!(
            "disparity_alpha: need 0 < w <= strength, got w={weight} strength={strength}"
        )));
    }
    if degree == 1 {
        return Ok(1.0);
    }
    let p = weight as f64 / strength as f64;
    Ok(((degree - 1) as f64 * (-p).ln_1p()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMethod {
    WeightThreshold,
    Disparity,
}

/// Per-edge significance decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterVerdict {
    pub i: NodeId,
    pub j: NodeId,
    pub weight: u64,
    pub alpha_ij: Option<f64>,
    pub alpha_ji: Option<f64>,
    pub kept: bool,
    pub method: FilterMethod,
}

/// A rule that splits the edges of a graph into strong and weak ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum LinkRule {
    /// Strong iff `w > omega`.
    Weight { omega: u64 },
    /// Strong iff `α_ij < rho` or `α_ji < rho`.
    Disparity { rho: f64 },
}

impl LinkRule {
    pub fn method(&self) -> FilterMethod {
        match self {
            LinkRule::Weight { .. } => FilterMethod::WeightThreshold,
            LinkRule::Disparity { .. } => FilterMethod::Disparity,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LinkRule::Disparity { rho } if !(rho > 0.0 && rho <= 1.0) => {
                Err(Error::Config(format!("rho must lie in (0, 1], got {rho}")))
            }
            _ => Ok(()),
        }
    }

    /// One flag per arc, aligned with the graph's flat adjacency (see
    /// [`WeightedGraph::row_offset`]); both arcs of an edge agree.
    pub fn strong_arcs(&self, g: &WeightedGraph, exec: Exec) -> Result<Vec<bool>> {
        self.validate()?;
        match *self {
            LinkRule::Weight { omega } => Ok((0..g.node_count() as NodeId)
                .flat_map(|v| g.neighbor_weights(v).iter().map(move |&w| w > omega))
                .collect()),
            LinkRule::Disparity { rho } => {
                let alphas = arc_alphas(g, exec)?;
                let mut flags = vec![false; g.arc_count()];
                for i in 0..g.node_count() as NodeId {
                    let base = g.row_offset(i);
                    for (k, &j) in g.neighbors(i).iter().enumerate() {
                        if j < i {
                            continue;
                        }
                        let a = base + k;
                        let back = g.arc(j, i).expect("adjacency is symmetric");
                        let kept = alphas[a] < rho || alphas[back] < rho;
                        flags[a] = kept;
                        flags[back] = kept;
                    }
                }
                Ok(flags)
            }
        }
    }

    /// Filtered graph plus retention statistics.
    pub fn apply(&self, g: &WeightedGraph, exec: Exec) -> Result<FilterOutcome> {
        let flags = self.strong_arcs(g, exec)?;
        let graph = g.retain_edges(|i, j, _| flags[g.arc(i, j).expect("edge exists")]);
        Ok(FilterOutcome::new(g, graph, self.method()))
    }
}

/// `α` for every arc `i → j` from `i`'s standpoint, aligned with the flat
/// adjacency arrays.
pub fn arc_alphas(g: &WeightedGraph, exec: Exec) -> Result<Vec<f64>> {
    let rows: Vec<Result<Vec<f64>>> = exec.map_range(g.node_count(), |v| {
        let v = v as NodeId;
        let (k, s) = (g.degree(v), g.strength(v));
        g.neighbor_weights(v)
            .iter()
            .map(|&w| disparity_alpha(w, k, s))
            .collect()
    });
    let mut out = Vec::with_capacity(g.arc_count());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub graph: WeightedGraph,
    pub method: FilterMethod,
    pub input_edges: usize,
    pub retained_edges: usize,
    pub input_nodes: usize,
    pub retained_nodes: usize,
}

impl FilterOutcome {
    fn new(input: &WeightedGraph, graph: WeightedGraph, method: FilterMethod) -> Self {
        FilterOutcome {
            method,
            input_edges: input.edge_count(),
            retained_edges: graph.edge_count(),
            input_nodes: input.node_count(),
            retained_nodes: graph.node_count(),
            graph,
        }
    }

    /// Share of input edges kept; `None` for an empty input.
    pub fn retained_fraction(&self) -> Option<f64> {
        (self.input_edges > 0).then(|| self.retained_edges as f64 / self.input_edges as f64)
    }

    pub fn stats(&self) -> RetentionStats {
        RetentionStats {
            method: self.method,
            input_nodes: self.input_nodes,
            input_edges: self.input_edges,
            retained_nodes: self.retained_nodes,
            retained_edges: self.retained_edges,
            retained_fraction: self.retained_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionStats {
    pub method: FilterMethod,
    pub input_nodes: usize,
    pub input_edges: usize,
    pub retained_nodes: usize,
    pub retained_edges: usize,
    pub retained_fraction: Option<f64>,
}

/// Keeps edges with `w > omega`.
pub fn weight_filter(g: &WeightedGraph, omega: u64) -> FilterOutcome {
    let graph = g.retain_edges(|_, _, w| w > omega);
    FilterOutcome::new(g, graph, FilterMethod::WeightThreshold)
}

pub fn disparity_filter(g: &WeightedGraph, rho: f64, exec: Exec) -> Result<FilterOutcome> {
    LinkRule::Disparity { rho }.apply(g, exec)
}

/// Full audit trail of the disparity test, one verdict per edge in
/// [`WeightedGraph::edges`] order.
pub fn disparity_verdicts(g: &WeightedGraph, rho: f64, exec: Exec) -> Result<Vec<FilterVerdict>> {
    LinkRule::Disparity { rho }.validate()?;
    let alphas = arc_alphas(g, exec)?;
    Ok(g.edges()
        .map(|(i, j, w)| {
            let a_ij = alphas[g.arc(i, j).expect("edge exists")];
            let a_ji = alphas[g.arc(j, i).expect("edge exists")];
            FilterVerdict {
                i,
                j,
                weight: w,
                alpha_ij: Some(a_ij),
                alpha_ji: Some(a_ji),
                kept: a_ij < rho || a_ji < rho,
                method: FilterMethod::Disparity,
            }
        })
        .collect())
}

pub fn weight_verdicts(g: &WeightedGraph, omega: u64) -> Vec<FilterVerdict> {
    g.edges()
        .map(|(i, j, w)| FilterVerdict {
            i,
            j,
            weight: w,
            alpha_ij: None,
            alpha_ji: None,
            kept: w > omega,
            method: FilterMethod::WeightThreshold,
        })
        .collect()
}

/// TSV dump: `label_i  label_j  w  alpha_ij  alpha_ji  kept`.
pub fn write_verdicts<W: Write>(g: &WeightedGraph, verdicts: &[FilterVerdict], mut out: W) -> Result<()> {
    writeln!(out, "label_i\tlabel_j\tw\talpha_ij\talpha_ji\tkept")?;
    let fmt = |a: Option<f64>| a.map_or_else(String::new, |a| format!("{a:e}"));
    for v in verdicts {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            g.label(v.i),
            g.label(v.j),
            v.weight,
            fmt(v.alpha_ij),
            fmt(v.alpha_ji),
            v.kept
        )?;
    }
    out.flush()?;
    Ok(())
}
