//! Topological summary of a concept network.
//!
//! All metrics are unweighted. Undefined values (density of a graph with
//! fewer than two nodes, assortativity of a regular graph, ...) are `None`
//! and render as `—` in tables, `null` in JSON.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::graph::{NodeId, WeightedGraph};

pub const DEFAULT_PATH_SOURCES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PathMode {
    Exact,
    Sampled { sources: usize, seed: u64 },
}

impl Default for PathMode {
    fn default() -> Self {
        PathMode::Sampled {
            sources: DEFAULT_PATH_SOURCES,
            seed: 0,
        }
    }
}

/// How the path statistics were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PathEstimation {
    Exact,
    Sampled {
        sources: usize,
        seed: u64,
        /// Requested sources exceeded the component size.
        clamped: bool,
        /// `l_max` is the largest sampled eccentricity, a lower bound
        /// unless every node was a source.
        l_max_lower_bound: bool,
    },
}

/// Whether nodes with `k < 2` enter the mean clustering coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowDegreeClustering {
    #[default]
    Exclude,
    CountAsZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub mean_degree: Option<f64>,
    pub max_degree: usize,
    pub density: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub mean_shortest_path: Option<f64>,
    pub max_shortest_path: Option<u32>,
    pub component_size: usize,
    pub estimation: PathEstimation,
}

/// One row of the network-characteristics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n_nodes: usize,
    pub n_links: usize,
    pub density: Option<f64>,
    pub mean_degree: Option<f64>,
    pub max_degree: usize,
    pub mean_shortest_path: Option<f64>,
    pub max_shortest_path: Option<u32>,
    pub mean_clustering: Option<f64>,
    pub transitivity: Option<f64>,
    pub assortativity: Option<f64>,
    pub path_estimation: PathEstimation,
}

pub fn degree_stats(g: &WeightedGraph) -> DegreeStats {
    let n = g.node_count();
    let l = g.edge_count();
    let max_degree = (0..n as NodeId).map(|v| g.degree(v)).max().unwrap_or(0);
    DegreeStats {
        mean_degree: (n > 0).then(|| 2.0 * l as f64 / n as f64),
        max_degree,
        density: (n >= 2).then(|| 2.0 * l as f64 / (n as f64 * (n as f64 - 1.0))),
    }
}

/// Nodes of the largest connected component, sorted. Ties go to the
/// component containing the smallest node id.
pub fn largest_component(g: &WeightedGraph) -> Vec<NodeId> {
    let n = g.node_count();
    let mut comp = vec![u32::MAX; n];
    let mut best: Vec<NodeId> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != u32::MAX {
            continue;
        }
        let mut members = vec![start as NodeId];
        comp[start] = start as u32;
        queue.push_back(start as NodeId);
        while let Some(v) = queue.pop_front() {
            for &u in g.neighbors(v) {
                if comp[u as usize] == u32::MAX {
                    comp[u as usize] = start as u32;
                    members.push(u);
                    queue.push_back(u);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best
}

/// Breadth-first distances from `source`: (sum over reached nodes,
/// eccentricity).
fn bfs_from(g: &WeightedGraph, source: NodeId, dist: &mut [u32]) -> (u64, u32) {
    dist.fill(u32::MAX);
    let mut queue = VecDeque::new();
    dist[source as usize] = 0;
    queue.push_back(source);
    let (mut sum, mut ecc) = (0u64, 0u32);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize];
        sum += d as u64;
        ecc = ecc.max(d);
        for &u in g.neighbors(v) {
            if dist[u as usize] == u32::MAX {
                dist[u as usize] = d + 1;
                queue.push_back(u);
            }
        }
    }
    (sum, ecc)
}

/// Mean and maximum hop distance over ordered pairs of distinct nodes in
/// the largest connected component.
///
/// In sampled mode the mean is estimated from breadth-first traversals out
/// of `sources` distinct random component nodes. Distance sums are exact
/// integers, so the estimate with every node as a source is bit-identical
/// to exact mode.
pub fn shortest_paths(g: &WeightedGraph, mode: PathMode, exec: Exec) -> PathStats {
    let component = largest_component(g);
    let n = component.len();
    let (sources, estimation): (Vec<NodeId>, PathEstimation) = match mode {
        PathMode::Exact => (component.clone(), PathEstimation::Exact),
        PathMode::Sampled { sources, seed } => {
            let clamped = sources > n;
            if clamped {
                log::warn!("requested {sources} path sources, component has {n}; clamping");
            }
            let take = sources.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<NodeId> = rand::seq::index::sample(&mut rng, n, take)
                .into_iter()
                .map(|k| component[k])
                .collect();
            picked.sort_unstable();
            (
                picked,
                PathEstimation::Sampled {
                    sources: take,
                    seed,
                    clamped,
                    l_max_lower_bound: take < n,
                },
            )
        }
    };
    if n < 2 || sources.is_empty() {
        return PathStats {
            mean_shortest_path: None,
            max_shortest_path: None,
            component_size: n,
            estimation,
        };
    }
    let per_source = exec.map_range(sources.len(), |k| {
        let mut dist = vec![u32::MAX; g.node_count()];
        bfs_from(g, sources[k], &mut dist)
    });
    let total: u64 = per_source.iter().map(|&(s, _)| s).sum();
    let l_max = per_source.iter().map(|&(_, e)| e).max().unwrap_or(0);
    let pairs = sources.len() as f64 * (n as f64 - 1.0);
    PathStats {
        mean_shortest_path: Some(total as f64 / pairs),
        max_shortest_path: Some(l_max),
        component_size: n,
        estimation,
    }
}

/// Number of edges among the neighbours of each node.
pub fn local_triangles(g: &WeightedGraph, exec: Exec) -> Vec<u64> {
    exec.map_range(g.node_count(), |v| {
        let nv = g.neighbors(v as NodeId);
        let mut links = 0u64;
        for &u in nv {
            links += sorted_intersection_len(nv, g.neighbors(u)) as u64;
        }
        links / 2
    })
}

fn sorted_intersection_len(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn clustering_from_triangles(
    g: &WeightedGraph,
    triangles: &[u64],
    low_degree: LowDegreeClustering,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, &t) in triangles.iter().enumerate() {
        let k = g.degree(v as NodeId) as f64;
        if k >= 2.0 {
            sum += 2.0 * t as f64 / (k * (k - 1.0));
            count += 1;
        } else if low_degree == LowDegreeClustering::CountAsZero {
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

fn transitivity_from_triangles(g: &WeightedGraph, triangles: &[u64]) -> Option<f64> {
    let closed: u64 = triangles.iter().sum();
    let triplets: u64 = (0..g.node_count() as NodeId)
        .map(|v| {
            let k = g.degree(v) as u64;
            k * k.saturating_sub(1) / 2
        })
        .sum();
    // Σ_v t_v counts each triangle three times.
    (triplets > 0).then(|| closed as f64 / triplets as f64)
}

/// Average local clustering `c_i = 2 m_i / (k_i (k_i − 1))`.
pub fn mean_clustering(g: &WeightedGraph, low_degree: LowDegreeClustering, exec: Exec) -> Option<f64> {
    clustering_from_triangles(g, &local_triangles(g, exec), low_degree)
}

/// Global transitivity: 3 × triangles / connected triplets.
pub fn transitivity(g: &WeightedGraph, exec: Exec) -> Option<f64> {
    transitivity_from_triangles(g, &local_triangles(g, exec))
}

/// Degree assortativity: Pearson correlation of endpoint degrees over both
/// orientations of every edge.
pub fn assortativity(g: &WeightedGraph) -> Option<f64> {
    if g.edge_count() < 2 {
        return None;
    }
    // Integer moments keep numerator and denominator exact; with both
    // orientations present the x and y marginals coincide.
    let (mut m, mut sx, mut sxx, mut sxy) = (0i128, 0i128, 0i128, 0i128);
    for (i, j, _) in g.edges() {
        let (a, b) = (g.degree(i) as i128, g.degree(j) as i128);
        m += 2;
        sx += a + b;
        sxx += a * a + b * b;
        sxy += 2 * a * b;
    }
    let num = m * sxy - sx * sx;
    let den = m * sxx - sx * sx;
    (den != 0).then(|| (num as f64 / den as f64).clamp(-1.0, 1.0))
}

pub fn summarize(
    g: &WeightedGraph,
    path_mode: PathMode,
    low_degree: LowDegreeClustering,
    exec: Exec,
) -> GraphSummary {
    let deg = degree_stats(g);
    let paths = shortest_paths(g, path_mode, exec);
    let triangles = local_triangles(g, exec);
    GraphSummary {
        n_nodes: g.node_count(),
        n_links: g.edge_count(),
        density: deg.density,
        mean_degree: deg.mean_degree,
        max_degree: deg.max_degree,
        mean_shortest_path: paths.mean_shortest_path,
        max_shortest_path: paths.max_shortest_path,
        mean_clustering: clustering_from_triangles(g, &triangles, low_degree),
        transitivity: transitivity_from_triangles(g, &triangles),
        assortativity: assortativity(g),
        path_estimation: paths.estimation,
    }
}

/// Column headers of the characteristics table.
pub const TABLE_COLUMNS: [&str; 11] = [
    "network", "N", "L", "ρ, %", "⟨k⟩", "k_max", "l", "l_max", "⟨c⟩", "C", "r",
];

pub const UNDEFINED: &str = "—";

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| UNDEFINED.to_owned(), |x| format!("{x:.decimals$}"))
}

/// Renders named summaries as a Markdown table, one row per network.
pub fn render_table(rows: &[(String, GraphSummary)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", TABLE_COLUMNS.join(" | "));
    let _ = writeln!(out, "|:--|{}", "--:|".repeat(TABLE_COLUMNS.len() - 1));
    for (name, s) in rows {
        let cells = [
            name.clone(),
            s.n_nodes.to_string(),
            s.n_links.to_string(),
            fmt_opt(s.density.map(|d| d * 100.0), 2),
            fmt_opt(s.mean_degree, 2),
            s.max_degree.to_string(),
            fmt_opt(s.mean_shortest_path, 2),
            s.max_shortest_path
                .map_or_else(|| UNDEFINED.to_owned(), |x| x.to_string()),
            fmt_opt(s.mean_clustering, 2),
            fmt_opt(s.transitivity, 2),
            fmt_opt(s.assortativity, 3),
        ];
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}
