//! Emergence of strong links between two time slices.
//!
//! Every unordered node pair of the year-A graph is classified by its link
//! class in A (strong / weak-or-missing under a [`LinkRule`]) and by the
//! cosine similarity of its year-A embeddings (similar iff `s > ζ`). The
//! outcome is whether the same pair is strong in year B. Pairs touching a
//! concept absent from B are "not strong" in B.
//!
//! The pass streams all `N(N−1)/2` pairs without materialising them; each
//! worker owns a private counts tensor and tensors merge by integer
//! addition, so the result is independent of scheduling.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingTable, UnitVectors};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::filter::LinkRule;
use crate::graph::{NodeId, WeightedGraph};

/// Number of unordered pairs over `n` nodes.
pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Every unordered node pair `(i, j)`, `i < j`, in row-major order.
#[derive(Debug, Clone)]
pub struct PairUniverse {
    n: NodeId,
    i: NodeId,
    j: NodeId,
    remaining: u64,
}

pub fn pair_universe(g: &WeightedGraph) -> PairUniverse {
    PairUniverse::new(g.node_count())
}

impl PairUniverse {
    pub fn new(n: usize) -> Self {
        PairUniverse {
            n: n as NodeId,
            i: 0,
            j: 1,
            remaining: pair_count(n),
        }
    }
}

impl Iterator for PairUniverse {
    type Item = (NodeId, NodeId);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        if self.j >= self.n {
            self.i += 1;
            self.j = self.i + 1;
        }
        let pair = (self.i, self.j);
        self.j += 1;
        self.remaining -= 1;
        Some(pair)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

impl ExactSizeIterator for PairUniverse {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Weight,
    Disparity,
}

impl Method {
    pub fn rule(self, t: &Thresholds) -> LinkRule {
        match self {
            Method::Weight => LinkRule::Weight { omega: t.omega },
            Method::Disparity => LinkRule::Disparity { rho: t.rho_pvalue },
        }
    }

    /// Row labels for (weak, strong) link classes.
    pub fn row_labels(self) -> [&'static str; 2] {
        match self {
            Method::Weight => ["weak links", "strong links"],
            Method::Disparity => ["insignificant links", "significant links"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Weight => "weight",
            Method::Disparity => "disparity",
        }
    }
}

pub const COLUMN_LABELS: [&str; 2] = ["dissimilar concepts", "similar concepts"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub omega: u64,
    pub rho_pvalue: f64,
    pub zeta: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            omega: crate::filter::DEFAULT_OMEGA,
            rho_pvalue: crate::filter::DEFAULT_RHO,
            zeta: crate::embed::DEFAULT_ZETA,
        }
    }
}

/// Counts indexed `[link_class][similarity_class][outcome]`, each axis
/// `0 = weak / dissimilar / not strong`, `1 = strong / similar / strong`.
pub type CountsTensor = [[[u64; 2]; 2]; 2];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    counts: CountsTensor,
    unclassifiable: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for l in 0..2 {
            for s in 0..2 {
                for o in 0..2 {
                    self.counts[l][s][o] += other.counts[l][s][o];
                }
            }
        }
        self.unclassifiable += other.unclassifiable;
        self
    }
}

/// Strong partners `j > i` of row `i`, as year-A ids in ascending order.
fn strong_partners<'a>(
    g: &'a WeightedGraph,
    flags: &'a [bool],
    v: NodeId,
    to_a: impl Fn(NodeId) -> Option<NodeId> + 'a,
    above: NodeId,
) -> impl Iterator<Item = NodeId> + 'a {
    let base = g.row_offset(v);
    g.neighbors(v)
        .iter()
        .enumerate()
        .filter(move |&(k, _)| flags[base + k])
        .filter_map(move |(_, &u)| to_a(u))
        .filter(move |&a| a > above)
}

struct YearB<'a> {
    graph: &'a WeightedGraph,
    strong: Vec<bool>,
    /// Year-A id → year-B id.
    from_a: Vec<Option<NodeId>>,
    /// Year-B id → year-A id.
    to_a: Vec<Option<NodeId>>,
}

fn tally(
    ga: &WeightedGraph,
    strong_a: &[bool],
    emb: &EmbeddingTable,
    zeta: f64,
    year_b: Option<&YearB<'_>>,
    exec: Exec,
) -> Tally {
    let unit: UnitVectors = emb.unit_vectors();
    let rows: Vec<Option<usize>> = ga
        .labels()
        .iter()
        .map(|l| emb.row(l).filter(|&r| unit.is_valid(r)))
        .collect();
    let n = ga.node_count();
    exec.fold_range(
        n,
        Tally::default,
        |mut acc, i| {
            let i = i as NodeId;
            let mut a_strong = strong_partners(ga, strong_a, i, Some, i).peekable();
            // Labels sort identically in both graphs, so mapped B rows stay
            // in ascending A order.
            let mut b_strong = year_b
                .and_then(|b| b.from_a[i as usize].map(|bi| (b, bi)))
                .into_iter()
                .flat_map(|(b, bi)| {
                    strong_partners(b.graph, &b.strong, bi, |u| b.to_a[u as usize], i)
                })
                .peekable();
            let row_i = rows[i as usize];
            for j in i + 1..n as NodeId {
                let link = usize::from(a_strong.next_if_eq(&j).is_some());
                let outcome = usize::from(b_strong.next_if_eq(&j).is_some());
                match (row_i, rows[j as usize]) {
                    (Some(ri), Some(rj)) => {
                        let sim = usize::from(unit.cosine(ri, rj) > zeta);
                        acc.counts[link][sim][outcome] += 1;
                    }
                    _ => acc.unclassifiable += 1,
                }
            }
            acc
        },
        Tally::merge,
    )
}

fn check_zeta(zeta: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&zeta) {
        Ok(())
    } else {
        Err(Error::Config(format!("zeta must lie in [-1, 1], got {zeta}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub link_class: String,
    pub similarity_class: String,
    pub pairs: u64,
    pub became_strong: u64,
    /// Percentage rounded to two decimals; `None` for an empty cell.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub method: Method,
    /// Rule applied to year B.
    pub outcome_method: Method,
    pub thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub years: Option<(i32, i32)>,
    pub counts: CountsTensor,
    pub universe_size: u64,
    pub unclassifiable: u64,
    pub nodes_a: usize,
    pub nodes_b: usize,
    pub shared_nodes: usize,
    pub cells: Vec<CellSummary>,
}

impl TransitionReport {
    /// Builds a report from a counts tensor (cells are derived).
    pub fn from_counts(
        method: Method,
        outcome_method: Method,
        thresholds: Thresholds,
        counts: CountsTensor,
        unclassifiable: u64,
    ) -> Self {
        let universe_size = counts.iter().flatten().flatten().sum::<u64>() + unclassifiable;
        let mut report = TransitionReport {
            method,
            outcome_method,
            thresholds,
            years: None,
            counts,
            universe_size,
            unclassifiable,
            nodes_a: 0,
            nodes_b: 0,
            shared_nodes: 0,
            cells: Vec::new(),
        };
        let rows = method.row_labels();
        for (l, row) in rows.iter().enumerate() {
            for (s, col) in COLUMN_LABELS.iter().enumerate() {
                report.cells.push(CellSummary {
                    link_class: row.to_string(),
                    similarity_class: col.to_string(),
                    pairs: report.cell_total(l, s),
                    became_strong: counts[l][s][1],
                    percent: report.percentage(l, s).map(|p| (p * 100.0).round() / 100.0),
                });
            }
        }
        report
    }

    pub fn cell_total(&self, link: usize, sim: usize) -> u64 {
        self.counts[link][sim][0] + self.counts[link][sim][1]
    }

    /// `100 × P(strong in B | cell)`, full precision.
    pub fn percentage(&self, link: usize, sim: usize) -> Option<f64> {
        let total = self.cell_total(link, sim);
        (total > 0).then(|| 100.0 * self.counts[link][sim][1] as f64 / total as f64)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let rows = self.method.row_labels();
        if let Some((a, b)) = self.years {
            let _ = writeln!(
                out,
                "Percentage of concept pairs per link class and embedding similarity group in {a} that were strong in {b}.\n"
            );
        }
        let _ = writeln!(out, "| | {} | {} |", COLUMN_LABELS[0], COLUMN_LABELS[1]);
        let _ = writeln!(out, "|:--|--:|--:|");
        for (l, row) in rows.iter().enumerate() {
            let cells: Vec<String> = (0..2)
                .map(|s| {
                    self.percentage(l, s)
                        .map_or_else(|| crate::metrics::UNDEFINED.to_owned(), |p| format!("{p:.2}%"))
                })
                .collect();
            let _ = writeln!(out, "| {row} | {} | {} |", cells[0], cells[1]);
        }
        let _ = writeln!(out, "\nRaw counts (became strong / pairs):\n");
        let _ = writeln!(out, "| | {} | {} |", COLUMN_LABELS[0], COLUMN_LABELS[1]);
        let _ = writeln!(out, "|:--|--:|--:|");
        for (l, row) in rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {row} | {} / {} | {} / {} |",
                self.counts[l][0][1],
                self.cell_total(l, 0),
                self.counts[l][1][1],
                self.cell_total(l, 1)
            );
        }
        let _ = writeln!(
            out,
            "\nuniverse: {} pairs, unclassifiable: {}",
            self.universe_size, self.unclassifiable
        );
        out
    }
}

/// Runs the full pair classification.
///
/// `method` classifies year A; `outcome_method` classifies year B (equal to
/// `method` for the consistent reading).
pub fn transition_report(
    ga: &WeightedGraph,
    gb: &WeightedGraph,
    emb_a: &EmbeddingTable,
    method: Method,
    outcome_method: Method,
    thresholds: &Thresholds,
    exec: Exec,
) -> Result<TransitionReport> {
    check_zeta(thresholds.zeta)?;
    let strong_a = method.rule(thresholds).strong_arcs(ga, exec)?;
    let b = YearB {
        graph: gb,
        strong: outcome_method.rule(thresholds).strong_arcs(gb, exec)?,
        from_a: ga.labels().iter().map(|l| gb.node(l)).collect(),
        to_a: gb.labels().iter().map(|l| ga.node(l)).collect(),
    };
    let t = tally(ga, &strong_a, emb_a, thresholds.zeta, Some(&b), exec);
    let mut report = TransitionReport::from_counts(method, outcome_method, *thresholds, t.counts, t.unclassifiable);
    debug_assert_eq!(report.universe_size, pair_count(ga.node_count()));
    report.nodes_a = ga.node_count();
    report.nodes_b = gb.node_count();
    report.shared_nodes = b.from_a.iter().filter(|x| x.is_some()).count();
    if t.unclassifiable > 0 {
        log::warn!("{} pairs involve concepts without an embedding vector", t.unclassifiable);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enrichment {
    /// `(weak ∧ similar %) / (weak ∧ dissimilar %)`.
    pub lift: Option<f64>,
    /// Percentage of weak-or-missing year-A pairs strong in year B.
    pub headline_percent: Option<f64>,
    pub weak_pairs: u64,
    pub weak_became_strong: u64,
}

pub fn lift_from_percentages(weak_dissimilar: f64, weak_similar: f64) -> Option<f64> {
    (weak_dissimilar > 0.0).then(|| weak_similar / weak_dissimilar)
}

pub fn enrichment_stats(report: &TransitionReport) -> Enrichment {
    let lift = match (report.percentage(0, 0), report.percentage(0, 1)) {
        (Some(dis), Some(sim)) => lift_from_percentages(dis, sim),
        _ => None,
    };
    let weak_pairs = report.cell_total(0, 0) + report.cell_total(0, 1);
    let weak_became_strong = report.counts[0][0][1] + report.counts[0][1][1];
    Enrichment {
        lift,
        headline_percent: (weak_pairs > 0)
            .then(|| 100.0 * weak_became_strong as f64 / weak_pairs as f64),
        weak_pairs,
        weak_became_strong,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityAllocation {
    /// Share of weak-or-missing pairs in the similar group.
    pub weak_similar_fraction: Option<f64>,
    /// Share of strong pairs in the similar group.
    pub strong_similar_fraction: Option<f64>,
    pub weak_pairs: u64,
    pub weak_similar: u64,
    pub strong_pairs: u64,
    pub strong_similar: u64,
    pub unclassifiable: u64,
}

/// How year-A link classes split across the similarity groups.
pub fn similarity_allocation(
    ga: &WeightedGraph,
    emb_a: &EmbeddingTable,
    method: Method,
    thresholds: &Thresholds,
    exec: Exec,
) -> Result<SimilarityAllocation> {
    check_zeta(thresholds.zeta)?;
    let strong_a = method.rule(thresholds).strong_arcs(ga, exec)?;
    let t = tally(ga, &strong_a, emb_a, thresholds.zeta, None, exec);
    let c = &t.counts;
    let (weak_pairs, weak_similar) = (c[0][0][0] + c[0][1][0], c[0][1][0]);
    let (strong_pairs, strong_similar) = (c[1][0][0] + c[1][1][0], c[1][1][0]);
    let frac = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    Ok(SimilarityAllocation {
        weak_similar_fraction: frac(weak_similar, weak_pairs),
        strong_similar_fraction: frac(strong_similar, strong_pairs),
        weak_pairs,
        weak_similar,
        strong_pairs,
        strong_similar,
        unclassifiable: t.unclassifiable,
    })
}
