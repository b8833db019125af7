//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the algorithms under test: graphs are read back
//! through their public edge iterators only, and every metric is recomputed
//! from a dense adjacency matrix or an explicit edge map.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use chrono::NaiveDate;
use innovnet_core::corpus::{Corpus, Normalization};
use innovnet_core::embed::EmbeddingTable;
use innovnet_core::graph::WeightedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type EdgeMap = BTreeMap<(String, String), u64>;

pub fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

pub fn edge_map(g: &WeightedGraph) -> EdgeMap {
    g.edges()
        .map(|(i, j, w)| (key(g.label(i), g.label(j)), w))
        .collect()
}

pub fn graph_from_map(m: &EdgeMap) -> WeightedGraph {
    WeightedGraph::from_labeled_edges(m.iter().map(|((a, b), &w)| (a.as_str(), b.as_str(), w)))
        .unwrap()
}

// ---------------------------------------------------------------- quadrature

/// Adaptive Simpson integration of `f` over `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

/// `α = 1 − (k − 1) ∫₀^p (1 − x)^{k − 2} dx` by quadrature.
pub fn alpha_by_quadrature(k: usize, p: f64) -> f64 {
    if k == 1 {
        return 1.0;
    }
    let km1 = (k - 1) as f64;
    let density = |x: f64| km1 * (1.0 - x).powf(km1 - 1.0);
    // The density is sharply peaked at 0 for large k; split the range at a
    // few multiples of its scale so the adaptive rule sees the peak.
    let scale = 1.0 / km1;
    let mut cuts = vec![0.0];
    for m in [1.0, 4.0, 16.0, 64.0] {
        let c = m * scale;
        if c < p {
            cuts.push(c);
        }
    }
    cuts.push(p);
    let integral: f64 = cuts
        .windows(2)
        .map(|w| adaptive_simpson(&density, w[0], w[1], 1e-13))
        .sum();
    1.0 - integral
}

// ---------------------------------------------------------------- corpora

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn corpus_from_sets(sets: &[Vec<String>], year: i32) -> Corpus {
    let mut b = Corpus::builder(Normalization::default());
    for (k, s) in sets.iter().enumerate() {
        b.push(format!("m{k}"), date(year, 1, 1), s).unwrap();
    }
    b.build()
}

/// Random corpus: up to `max_records` manuscripts, each with up to
/// `max_concepts` labels drawn from a vocabulary of `vocab` labels.
pub fn random_sets(rng: &mut ChaCha8Rng, max_records: usize, max_concepts: usize, vocab: usize) -> Vec<Vec<String>> {
    let n = rng.gen_range(1..=max_records);
    (0..n)
        .map(|_| {
            let m = rng.gen_range(0..=max_concepts);
            (0..m).map(|_| format!("c{}", rng.gen_range(0..vocab))).collect()
        })
        .collect()
}

/// Co-occurrence weights by enumerating every label pair of every manuscript.
pub fn brute_concept_projection(sets: &[Vec<String>]) -> EdgeMap {
    let mut out = EdgeMap::new();
    for s in sets {
        let uniq: BTreeSet<&String> = s.iter().collect();
        let v: Vec<&String> = uniq.into_iter().collect();
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                *out.entry(key(v[a], v[b])).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Shared-concept counts by intersecting every pair of manuscripts.
pub fn brute_manuscript_projection(sets: &[Vec<String>]) -> EdgeMap {
    let uniq: Vec<BTreeSet<&String>> = sets.iter().map(|s| s.iter().collect()).collect();
    let mut out = EdgeMap::new();
    for a in 0..uniq.len() {
        for b in a + 1..uniq.len() {
            let shared = uniq[a].intersection(&uniq[b]).count() as u64;
            if shared > 0 {
                out.insert(key(&format!("m{a}"), &format!("m{b}")), shared);
            }
        }
    }
    out
}

/// Same counts as a dense `n × n` matrix over record indices, intersecting
/// bitsets of label ids. Cheaper to compare on large corpora.
pub fn brute_manuscript_matrix(sets: &[Vec<String>]) -> Vec<Vec<u64>> {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    for s in sets {
        for c in s {
            let next = ids.len();
            ids.entry(c.as_str()).or_insert(next);
        }
    }
    let words = ids.len().div_ceil(64);
    let bits: Vec<Vec<u64>> = sets
        .iter()
        .map(|s| {
            let mut b = vec![0u64; words];
            for c in s {
                let i = ids[c.as_str()];
                b[i / 64] |= 1 << (i % 64);
            }
            b
        })
        .collect();
    let n = sets.len();
    let mut out = vec![vec![0u64; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let shared: u32 = bits[a].iter().zip(&bits[b]).map(|(x, y)| (x & y).count_ones()).sum();
            out[a][b] = shared as u64;
            out[b][a] = shared as u64;
        }
    }
    out
}

// ---------------------------------------------------------------- graphs

/// G(n, p) with integer weights uniform in `1..=max_w`; labels `v000`...
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, max_w: u64) -> EdgeMap {
    let mut m = EdgeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                m.insert(key(&format!("v{i:04}"), &format!("v{j:04}")), rng.gen_range(1..=max_w));
            }
        }
    }
    m
}

/// Dense view of an edge map over its own label set.
pub struct Dense {
    pub labels: Vec<String>,
    pub adj: Vec<Vec<bool>>,
}

impl Dense {
    pub fn new(m: &EdgeMap) -> Self {
        let labels: Vec<String> = m
            .keys()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let idx: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let n = labels.len();
        let mut adj = vec![vec![false; n]; n];
        for (a, b) in m.keys() {
            let (i, j) = (idx[a.as_str()], idx[b.as_str()]);
            adj[i][j] = true;
            adj[j][i] = true;
        }
        Dense { labels, adj }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&x| x).count()
    }

    pub fn edges(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).sum::<usize>() / 2
    }
}

pub struct OracleMetrics {
    pub density: Option<f64>,
    pub mean_degree: Option<f64>,
    pub max_degree: usize,
    pub l: Option<f64>,
    pub l_max: Option<u32>,
    pub mean_clustering: Option<f64>,
    pub transitivity: Option<f64>,
    pub assortativity: Option<f64>,
}

/// All metrics from a dense adjacency matrix: triangle counts by triple
/// loop, distances by Floyd–Warshall, assortativity by the pairwise
/// difference form of the covariance.
pub fn oracle_metrics(m: &EdgeMap) -> OracleMetrics {
    let d = Dense::new(m);
    let n = d.n();
    let l = d.edges();
    let degrees: Vec<usize> = (0..n).map(|v| d.degree(v)).collect();

    // clustering: per node, count linked neighbour pairs
    let mut c_sum = 0.0;
    let mut c_cnt = 0usize;
    for v in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&u| d.adj[v][u]).collect();
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        for a in 0..k {
            for b in a + 1..k {
                if d.adj[nb[a]][nb[b]] {
                    links += 1;
                }
            }
        }
        c_sum += 2.0 * links as f64 / (k as f64 * (k as f64 - 1.0));
        c_cnt += 1;
    }

    // transitivity: brute-force triangles and triplets
    let mut triangles = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            if !d.adj[a][b] {
                continue;
            }
            for c in b + 1..n {
                if d.adj[a][c] && d.adj[b][c] {
                    triangles += 1;
                }
            }
        }
    }
    let triplets: u64 = degrees.iter().map(|&k| (k * k.saturating_sub(1) / 2) as u64).sum();

    // distances: Floyd–Warshall, then the largest component by union of
    // reachability (smallest index wins ties)
    const INF: u32 = u32::MAX / 4;
    let mut dist = vec![vec![INF; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
        for (j, cell) in row.iter_mut().enumerate() {
            if d.adj[i][j] {
                *cell = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if dist[i][k] == INF {
                continue;
            }
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    let mut best: Vec<usize> = Vec::new();
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&t| dist[s][t] < INF).collect();
        comp.iter().for_each(|&t| seen[t] = true);
        if comp.len() > best.len() {
            best = comp;
        }
    }
    let (mut dsum, mut dmax) = (0u64, 0u32);
    for &a in &best {
        for &b in &best {
            if a != b {
                dsum += dist[a][b] as u64;
                dmax = dmax.max(dist[a][b]);
            }
        }
    }
    let nc = best.len();

    // assortativity: cov ∝ Σ_{a<b} (x_a − x_b)(y_a − y_b)
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if d.adj[i][j] {
                xs.push(degrees[i] as i128);
                ys.push(degrees[j] as i128);
            }
        }
    }
    let (mut cov, mut vx, mut vy) = (0i128, 0i128, 0i128);
    for a in 0..xs.len() {
        for b in a + 1..xs.len() {
            let (dx, dy) = (xs[a] - xs[b], ys[a] - ys[b]);
            cov += dx * dy;
            vx += dx * dx;
            vy += dy * dy;
        }
    }
    let assortativity = if l >= 2 && vx > 0 && vy > 0 {
        Some(cov as f64 / ((vx as f64).sqrt() * (vy as f64).sqrt()))
    } else {
        None
    };

    OracleMetrics {
        density: (n >= 2).then(|| 2.0 * l as f64 / (n as f64 * (n as f64 - 1.0))),
        mean_degree: (n > 0).then(|| degrees.iter().sum::<usize>() as f64 / n as f64),
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        l: (nc >= 2).then(|| dsum as f64 / (nc as f64 * (nc as f64 - 1.0))),
        l_max: (nc >= 2).then_some(dmax),
        mean_clustering: (c_cnt > 0).then(|| c_sum / c_cnt as f64),
        transitivity: (triplets > 0).then(|| 3.0 * triangles as f64 / triplets as f64),
        assortativity,
    }
}

/// Relative comparison with matching undefined markers.
pub fn close(a: Option<f64>, b: Option<f64>, rel: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x == y || (x - y).abs() <= rel * x.abs().max(y.abs()),
        _ => false,
    }
}

/// Breadth-first all-pairs distances from an adjacency list (used for
/// small graphs where Floyd–Warshall would be overkill).
pub fn bfs_all_pairs(adj: &[Vec<usize>]) -> Vec<Vec<Option<u32>>> {
    let n = adj.len();
    (0..n)
        .map(|s| {
            let mut d = vec![None; n];
            d[s] = Some(0);
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &u in &adj[v] {
                    if d[u].is_none() {
                        d[u] = Some(d[v].unwrap() + 1);
                        q.push_back(u);
                    }
                }
            }
            d
        })
        .collect()
}

// ---------------------------------------------------------------- filters

/// Strong edges under `w > omega`.
pub fn oracle_weight_strong(m: &EdgeMap, omega: u64) -> BTreeSet<(String, String)> {
    m.iter().filter(|(_, &w)| w > omega).map(|(k, _)| k.clone()).collect()
}

/// Strong edges under the disparity rule, recomputing degree, strength and
/// `α = (1 − p)^{k − 1}` from the edge map for every edge.
pub fn oracle_disparity_strong(m: &EdgeMap, rho: f64) -> BTreeSet<(String, String)> {
    let mut k: HashMap<&str, usize> = HashMap::new();
    let mut s: HashMap<&str, u64> = HashMap::new();
    for ((a, b), &w) in m {
        for x in [a.as_str(), b.as_str()] {
            *k.entry(x).or_insert(0) += 1;
            *s.entry(x).or_insert(0) += w;
        }
    }
    let alpha = |node: &str, w: u64| -> f64 {
        let kk = k[node];
        if kk == 1 {
            return 1.0;
        }
        let p = w as f64 / s[node] as f64;
        (1.0 - p).powf((kk - 1) as f64)
    };
    m.iter()
        .filter(|((a, b), &w)| alpha(a, w) < rho || alpha(b, w) < rho)
        .map(|(k, _)| k.clone())
        .collect()
}

/// Edge map restricted to `keep`, i.e. the expected filter output.
pub fn restrict(m: &EdgeMap, keep: &BTreeSet<(String, String)>) -> EdgeMap {
    m.iter()
        .filter(|(k, _)| keep.contains(*k))
        .map(|(k, &w)| (k.clone(), w))
        .collect()
}

// ---------------------------------------------------------------- innovation

/// Expected counts tensor `[link][sim][outcome]` plus unclassifiable count,
/// by enumerating every label pair of the year-A node set.
pub fn oracle_transition(
    nodes_a: &[String],
    strong_a: &BTreeSet<(String, String)>,
    strong_b: &BTreeSet<(String, String)>,
    emb: &EmbeddingTable,
    zeta: f64,
) -> ([[[u64; 2]; 2]; 2], u64) {
    let mut counts = [[[0u64; 2]; 2]; 2];
    let mut unclassifiable = 0;
    for a in 0..nodes_a.len() {
        for b in a + 1..nodes_a.len() {
            let k = key(&nodes_a[a], &nodes_a[b]);
            let link = strong_a.contains(&k) as usize;
            let outcome = strong_b.contains(&k) as usize;
            match (emb.row(&nodes_a[a]), emb.row(&nodes_a[b])) {
                (Some(ra), Some(rb)) => {
                    let s = emb.cosine_similarity(ra, rb).unwrap();
                    counts[link][(s > zeta) as usize][outcome] += 1;
                }
                _ => unclassifiable += 1,
            }
        }
    }
    (counts, unclassifiable)
}

/// Two concept communities. Year A: manuscripts within one community plus
/// occasional bridges. Year B: same background, plus heavy extra activity
/// inside community 1 only, so new strong links appear there.
pub fn planted_corpus(seed: u64, per_community: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Corpus::builder(Normalization::default());
    let pick = |rng: &mut ChaCha8Rng, community: usize, size: usize| -> Vec<String> {
        (0..size)
            .map(|_| format!("k{community}-{:03}", rng.gen_range(0..per_community)))
            .collect()
    };
    let mut id = 0;
    for year in [2013, 2015] {
        let background = 60 * per_community;
        for _ in 0..background {
            let community = rng.gen_range(0..2);
            let size = rng.gen_range(2..=5);
            let mut set = pick(&mut rng, community, size);
            if rng.gen_bool(0.03) {
                set.extend(pick(&mut rng, 1 - community, 1));
            }
            b.push(format!("p{id}"), date(year, rng.gen_range(1..=12), 1), &set).unwrap();
            id += 1;
        }
        if year == 2015 {
            for _ in 0..background {
                let size = rng.gen_range(3..=6);
                let set = pick(&mut rng, 0, size);
                b.push(format!("p{id}"), date(year, 6, 1), &set).unwrap();
                id += 1;
            }
            for k in 0..5 {
                let set = [format!("k0-{k:03}"), format!("k1-{k:03}")];
                for _ in 0..12 {
                    b.push(format!("p{id}"), date(year, 9, 1), &set).unwrap();
                    id += 1;
                }
            }
        }
    }
    b.build()
}
