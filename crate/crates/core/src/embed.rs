//! Concept embeddings learned from the co-occurrence graph.
//!
//! Training optimises a logistic link-prediction objective on dot-product
//! scores: positive pairs are edges drawn proportionally to their weight,
//! negatives are nodes drawn from the degree^0.75 distribution, skipping
//! draws that hit the pair itself or a neighbour of the source. A single
//! vector table is used for both endpoints, so `v_i · v_j` is symmetric.
//!
//! Vectors are stored in a plain text format:
//!
//! ```text
//! dimension=<d> count=<V> version=1
//! label<TAB>f1<TAB>...<TAB>fd
//! ```
//!
//! Floats are written in shortest round-trip form. Files without the
//! `version` token (vectors produced elsewhere) are accepted on import.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, WeightedAliasIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{NodeId, WeightedGraph};

pub const DEFAULT_DIMENSION: usize = 100;
pub const DEFAULT_ZETA: f64 = 0.6;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dimension: usize,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    /// Initial rate, decayed linearly to `1e-4 ×` its value.
    pub learning_rate: f64,
    pub negative_power: f64,
    /// Positive samples per epoch; `None` means one per edge.
    pub samples_per_epoch: Option<usize>,
    pub seed: u64,
    /// Concurrent Hogwild workers; `1` is the reproducible mode, `0` uses
    /// every rayon thread.
    pub workers: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dimension: DEFAULT_DIMENSION,
            epochs: 10,
            negatives_per_positive: 5,
            learning_rate: 0.05,
            negative_power: 0.75,
            samples_per_epoch: None,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub learning_rate: f64,
    pub lr_schedule: String,
    pub negative_power: f64,
    pub samples_per_epoch: usize,
    pub seed: u64,
    pub workers: usize,
    /// Mean loss per positive sample (positive + its negatives), by epoch.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
}

/// Dense vector per labelled node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    labels: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    pub meta: Option<TrainingMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityGroup {
    Similar,
    Dissimilar,
}

impl SimilarityGroup {
    /// `Similar` iff `s > zeta` (strict).
    pub fn classify(similarity: f64, zeta: f64) -> Self {
        if similarity > zeta {
            SimilarityGroup::Similar
        } else {
            SimilarityGroup::Dissimilar
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityVerdict {
    pub i: usize,
    pub j: usize,
    pub similarity: f64,
    pub group: SimilarityGroup,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pair ({i}, {j}): {reason}")]
pub struct PairError {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

impl EmbeddingTable {
    pub fn new(dimension: usize, labels: Vec<String>, data: Vec<f64>) -> Result<Self> {
        if dimension == 0 || data.len() != dimension * labels.len() {
            return Err(Error::Contract(format!(
                "{} values for {} labels of dimension {dimension}",
                data.len(),
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (k, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), k).is_some() {
                return Err(Error::Contract(format!("duplicate label {l:?}")));
            }
        }
        Ok(EmbeddingTable {
            dimension,
            labels,
            index,
            data,
            meta: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.data[row * self.dimension..(row + 1) * self.dimension]
    }

    pub fn norm(&self, row: usize) -> f64 {
        self.vector(row).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `v_i · v_j / (‖v_i‖ ‖v_j‖)`, clamped to `[-1, 1]`.
    pub fn cosine_similarity(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.len() || j >= self.len() {
            return Err(Error::Contract(format!("row out of range: ({i}, {j})")));
        }
        let (a, b) = (self.vector(i), self.vector(j));
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let (na, nb) = (sq(a), sq(b));
        if na == 0.0 || nb == 0.0 {
            return Err(Error::Contract(format!("zero-norm vector in pair ({i}, {j})")));
        }
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        // sqrt of a product of squared norms: identical vectors give exactly 1.
        Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
    }

    /// Unit-normalised copy for bulk similarity work.
    pub fn unit_vectors(&self) -> UnitVectors {
        let mut data = self.data.clone();
        let mut valid = vec![true; self.len()];
        for (row, ok) in valid.iter_mut().enumerate() {
            let n = self.norm(row);
            let v = &mut data[row * self.dimension..(row + 1) * self.dimension];
            if n == 0.0 || !n.is_finite() {
                *ok = false;
            } else {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
        UnitVectors {
            dimension: self.dimension,
            data,
            valid,
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "dimension={} count={} version={FORMAT_VERSION}",
            self.dimension,
            self.len()
        )?;
        let mut line = String::new();
        for (row, label) in self.labels.iter().enumerate() {
            line.clear();
            line.push_str(label);
            for x in self.vector(row) {
                line.push('\t');
                line.push_str(&x.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: source.to_owned(),
            line,
            message,
        };
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty file".into()))??;
        let (mut dimension, mut count) = (None, None);
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(1, format!("bad header token {token:?}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| err(1, format!("bad header value {token:?}")))?;
            match key {
                "dimension" => dimension = Some(value),
                "count" => count = Some(value),
                "version" if value as u32 == FORMAT_VERSION => {}
                "version" => return Err(err(1, format!("unsupported format version {value}"))),
                _ => return Err(err(1, format!("unknown header key {key:?}"))),
            }
        }
        let (Some(dimension), Some(count)) = (dimension, count) else {
            return Err(err(1, "header needs dimension= and count=".into()));
        };
        let mut labels = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dimension);
        for (k, line) in lines.enumerate() {
            let line = line?;
            let lineno = k + 2;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let label = fields.next().unwrap_or_default();
            let before = data.len();
            for f in fields {
                let x: f64 = f
                    .parse()
                    .map_err(|_| err(lineno, format!("bad float {f:?}")))?;
                data.push(x);
            }
            if data.len() - before != dimension {
                return Err(err(
                    lineno,
                    format!("expected {dimension} values, found {}", data.len() - before),
                ));
            }
            labels.push(label.to_owned());
        }
        if labels.len() != count {
            return Err(err(1, format!("header count {count}, found {} rows", labels.len())));
        }
        Self::new(dimension, labels, data).map_err(|e| err(1, e.to_string()))
    }

    /// Per-pair similarity verdicts over a stream of row pairs. Pairs with
    /// unknown rows or zero-norm vectors yield an error item.
    pub fn classify_similarity<'a, I>(
        &'a self,
        pairs: I,
        zeta: f64,
    ) -> Result<impl Iterator<Item = Result<SimilarityVerdict, PairError>> + 'a>
    where
        I: IntoIterator<Item = (usize, usize)> + 'a,
    {
        if !(-1.0..=1.0).contains(&zeta) {
            return Err(Error::Config(format!("zeta must lie in [-1, 1], got {zeta}")));
        }
        Ok(pairs.into_iter().map(move |(i, j)| {
            let similarity = self.cosine_similarity(i, j).map_err(|e| PairError {
                i,
                j,
                reason: e.to_string(),
            })?;
            Ok(SimilarityVerdict {
                i,
                j,
                similarity,
                group: SimilarityGroup::classify(similarity, zeta),
                zeta,
            })
        }))
    }
}

/// Unit vectors with a validity flag per row (zero-norm rows are invalid).
#[derive(Debug, Clone)]
pub struct UnitVectors {
    dimension: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
}

impl UnitVectors {
    pub fn is_valid(&self, row: usize) -> bool {
        self.valid[row]
    }

    #[inline]
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        let d = self.dimension;
        let (a, b) = (&self.data[i * d..(i + 1) * d], &self.data[j * d..(j + 1) * d]);
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss of one scored pair: `−log σ(u·v)` for a positive pair,
/// `−log σ(−u·v)` for a negative one.
pub fn pair_loss(u: &[f64], v: &[f64], positive: bool) -> f64 {
    let score: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    if positive {
        softplus(-score)
    } else {
        softplus(score)
    }
}

/// Analytic gradient of [`pair_loss`] with respect to `u` and `v`.
pub fn pair_loss_grad(u: &[f64], v: &[f64], positive: bool) -> (Vec<f64>, Vec<f64>) {
    let score: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let g = sigmoid(score) - if positive { 1.0 } else { 0.0 };
    (
        v.iter().map(|x| g * x).collect(),
        u.iter().map(|x| g * x).collect(),
    )
}

/// Shared parameter storage for lock-free updates. Reads and writes are
/// relaxed per-coordinate; concurrent workers may interleave (Hogwild).
struct SharedTable {
    dimension: usize,
    cells: Vec<AtomicU64>,
}

impl SharedTable {
    fn load(&self, row: usize, out: &mut [f64]) {
        let cells = &self.cells[row * self.dimension..(row + 1) * self.dimension];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }

    fn add(&self, row: usize, delta: &[f64]) {
        let cells = &self.cells[row * self.dimension..(row + 1) * self.dimension];
        for (d, c) in delta.iter().zip(cells) {
            let x = f64::from_bits(c.load(Ordering::Relaxed)) + d;
            c.store(x.to_bits(), Ordering::Relaxed);
        }
    }
}

struct Sampler<'g> {
    graph: &'g WeightedGraph,
    edges: Vec<(NodeId, NodeId)>,
    positive: WeightedAliasIndex<f64>,
    negative: WeightedAliasIndex<f64>,
}

/// Runs `steps` positive samples starting at global step `first_step` and
/// returns the summed loss.
#[allow(clippy::too_many_arguments)]
fn run_worker(
    table: &SharedTable,
    sampler: &Sampler,
    config: &EmbeddingConfig,
    rng: &mut ChaCha8Rng,
    first_step: usize,
    steps: usize,
    total_steps: usize,
) -> f64 {
    let d = table.dimension;
    let (mut u, mut v, mut grad_u, mut delta_v) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut loss = 0.0;
    for s in 0..steps {
        let progress = (first_step + s) as f64 / total_steps as f64;
        let lr = config.learning_rate * (1.0 - progress).max(1e-4);
        let (mut a, mut b) = sampler.edges[sampler.positive.sample(rng)];
        if rng.gen::<bool>() {
            std::mem::swap(&mut a, &mut b);
        }
        table.load(a as usize, &mut u);
        grad_u.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..=config.negatives_per_positive {
            let (target, label) = if k == 0 {
                (b, 1.0)
            } else {
                let t = sampler.negative.sample(rng) as NodeId;
                if t == a || t == b || sampler.graph.arc(a, t).is_some() {
                    continue;
                }
                (t, 0.0)
            };
            table.load(target as usize, &mut v);
            let score: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
            loss += if label > 0.0 { softplus(-score) } else { softplus(score) };
            let g = sigmoid(score) - label;
            for c in 0..d {
                grad_u[c] += g * v[c];
                delta_v[c] = -lr * g * u[c];
            }
            table.add(target as usize, &delta_v);
        }
        grad_u.iter_mut().for_each(|x| *x *= -lr);
        table.add(a as usize, &grad_u);
    }
    loss
}

/// Trains one vector per node of `g`. Rows follow the graph's node ids.
pub fn train_embeddings(g: &WeightedGraph, config: &EmbeddingConfig, exec: Exec) -> Result<EmbeddingTable> {
    if config.dimension < 2 {
        return Err(Error::Config(format!("dimension must be >= 2, got {}", config.dimension)));
    }
    if g.node_count() < 2 || g.edge_count() == 0 {
        return Err(Error::Contract("training needs at least two nodes and one edge".into()));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {}", config.learning_rate)));
    }
    let d = config.dimension;
    let n = g.node_count();
    let edges: Vec<(NodeId, NodeId)> = g.edges().map(|(i, j, _)| (i, j)).collect();
    let weights: Vec<f64> = g.edges().map(|(_, _, w)| w as f64).collect();
    let neg: Vec<f64> = (0..n as NodeId)
        .map(|v| (g.degree(v) as f64).powf(config.negative_power))
        .collect();
    let sampler = Sampler {
        graph: g,
        positive: WeightedAliasIndex::new(weights).map_err(|e| Error::Contract(e.to_string()))?,
        negative: WeightedAliasIndex::new(neg).map_err(|e| Error::Contract(e.to_string()))?,
        edges,
    };

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scale = 0.5 / d as f64;
    let table = SharedTable {
        dimension: d,
        cells: (0..n * d)
            .map(|_| {
                let x: f64 = init_rng.gen_range(-scale..scale);
                AtomicU64::new(x.to_bits())
            })
            .collect(),
    };

    let workers = effective_workers(config.workers, exec);
    let per_epoch = config.samples_per_epoch.unwrap_or(g.edge_count()).max(1);
    let total_steps = per_epoch * config.epochs.max(1);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let chunk = per_epoch.div_ceil(workers);
        let stream_base = (epoch * workers) as u64;
        let job = |w: usize| {
            let start = (w * chunk).min(per_epoch);
            let steps = chunk.min(per_epoch - start);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream_base + w as u64 + 1);
            run_worker(&table, &sampler, config, &mut rng, epoch * per_epoch + start, steps, total_steps)
        };
        let losses: Vec<f64> = if workers > 1 {
            exec.map_range(workers, job)
        } else {
            vec![job(0)]
        };
        let loss = losses.iter().sum::<f64>() / per_epoch as f64;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        log::debug!("epoch {epoch}: loss {loss:.6}");
        history.push(loss);
    }

    let data: Vec<f64> = table
        .cells
        .into_iter()
        .map(|c| f64::from_bits(c.into_inner()))
        .collect();
    let mut out = EmbeddingTable::new(d, g.labels().to_vec(), data)?;
    if let Some(row) = (0..n).find(|&r| out.norm(r) == 0.0 || !out.norm(r).is_finite()) {
        return Err(Error::Contract(format!(
            "vector for {:?} degenerated after training",
            out.labels()[row]
        )));
    }
    out.meta = Some(TrainingMeta {
        epochs: config.epochs,
        negatives_per_positive: config.negatives_per_positive,
        learning_rate: config.learning_rate,
        lr_schedule: "linear".into(),
        negative_power: config.negative_power,
        samples_per_epoch: per_epoch,
        seed: config.seed,
        workers,
        final_loss: history.last().copied().unwrap_or(f64::NAN),
        loss_history: history,
    });
    Ok(out)
}

fn effective_workers(requested: usize, exec: Exec) -> usize {
    if !exec.is_parallel() {
        return 1;
    }
    match requested {
        0 => {
            #[cfg(feature = "parallel")]
            {
                rayon::current_num_threads().max(1)
            }
            #[cfg(not(feature = "parallel"))]
            {
                1
            }
        }
        w => w,
    }
}
