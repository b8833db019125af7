use std::collections::HashSet;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use innovnet_core::corpus::{Corpus, Normalization};
use innovnet_core::embed::EmbeddingTable;
use innovnet_core::filter::arc_alphas;
use innovnet_core::graph::{project_to_concepts, WeightedGraph};
use innovnet_core::innovate::{transition_report, Method, Thresholds};
use innovnet_core::metrics::{summarize, LowDegreeClustering, PathMode};
use innovnet_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn corpus(rng: &mut ChaCha8Rng, records: usize, vocab: usize) -> Corpus {
    let date = chrono::NaiveDate::from_ymd_opt(2013, 1, 1).unwrap();
    let mut b = Corpus::builder(Normalization::default());
    for k in 0..records {
        let size = rng.gen_range(2..12);
        let set: Vec<String> = (0..size).map(|_| format!("c{}", rng.gen_range(0..vocab))).collect();
        b.push(format!("m{k}"), date, &set).unwrap();
    }
    b.build()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, edges: usize) -> WeightedGraph {
    let labels: Vec<String> = (0..n).map(|i| format!("c{i:06}")).collect();
    let mut seen = HashSet::new();
    let mut list = Vec::with_capacity(edges);
    for i in 0..n {
        let j = (i + 1) % n;
        seen.insert((i.min(j), i.max(j)));
        list.push((i.min(j), i.max(j), rng.gen_range(1..30u64)));
    }
    while list.len() < edges {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            list.push((a.min(b), a.max(b), rng.gen_range(1..30u64)));
        }
    }
    WeightedGraph::from_labeled_edges(list.iter().map(|&(a, b, w)| (labels[a].as_str(), labels[b].as_str(), w)))
        .unwrap()
}

fn projection(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let corpus = corpus(&mut rng, 50_000, 5_000);
    let mut group = c.benchmark_group("project_to_concepts");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| project_to_concepts(&corpus, exec))
        });
    }
    group.finish();
}

fn disparity(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = random_graph(&mut rng, 50_000, 500_000);
    let mut group = c.benchmark_group("disparity_alphas");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| arc_alphas(&g, exec).unwrap()));
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_graph(&mut rng, 5_000, 40_000);
    let mode = PathMode::Sampled { sources: 200, seed: 0 };
    let mut group = c.benchmark_group("summarize");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| summarize(&g, mode, LowDegreeClustering::Exclude, exec))
        });
    }
    group.finish();
}

fn transitions(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ga = random_graph(&mut rng, 3_000, 20_000);
    let gb = random_graph(&mut rng, 3_000, 20_000);
    let d = 32;
    let data = (0..ga.node_count() * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let emb = EmbeddingTable::new(d, ga.labels().to_vec(), data).unwrap();
    let t = Thresholds { zeta: 0.2, ..Default::default() };
    let mut group = c.benchmark_group("transition_report");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| transition_report(&ga, &gb, &emb, Method::Disparity, Method::Disparity, &t, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, projection, disparity, metrics, transitions);
criterion_main!(benches);
