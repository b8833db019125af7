use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use innovnet_core::corpus::{ingest_corpus, Normalization};
use innovnet_core::embed::{train_embeddings, EmbeddingTable};
use innovnet_core::filter::{disparity_verdicts, weight_verdicts, write_verdicts, RetentionStats};
use innovnet_core::graph::project_to_concepts;
use innovnet_core::innovate::{
    enrichment_stats, similarity_allocation, transition_report, Enrichment, Method, SimilarityAllocation,
    TransitionReport,
};
use innovnet_core::metrics::{render_table, summarize, GraphSummary};
use innovnet_core::Exec;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::io::{self, read_graph, write_graph, write_json, write_text};
use crate::manifest::{checksum_tree, Manifest, MANIFEST_FILE};
use crate::{PipelineError, Result, Stage};

const RUN_INGEST: &str = "run `innovnet ingest` first";
const RUN_BUILD: &str = "run `innovnet build` first";
const RUN_FILTER: &str = "run `innovnet filter` with the same --method first";
const RUN_EMBED: &str = "run `innovnet embed` first, or pass --embedding-import FILE";

fn prefix(method: Method) -> &'static str {
    match method {
        Method::Weight => "w",
        Method::Disparity => "d",
    }
}

fn years(cfg: &PipelineConfig) -> [i32; 2] {
    [cfg.years.0, cfg.years.1]
}

/// Runs `f` inside a pool bounded by the configured worker count.
fn with_workers<T: Send>(cfg: &PipelineConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    #[cfg(feature = "parallel")]
    if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))?;
        return pool.install(f);
    }
    let _ = cfg;
    f()
}

/// Validates `cfg`, writes the effective configuration and runs one stage.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    write_json(&cfg.output_dir.join("config.effective.json"), cfg)?;
    execute(stage, cfg)
}

fn execute(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    log::info!("stage {stage}");
    with_workers(cfg, || match stage {
        Stage::Ingest => ingest(cfg),
        Stage::Build => build(cfg),
        Stage::Filter => filter(cfg),
        Stage::Stats => stats(cfg),
        Stage::Embed => embed(cfg),
        Stage::Innovate => innovate(cfg),
    })
}

/// Runs every stage in order and writes `manifest.json`, also on failure.
pub fn run_all(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    write_json(&cfg.output_dir.join("config.effective.json"), cfg)?;
    let mut manifest = Manifest {
        stages_completed: Vec::new(),
        failed_stage: None,
        error: None,
        files: Default::default(),
    };
    let mut failure = None;
    for stage in Stage::ALL {
        match execute(stage, cfg) {
            Ok(()) => manifest.stages_completed.push(stage.name().to_string()),
            Err(e) => {
                manifest.failed_stage = Some(stage.name().to_string());
                manifest.error = Some(e.to_string());
                failure = Some(e);
                break;
            }
        }
    }
    manifest.files = checksum_tree(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join(MANIFEST_FILE), &manifest)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

fn ingest(cfg: &PipelineConfig) -> Result<()> {
    let path = cfg
        .corpus_path
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no corpus given; pass --corpus PATH".into()))?;
    let norm = match &cfg.stop_list {
        Some(p) => Normalization::with_stop_list_file(p)?,
        None => Normalization::default(),
    };
    let corpus = ingest_corpus(path, norm)?;
    log::info!(
        "ingested {} records, {} rejected",
        corpus.len(),
        corpus.provenance().rejected_total()
    );
    write_json(&cfg.output_dir.join("corpus.summary.json"), &corpus.summary())?;
    for year in years(cfg) {
        let slice = corpus.slice_by_year(year)?;
        if slice.is_empty() {
            log::warn!("no records dated {year}");
        }
        let dir = cfg.year_dir(year);
        let mut out = io::create(&dir.join("corpus.jsonl"))?;
        slice.write_jsonl(&mut out)?;
        write_json(&dir.join("corpus.summary.json"), &slice.summary())?;
    }
    Ok(())
}

fn build(cfg: &PipelineConfig) -> Result<()> {
    for year in years(cfg) {
        let dir = cfg.year_dir(year);
        let cache = dir.join("corpus.jsonl");
        if !cache.exists() {
            return Err(PipelineError::MissingInput {
                path: cache,
                hint: RUN_INGEST.into(),
            });
        }
        let corpus = ingest_corpus(&cache, Normalization::default())?;
        let g = project_to_concepts(&corpus, Exec::default());
        if g.is_empty() {
            log::warn!("{year}: empty concept graph");
        }
        log::info!("{year}: {} nodes, {} edges", g.node_count(), g.edge_count());
        write_graph(&dir.join("g.edges.tsv"), &g)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FilterReport {
    omega: u64,
    rho_pvalue: f64,
    results: Vec<RetentionStats>,
}

fn filter(cfg: &PipelineConfig) -> Result<()> {
    let exec = Exec::default();
    let t = cfg.thresholds();
    for year in years(cfg) {
        let dir = cfg.year_dir(year);
        let g = read_graph(&dir.join("g.edges.tsv"), RUN_BUILD)?;
        let mut results = Vec::new();
        for method in cfg.method.methods() {
            let outcome = method.rule(&t).apply(&g, exec)?;
            log::info!(
                "{year} {}: kept {} of {} edges",
                method.name(),
                outcome.retained_edges,
                outcome.input_edges
            );
            write_graph(&dir.join(format!("{}.edges.tsv", prefix(method))), &outcome.graph)?;
            if cfg.dump_verdicts {
                let verdicts = match method {
                    Method::Weight => weight_verdicts(&g, t.omega),
                    Method::Disparity => disparity_verdicts(&g, t.rho_pvalue, exec)?,
                };
                let mut out = io::create(&dir.join(format!("{}.verdicts.tsv", prefix(method))))?;
                write_verdicts(&g, &verdicts, &mut out)?;
            }
            results.push(outcome.stats());
        }
        let report = FilterReport {
            omega: t.omega,
            rho_pvalue: t.rho_pvalue,
            results,
        };
        write_json(&dir.join("filter.json"), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsRow<'a> {
    network: &'a str,
    #[serde(flatten)]
    summary: &'a GraphSummary,
}

fn stats(cfg: &PipelineConfig) -> Result<()> {
    let mut all = Vec::new();
    for year in years(cfg) {
        let dir = cfg.year_dir(year);
        let mut rows = Vec::new();
        let mut inputs = vec![("g", RUN_BUILD)];
        inputs.extend(cfg.method.methods().into_iter().map(|m| (prefix(m), RUN_FILTER)));
        for (p, hint) in inputs {
            let g = read_graph(&dir.join(format!("{p}.edges.tsv")), hint)?;
            let summary = summarize(&g, cfg.path_mode(), cfg.low_degree_clustering, Exec::default());
            rows.push((format!("{p}-{year}"), summary));
        }
        let json: Vec<StatsRow> = rows
            .iter()
            .map(|(n, s)| StatsRow { network: n, summary: s })
            .collect();
        write_json(&dir.join("stats.json"), &json)?;
        write_text(&dir.join("stats.md"), &render_table(&rows))?;
        all.extend(rows);
    }
    write_text(&cfg.output_dir.join("stats.md"), &render_table(&all))?;
    Ok(())
}

fn read_embedding(path: &Path, hint: &str) -> Result<EmbeddingTable> {
    let reader = io::open(path, hint)?;
    Ok(EmbeddingTable::read(reader, &path.display().to_string())?)
}

fn embed(cfg: &PipelineConfig) -> Result<()> {
    let year = cfg.years.0;
    let out = cfg.embedding_path();
    let meta_path = out.with_extension("meta.json");
    if let Some(src) = &cfg.embedding.import {
        let table = read_embedding(src, "check --embedding-import")?;
        if table.dimension() != cfg.embedding.dimension {
            return Err(PipelineError::Config(format!(
                "{} has dimension {}, configured dimension is {}",
                src.display(),
                table.dimension(),
                cfg.embedding.dimension
            )));
        }
        let g = read_graph(&cfg.year_dir(year).join("g.edges.tsv"), RUN_BUILD)?;
        let missing = g.labels().iter().filter(|l| table.row(l).is_none()).count();
        if missing > 0 {
            log::warn!("{missing} concepts of {year} have no imported vector");
        }
        let mut w = io::create(&out)?;
        table.write(&mut w)?;
        write_json(&meta_path, &serde_json::json!({ "imported": true, "vectors": table.len() }))?;
        return Ok(());
    }
    let g = read_graph(&cfg.year_dir(year).join("g.edges.tsv"), RUN_BUILD)?;
    let exec = if cfg.deterministic { Exec::Sequential } else { Exec::default() };
    let table = train_embeddings(&g, &cfg.embedding_config(), exec)?;
    let mut w = io::create(&out)?;
    table.write(&mut w)?;
    write_json(&meta_path, &table.meta)?;
    Ok(())
}

#[derive(Serialize)]
struct InnovationReport<'a> {
    report: &'a TransitionReport,
    enrichment: Enrichment,
    allocation: SimilarityAllocation,
}

fn fmt_opt(v: Option<f64>, suffix: &str) -> String {
    v.map_or_else(|| innovnet_core::metrics::UNDEFINED.to_owned(), |x| format!("{x:.2}{suffix}"))
}

fn render_innovation(r: &InnovationReport) -> String {
    let mut md = r.report.to_markdown();
    let e = &r.enrichment;
    let a = &r.allocation;
    let _ = writeln!(md);
    let _ = writeln!(
        md,
        "weak/missing pairs that became strong: {} of {} ({})",
        e.weak_became_strong,
        e.weak_pairs,
        fmt_opt(e.headline_percent, "%")
    );
    let _ = writeln!(md, "lift (similar vs dissimilar, weak links): {}", fmt_opt(e.lift, "x"));
    let _ = writeln!(
        md,
        "similar share: weak links {}, strong links {}",
        fmt_opt(a.weak_similar_fraction.map(|f| 100.0 * f), "%"),
        fmt_opt(a.strong_similar_fraction.map(|f| 100.0 * f), "%")
    );
    md
}

fn innovate(cfg: &PipelineConfig) -> Result<()> {
    let (ya, yb) = cfg.years;
    let ga = read_graph(&cfg.year_dir(ya).join("g.edges.tsv"), RUN_BUILD)?;
    let gb = read_graph(&cfg.year_dir(yb).join("g.edges.tsv"), RUN_BUILD)?;
    let emb_path: PathBuf = cfg.embedding.import.clone().unwrap_or_else(|| cfg.embedding_path());
    let emb = read_embedding(&emb_path, RUN_EMBED)?;
    let t = cfg.thresholds();
    let exec = Exec::default();

    let mut runs: Vec<(String, Method, Method)> = cfg
        .method
        .methods()
        .into_iter()
        .map(|m| (m.name().to_string(), m, m))
        .collect();
    if cfg.mixed_outcome && runs.iter().any(|r| r.1 == Method::Disparity) {
        runs.push(("disparity_mixed".into(), Method::Disparity, Method::Weight));
    }
    for (name, method, outcome) in runs {
        let mut report = transition_report(&ga, &gb, &emb, method, outcome, &t, exec)?;
        report.years = Some((ya, yb));
        let r = InnovationReport {
            enrichment: enrichment_stats(&report),
            allocation: similarity_allocation(&ga, &emb, method, &t, exec)?,
            report: &report,
        };
        log::info!("{name}: {} pairs", report.universe_size);
        let dir = cfg.reports_dir();
        write_json(&dir.join(format!("{name}.json")), &r)?;
        write_text(&dir.join(format!("{name}.md")), &render_innovation(&r))?;
    }
    Ok(())
}
