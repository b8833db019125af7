use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use innovnet_cli::config::parse_years;
use innovnet_cli::{run_all, run_stage, MethodChoice, PipelineConfig, Stage};
use innovnet_core::metrics::PathMode;

#[derive(Parser)]
#[command(name = "innovnet", version, about = "Concept co-occurrence networks and link-emergence reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Read the corpus and write per-year slices.
    Ingest,
    /// Project each year's slice to a concept graph.
    Build,
    /// Apply the weight and/or disparity filter.
    Filter,
    /// Network characteristics table.
    Stats,
    /// Train (or import) concept vectors for the first year.
    Embed,
    /// Link-emergence reports by link class and similarity group.
    Innovate,
    /// Every stage in order, then a checksum manifest.
    RunAll,
}

#[derive(Args)]
struct Flags {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Base and outcome year, e.g. 2013,2015.
    #[arg(long, global = true, value_parser = parse_years)]
    years: Option<(i32, i32)>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodChoice>,
    #[arg(long, global = true)]
    omega: Option<u64>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    zeta: Option<f64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Single-threaded training so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Vector file to use instead of training.
    #[arg(long, global = true)]
    embedding_import: Option<PathBuf>,
    /// Also score disparity classes against the weight rule in the outcome year.
    #[arg(long, global = true)]
    mixed_outcome: bool,
    /// Write per-edge filter verdicts.
    #[arg(long, global = true)]
    dump_verdicts: bool,
    /// Exact all-pairs path lengths instead of sampling.
    #[arg(long, global = true, conflicts_with = "path_sources")]
    exact_paths: bool,
    /// Number of BFS sources for sampled path lengths.
    #[arg(long, global = true)]
    path_sources: Option<usize>,
    /// File with one concept label per line to drop at ingestion.
    #[arg(long, global = true)]
    stop_list: Option<PathBuf>,
}

impl Flags {
    fn resolve(self) -> innovnet_cli::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.corpus {
            c.corpus_path = Some(v);
        }
        if let Some(v) = self.years {
            c.years = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.omega {
            c.omega = v;
        }
        if let Some(v) = self.rho {
            c.rho_pvalue = v;
        }
        if let Some(v) = self.zeta {
            c.zeta = v;
        }
        if let Some(v) = self.dim {
            c.embedding.dimension = v;
        }
        if let Some(v) = self.epochs {
            c.embedding.epochs = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        if let Some(v) = self.out {
            c.output_dir = v;
        }
        if let Some(v) = self.embedding_import {
            c.embedding.import = Some(v);
        }
        if let Some(v) = self.stop_list {
            c.stop_list = Some(v);
        }
        if self.exact_paths {
            c.path_mode = PathMode::Exact;
        }
        if let Some(sources) = self.path_sources {
            c.path_mode = PathMode::Sampled { sources, seed: c.seed };
        }
        c.deterministic |= self.deterministic;
        c.mixed_outcome |= self.mixed_outcome;
        c.dump_verdicts |= self.dump_verdicts;
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = cli.flags.resolve().and_then(|cfg| {
        let stage = match cli.command {
            Command::Ingest => Stage::Ingest,
            Command::Build => Stage::Build,
            Command::Filter => Stage::Filter,
            Command::Stats => Stage::Stats,
            Command::Embed => Stage::Embed,
            Command::Innovate => Stage::Innovate,
            Command::RunAll => {
                let m = run_all(&cfg)?;
                log::info!("completed {}; {} files", m.stages_completed.join(", "), m.files.len());
                return Ok(());
            }
        };
        run_stage(stage, &cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
