use std::fs;
use std::path::{Path, PathBuf};

use innovnet_core::embed::{EmbeddingConfig, DEFAULT_DIMENSION, DEFAULT_ZETA};
use innovnet_core::filter::{DEFAULT_OMEGA, DEFAULT_RHO};
use innovnet_core::innovate::{Method, Thresholds};
use innovnet_core::metrics::{LowDegreeClustering, PathMode};
use serde::{Deserialize, Serialize};

use crate::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Weight,
    Disparity,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Weight => vec![Method::Weight],
            MethodChoice::Disparity => vec![Method::Disparity],
            MethodChoice::Both => vec![Method::Weight, Method::Disparity],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub dimension: usize,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub learning_rate: f64,
    pub negative_power: f64,
    pub samples_per_epoch: Option<usize>,
    /// Use this vector file instead of training.
    pub import: Option<PathBuf>,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        let c = EmbeddingConfig::default();
        EmbeddingSettings {
            dimension: DEFAULT_DIMENSION,
            epochs: c.epochs,
            negatives_per_positive: c.negatives_per_positive,
            learning_rate: c.learning_rate,
            negative_power: c.negative_power,
            samples_per_epoch: c.samples_per_epoch,
            import: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_path: Option<PathBuf>,
    pub years: (i32, i32),
    pub method: MethodChoice,
    pub omega: u64,
    pub rho_pvalue: f64,
    pub zeta: f64,
    pub embedding: EmbeddingSettings,
    pub path_mode: PathMode,
    pub low_degree_clustering: LowDegreeClustering,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    pub deterministic: bool,
    /// Also report disparity classes in year A against the weight rule in year B.
    pub mixed_outcome: bool,
    pub dump_verdicts: bool,
    pub stop_list: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_path: None,
            years: (2013, 2015),
            method: MethodChoice::Both,
            omega: DEFAULT_OMEGA,
            rho_pvalue: DEFAULT_RHO,
            zeta: DEFAULT_ZETA,
            embedding: EmbeddingSettings::default(),
            path_mode: PathMode::default(),
            low_degree_clustering: LowDegreeClustering::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            workers: 0,
            deterministic: false,
            mixed_outcome: false,
            dump_verdicts: false,
            stop_list: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            omega: self.omega,
            rho_pvalue: self.rho_pvalue,
            zeta: self.zeta,
        }
    }

    pub fn embedding_config(&self) -> EmbeddingConfig {
        let e = &self.embedding;
        EmbeddingConfig {
            dimension: e.dimension,
            epochs: e.epochs,
            negatives_per_positive: e.negatives_per_positive,
            learning_rate: e.learning_rate,
            negative_power: e.negative_power,
            samples_per_epoch: e.samples_per_epoch,
            seed: self.seed,
            workers: if self.deterministic { 1 } else { self.workers },
        }
    }

    /// Seeds the path sampler from the pipeline seed.
    pub fn path_mode(&self) -> PathMode {
        match self.path_mode {
            PathMode::Sampled { sources, .. } => PathMode::Sampled { sources, seed: self.seed },
            PathMode::Exact => PathMode::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.years;
        if a == b {
            return Err(PipelineError::Config(format!("years must differ, got {a},{b}")));
        }
        if !(self.rho_pvalue > 0.0 && self.rho_pvalue < 1.0) {
            return Err(PipelineError::Config(format!("rho must lie in (0, 1), got {}", self.rho_pvalue)));
        }
        if !(-1.0..=1.0).contains(&self.zeta) {
            return Err(PipelineError::Config(format!("zeta must lie in [-1, 1], got {}", self.zeta)));
        }
        if self.embedding.dimension < 2 {
            return Err(PipelineError::Config(format!(
                "dimension must be >= 2, got {}",
                self.embedding.dimension
            )));
        }
        Ok(())
    }

    pub fn year_dir(&self, year: i32) -> PathBuf {
        self.output_dir.join(year.to_string())
    }

    pub fn embedding_path(&self) -> PathBuf {
        self.output_dir.join("embeddings").join(format!("{}.vec", self.years.0))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.output_dir.join("reports")
    }
}

/// Parses `A,B`.
pub fn parse_years(s: &str) -> std::result::Result<(i32, i32), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<i32>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}
