//! Batch pipeline over a manuscript corpus: ingest, build, filter, stats,
//! embed and innovate. Stages talk to each other only through files under
//! the output directory, so each one can be rerun on its own.

use std::fmt;
use std::path::PathBuf;

pub mod config;
mod io;
pub mod manifest;
pub mod stages;

pub use config::{MethodChoice, PipelineConfig};
pub use manifest::Manifest;
pub use stages::{run_all, run_stage};

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] innovnet_core::Error),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input {path}; {hint}")]
    MissingInput { path: PathBuf, hint: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Build,
    Filter,
    Stats,
    Embed,
    Innovate,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Build,
        Stage::Filter,
        Stage::Stats,
        Stage::Embed,
        Stage::Innovate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Build => "build",
            Stage::Filter => "filter",
            Stage::Stats => "stats",
            Stage::Embed => "embed",
            Stage::Innovate => "innovate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
