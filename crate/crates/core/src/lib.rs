//! Concept co-occurrence network analytics.
//!
//! The crate turns a manuscript → concepts corpus into weighted concept
//! networks, extracts their backbone (hard weight threshold or disparity
//! filter), summarises their topology, learns concept embeddings and
//! measures which weakly connected concept pairs become strongly connected
//! in a later time slice.
//!
//! Heavy loops run on rayon when the `parallel` feature is enabled (the
//! default). Every such entry point takes an [`Exec`] so callers and the
//! bench suite can pick the sequential path at runtime.

pub mod corpus;
pub mod embed;
pub mod error;
mod exec;
pub mod filter;
pub mod graph;
pub mod innovate;
pub mod metrics;

pub use error::{Error, Result};
pub use exec::Exec;
