use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use innovnet_core::graph::WeightedGraph;
use serde::Serialize;

use crate::{PipelineError, Result};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| PipelineError::io(path, e))?;
    out.flush().map_err(|e| PipelineError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| PipelineError::io(path, e))
}

pub fn open(path: &Path, hint: &str) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(PipelineError::MissingInput {
            path: path.to_path_buf(),
            hint: hint.to_string(),
        }),
        Err(e) => Err(PipelineError::io(path, e)),
    }
}

pub fn read_graph(path: &Path, hint: &str) -> Result<WeightedGraph> {
    let reader = open(path, hint)?;
    Ok(WeightedGraph::read_edge_list(reader, &path.display().to_string())?)
}

pub fn write_graph(path: &Path, g: &WeightedGraph) -> Result<()> {
    let mut out = create(path)?;
    g.write_edge_list(&mut out)?;
    Ok(())
}
