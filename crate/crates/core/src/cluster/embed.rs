//! Chunk-embedding file ingestion. Embeddings are computed externally (any
//! language-model embedder can produce the file); this module only aligns
//! them with a [`ChunkSet`].
//!
//! File format (UTF-8 text): a header line `n_chunks<TAB>dim`, then one row
//! per chunk: `doc_id<TAB>chunk_index<TAB>v1 v2 ... v_dim`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::chunk::ChunkSet;
use crate::error::{CoreError, Result};

/// Chunk embeddings aligned with a chunk set: row i embeds chunk i.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub data: DMatrix<f64>,
    pub keys: Vec<(String, usize)>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }
}

/// Reads and aligns an embedding file against `chunkset`. Rows may appear in
/// any order; missing or extra keys are listed in the error.
pub fn load_embeddings(path: &Path, chunkset: &ChunkSet) -> Result<EmbeddingMatrix> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Embeddings("empty file".into()))??;
    let mut parts = header.split('\t');
    let n_chunks: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CoreError::Embeddings("bad header: expected n_chunks<TAB>dim".into()))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CoreError::Embeddings("bad header: expected n_chunks<TAB>dim".into()))?;

    let mut rows: HashMap<(String, usize), Vec<f64>> = HashMap::with_capacity(n_chunks);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (doc_id, chunk_index, values) = match (fields.next(), fields.next(), fields.next()) {
            (Some(d), Some(c), Some(v)) => (d, c, v),
            _ => {
                return Err(CoreError::Embeddings(format!(
                    "row {}: expected doc_id<TAB>chunk_index<TAB>values",
                    lineno + 2
                )))
            }
        };
        let chunk_index: usize = chunk_index.trim().parse().map_err(|_| {
            CoreError::Embeddings(format!("row {}: bad chunk index", lineno + 2))
        })?;
        let vector: Vec<f64> = values
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| CoreError::Embeddings(format!("row {}: bad float", lineno + 2)))?;
        if vector.len() != dim {
            return Err(CoreError::Embeddings(format!(
                "row {}: dimension {} != header dim {dim}",
                lineno + 2,
                vector.len()
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Embeddings(format!(
                "row {}: non-finite value",
                lineno + 2
            )));
        }
        rows.insert((doc_id.to_string(), chunk_index), vector);
    }

    let mut missing = Vec::new();
    let mut data = DMatrix::zeros(chunkset.chunks.len(), dim);
    let mut keys = Vec::with_capacity(chunkset.chunks.len());
    for (i, chunk) in chunkset.chunks.iter().enumerate() {
        let key = (chunk.doc_id.clone(), chunk.chunk_index);
        match rows.remove(&key) {
            Some(vector) => {
                for (j, v) in vector.into_iter().enumerate() {
                    data[(i, j)] = v;
                }
                keys.push(key);
            }
            None => missing.push(format!("({}, {})", chunk.doc_id, chunk.chunk_index)),
        }
    }
    if !missing.is_empty() {
        return Err(CoreError::Embeddings(format!(
            "missing rows for chunks: {}",
            missing.join(", ")
        )));
    }
    if !rows.is_empty() {
        let mut extra: Vec<String> = rows
            .keys()
            .map(|(d, c)| format!("({d}, {c})"))
            .collect();
        extra.sort();
        return Err(CoreError::Embeddings(format!(
            "extra rows not in chunk set: {}",
            extra.join(", ")
        )));
    }
    Ok(EmbeddingMatrix { data, keys })
}

/// Writes the embedding file format produced by external embedders.
pub fn write_embeddings(
    path: &Path,
    keys: &[(String, usize)],
    data: &DMatrix<f64>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}\t{}", keys.len(), data.ncols())?;
    for (i, (doc_id, chunk_index)) in keys.iter().enumerate() {
        let values: Vec<String> = (0..data.ncols())
            .map(|j| format!("{:?}", data[(i, j)]))
            .collect();
        writeln!(f, "{doc_id}\t{chunk_index}\t{}", values.join(" "))?;
    }
    Ok(())
}
