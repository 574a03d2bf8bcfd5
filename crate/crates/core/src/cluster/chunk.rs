//! Fixed-length token windows over masked documents.

use crate::error::{CoreError, Result};

/// One chunk: a contiguous whitespace-token window of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub doc_id: String,
    /// Position of the document in the usable corpus.
    pub doc_index: usize,
    pub chunk_index: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ChunkSet {
    pub chunks: Vec<Chunk>,
    pub chunk_size: usize,
    /// Documents dropped for having no tokens, with reason codes.
    pub excluded: Vec<(String, String)>,
}

impl ChunkSet {
    /// Chunk count per document index, for documents that produced chunks.
    pub fn chunks_per_doc(&self, n_docs: usize) -> Vec<usize> {
        let mut counts = vec![0usize; n_docs];
        for c in &self.chunks {
            counts[c.doc_index] += 1;
        }
        counts
    }
}

/// Splits each masked text into consecutive windows of exactly `chunk_size`
/// whitespace tokens (the last window may be shorter). Documents with no
/// tokens are excluded with a reason.
pub fn chunk_documents(
    masked: &[(String, String)],
    chunk_size: usize,
) -> Result<ChunkSet> {
    if chunk_size < 16 {
        return Err(CoreError::invalid(
            "chunk_documents",
            format!("chunk_size must be >= 16, got {chunk_size}"),
        ));
    }
    let mut chunks = Vec::new();
    let mut excluded = Vec::new();
    for (doc_index, (id, text)) in masked.iter().enumerate() {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            excluded.push((id.clone(), "empty_masked_text".to_string()));
            continue;
        }
        for (chunk_index, window) in tokens.chunks(chunk_size).enumerate() {
            chunks.push(Chunk {
                doc_id: id.clone(),
                doc_index,
                chunk_index,
                tokens: window.to_vec(),
            });
        }
    }
    Ok(ChunkSet {
        chunks,
        chunk_size,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text_of(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn window_arithmetic() {
        let masked = vec![("d1".to_string(), text_of(300))];
        let cs = chunk_documents(&masked, 128).unwrap();
        let sizes: Vec<usize> = cs.chunks.iter().map(|c| c.tokens.len()).collect();
        assert_eq!(sizes, vec![128, 128, 44]);
    }

    #[test]
    fn short_document_single_chunk() {
        let masked = vec![("d1".to_string(), text_of(10))];
        let cs = chunk_documents(&masked, 128).unwrap();
        assert_eq!(cs.chunks.len(), 1);
        assert_eq!(cs.chunks[0].tokens.len(), 10);
    }

    #[test]
    fn reassembly_round_trips() {
        let masked = vec![
            ("d1".to_string(), text_of(257)),
            ("d2".to_string(), text_of(64)),
        ];
        let cs = chunk_documents(&masked, 64).unwrap();
        for (idx, (id, text)) in masked.iter().enumerate() {
            let mut doc_chunks: Vec<&Chunk> =
                cs.chunks.iter().filter(|c| c.doc_index == idx).collect();
            doc_chunks.sort_by_key(|c| c.chunk_index);
            let rebuilt: Vec<&str> = doc_chunks
                .iter()
                .flat_map(|c| c.tokens.iter().map(String::as_str))
                .collect();
            let original: Vec<&str> = text.split_whitespace().collect();
            assert_eq!(rebuilt, original, "doc {id}");
        }
    }

    #[test]
    fn empty_document_excluded_with_reason() {
        let masked = vec![
            ("d1".to_string(), String::new()),
            ("d2".to_string(), text_of(20)),
        ];
        let cs = chunk_documents(&masked, 16).unwrap();
        assert_eq!(cs.excluded, vec![("d1".to_string(), "empty_masked_text".to_string())]);
        assert!(cs.chunks.iter().all(|c| c.doc_id == "d2"));
    }

    #[test]
    fn rejects_tiny_chunk_size() {
        assert!(chunk_documents(&[], 8).is_err());
    }
}
