//! Cluster-based topic branch: chunk documents, reduce precomputed chunk
//! embeddings, cluster, weight terms by class-based TFIDF, merge to the
//! target topic count, and emit normalized document-topic counts.

mod chunk;
mod ctfidf;
mod embed;
mod kmeans;
mod pca;

pub use chunk::{chunk_documents, Chunk, ChunkSet};
pub use ctfidf::{
    cluster_term_counts, ctfidf, doc_topic_counts, merge_topics, ClusterTermCounts, MergeMap,
};
pub use embed::{load_embeddings, write_embeddings, EmbeddingMatrix};
pub use kmeans::{kmeans, ClusterAssignment};
pub use pca::{reduce_dim, PcaModel};

use crate::error::{CoreError, Result};
use crate::text::{ngrams, normalize, StopwordList, Vocabulary};
use crate::topics::{SignedTerm, TopicModel, TopicSource};

#[derive(Debug, Clone)]
pub struct ClusterBranchConfig {
    pub chunk_size: usize,
    /// Pre-merge cluster count as a multiple of the target topic count.
    pub initial_k_multiple: usize,
    pub target_m: usize,
    pub pca_dims: usize,
    pub min_df: u32,
    pub max_terms: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub label_k: usize,
    pub seed: u64,
}

impl Default for ClusterBranchConfig {
    fn default() -> Self {
        ClusterBranchConfig {
            chunk_size: 128,
            initial_k_multiple: 4,
            target_m: 100,
            pca_dims: 5,
            min_df: 10,
            max_terms: 2500,
            ngram_min: 1,
            ngram_max: 3,
            label_k: 10,
            seed: 0,
        }
    }
}

/// Everything the reporting stage needs from the cluster branch.
pub struct ClusterBranchOutput {
    pub model: TopicModel,
    pub chunkset: ChunkSet,
    pub assignment: ClusterAssignment,
    pub merge_map: MergeMap,
    pub vocab: Vocabulary,
    pub warnings: Vec<String>,
}

/// Runs the full branch over masked documents and their aligned embeddings.
/// `masked` pairs (doc_id, masked_text) in corpus order; `embeddings` must
/// align with the chunking of those texts.
pub fn cluster_topic_model(
    masked: &[(String, String)],
    chunkset: ChunkSet,
    embeddings: &EmbeddingMatrix,
    stopwords: &StopwordList,
    cfg: &ClusterBranchConfig,
) -> Result<ClusterBranchOutput> {
    if embeddings.data.nrows() != chunkset.chunks.len() {
        return Err(CoreError::Embeddings(format!(
            "embedding rows ({}) do not match chunk count ({})",
            embeddings.data.nrows(),
            chunkset.chunks.len()
        )));
    }
    let mut warnings = Vec::new();

    let (reduced, pca) = reduce_dim(&embeddings.data, cfg.pca_dims, cfg.seed)?;
    warnings.extend(pca.warnings.iter().cloned());

    let initial_k = (cfg.target_m * cfg.initial_k_multiple)
        .max(cfg.target_m)
        .min(chunkset.chunks.len());
    let assignment = kmeans(&reduced, initial_k, cfg.seed.wrapping_add(1))?;

    // Chunk n-grams feed the class-based term weighting.
    let chunk_ngrams: Vec<Vec<String>> = chunkset
        .chunks
        .iter()
        .map(|c| {
            let tokens: Vec<String> = c
                .tokens
                .iter()
                .flat_map(|t| normalize(t, stopwords))
                .collect();
            ngrams(&tokens, cfg.ngram_min, cfg.ngram_max)
        })
        .collect::<Result<_>>()?;
    let vocab = Vocabulary::build(&chunk_ngrams, cfg.min_df, cfg.max_terms)?;

    let counts = cluster_term_counts(&chunk_ngrams, &assignment, &vocab)?;
    let (_, ctfidf_warnings) = ctfidf(&counts);
    warnings.extend(ctfidf_warnings);

    let target_m = cfg.target_m.min(initial_k);
    let (topic_term, _merged_counts, merge_map) = merge_topics(&counts, target_m)?;

    let doc_topic = doc_topic_counts(
        &assignment,
        &merge_map,
        &chunkset,
        target_m,
        masked.len(),
    )?;

    let topic_labels = label_topics(&topic_term, &vocab, cfg.label_k);
    let model = TopicModel {
        doc_topic,
        topic_term: topic_term.clone(),
        topic_labels,
        source: TopicSource::Ctfidf,
        explained_variance_ratio: Vec::new(),
    };
    Ok(ClusterBranchOutput {
        model,
        chunkset,
        assignment,
        merge_map,
        vocab,
        warnings,
    })
}

/// Top-k terms per topic row by weight (cTFIDF weights are nonnegative).
pub fn label_topics(
    topic_term: &nalgebra::DMatrix<f64>,
    vocab: &Vocabulary,
    top_k: usize,
) -> Vec<Vec<SignedTerm>> {
    (0..topic_term.nrows())
        .map(|c| {
            let row = topic_term.row(c);
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| {
                row[b]
                    .abs()
                    .partial_cmp(&row[a].abs())
                    .unwrap()
                    .then_with(|| a.cmp(&b))
            });
            idx.into_iter()
                .take(top_k)
                .map(|t| SignedTerm {
                    term: vocab.term(t).to_string(),
                    weight: row[t],
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Two thematic document groups with distinct word pools and separated
    /// synthetic embeddings.
    fn fixture() -> (Vec<(String, String)>, ChunkSet, EmbeddingMatrix) {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let mut masked = Vec::new();
        for d in 0..12 {
            let pool: Vec<String> = if d % 2 == 0 {
                (0..8).map(|i| format!("alpha{i}")).collect()
            } else {
                (0..8).map(|i| format!("beta{i}")).collect()
            };
            let words: Vec<String> = (0..40)
                .map(|_| pool[rng.random_range(0..pool.len())].clone())
                .collect();
            masked.push((format!("d{d}"), words.join(" ")));
        }
        let chunkset = chunk_documents(&masked, 16).unwrap();
        let data = DMatrix::from_fn(chunkset.chunks.len(), 6, |i, j| {
            let even = chunkset.chunks[i].doc_index % 2 == 0;
            let center = if even { 4.0 } else { -4.0 };
            if j == 0 {
                center + 0.1 * rng.random::<f64>()
            } else {
                0.1 * rng.random::<f64>()
            }
        });
        let keys = chunkset
            .chunks
            .iter()
            .map(|c| (c.doc_id.clone(), c.chunk_index))
            .collect();
        (masked, chunkset, EmbeddingMatrix { data, keys })
    }

    #[test]
    fn branch_end_to_end_separates_pools() {
        let (masked, chunkset, embeddings) = fixture();
        let cfg = ClusterBranchConfig {
            chunk_size: 16,
            initial_k_multiple: 4,
            target_m: 2,
            pca_dims: 3,
            min_df: 2,
            max_terms: 100,
            ngram_min: 1,
            ngram_max: 1,
            label_k: 5,
            seed: 5,
        };
        let out = cluster_topic_model(
            &masked,
            chunkset,
            &embeddings,
            &StopwordList::none(),
            &cfg,
        )
        .unwrap();
        assert_eq!(out.model.n_topics(), 2);
        // Rows are probability vectors.
        for d in 0..out.model.n_docs() {
            let s: f64 = out.model.doc_topic.row(d).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // Each topic's labels are drawn from a single pool.
        for labels in &out.model.topic_labels {
            let alpha = labels.iter().filter(|t| t.term.starts_with("alpha")).count();
            let beta = labels.iter().filter(|t| t.term.starts_with("beta")).count();
            assert!(
                alpha == labels.len() || beta == labels.len(),
                "mixed topic labels: {labels:?}"
            );
        }
    }
}
