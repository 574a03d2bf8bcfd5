//! Class-based TFIDF over chunk clusters, topic merging, and document-level
//! topic features.
//!
//! Weight of term w in cluster c: `share(w, c) * ln(1 + A / f_w)` where
//! `share` is the L1-normalized within-cluster term frequency, `f_w` the
//! term's total frequency across clusters, and `A` the average token count
//! per cluster (all counts over in-vocabulary n-grams).

use nalgebra::DMatrix;

use super::chunk::ChunkSet;
use super::kmeans::ClusterAssignment;
use crate::error::{CoreError, Result};
use crate::text::Vocabulary;

/// Raw per-cluster term counts; the state merges operate on.
#[derive(Debug, Clone)]
pub struct ClusterTermCounts {
    /// k x v term frequencies.
    pub tf: DMatrix<f64>,
    /// Chunks per cluster.
    pub chunk_counts: Vec<usize>,
}

/// Accumulates in-vocabulary n-gram counts per cluster.
pub fn cluster_term_counts(
    chunk_ngrams: &[Vec<String>],
    assignment: &ClusterAssignment,
    vocab: &Vocabulary,
) -> Result<ClusterTermCounts> {
    if chunk_ngrams.len() != assignment.labels.len() {
        return Err(CoreError::invalid(
            "ctfidf",
            "chunk n-gram lists and cluster labels differ in length",
        ));
    }
    let k = assignment.k;
    let mut tf = DMatrix::zeros(k, vocab.len());
    let mut chunk_counts = vec![0usize; k];
    for (grams, &label) in chunk_ngrams.iter().zip(&assignment.labels) {
        chunk_counts[label] += 1;
        for gram in grams {
            if let Some(idx) = vocab.index_of(gram) {
                tf[(label, idx)] += 1.0;
            }
        }
    }
    Ok(ClusterTermCounts { tf, chunk_counts })
}

/// The cTFIDF weight matrix (k x v) for the given cluster term counts.
/// Clusters with zero in-vocabulary tokens yield zero rows and a warning.
pub fn ctfidf(counts: &ClusterTermCounts) -> (DMatrix<f64>, Vec<String>) {
    let k = counts.tf.nrows();
    let v = counts.tf.ncols();
    let mut warnings = Vec::new();

    let cluster_totals: Vec<f64> = (0..k).map(|c| counts.tf.row(c).sum()).collect();
    let term_totals: Vec<f64> = (0..v).map(|t| counts.tf.column(t).sum()).collect();
    let grand_total: f64 = cluster_totals.iter().sum();
    let avg_tokens_per_cluster = grand_total / k as f64;

    let mut out = DMatrix::zeros(k, v);
    for c in 0..k {
        if cluster_totals[c] == 0.0 {
            warnings.push(format!("cluster {c} has no in-vocabulary tokens"));
            continue;
        }
        for t in 0..v {
            let tf = counts.tf[(c, t)];
            if tf > 0.0 {
                let share = tf / cluster_totals[c];
                out[(c, t)] = share * (1.0 + avg_tokens_per_cluster / term_totals[t]).ln();
            }
        }
    }
    (out, warnings)
}

/// Provenance of a merge run: `final_topic_of[original_cluster]` plus the
/// ordered list of (absorbed, into) cluster pairs in original indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeMap {
    pub final_topic_of: Vec<usize>,
    pub merges: Vec<(usize, usize)>,
}

/// Iteratively merges the lowest-chunk-count topic into its cosine-nearest
/// peer (by cTFIDF rows), recomputing term frequencies and cTFIDF after each
/// merge, until `target_m` topics remain.
pub fn merge_topics(
    counts: &ClusterTermCounts,
    target_m: usize,
) -> Result<(DMatrix<f64>, ClusterTermCounts, MergeMap)> {
    let k0 = counts.tf.nrows();
    if target_m < 1 {
        return Err(CoreError::invalid("merge_topics", "target_m must be >= 1"));
    }
    if target_m > k0 {
        return Err(CoreError::invalid(
            "merge_topics",
            format!("target_m = {target_m} exceeds current topic count {k0}"),
        ));
    }

    // Live topics are tracked by their original index.
    let mut tf: Vec<Option<Vec<f64>>> = (0..k0)
        .map(|c| Some(counts.tf.row(c).iter().copied().collect()))
        .collect();
    let mut chunks: Vec<usize> = counts.chunk_counts.clone();
    let mut parent: Vec<usize> = (0..k0).collect();
    let mut merges = Vec::new();
    let mut live = k0;

    while live > target_m {
        let weights = current_ctfidf(&tf, live);

        // Lowest chunk count, ties to the smaller index.
        let victim = (0..k0)
            .filter(|&c| tf[c].is_some())
            .min_by(|&a, &b| chunks[a].cmp(&chunks[b]).then(a.cmp(&b)))
            .unwrap();

        let target = (0..k0)
            .filter(|&c| c != victim && tf[c].is_some())
            .max_by(|&a, &b| {
                cosine(&weights[&victim], &weights[&a])
                    .partial_cmp(&cosine(&weights[&victim], &weights[&b]))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();

        let victim_tf = tf[victim].take().unwrap();
        let target_tf = tf[target].as_mut().unwrap();
        for (dst, src) in target_tf.iter_mut().zip(&victim_tf) {
            *dst += src;
        }
        chunks[target] += chunks[victim];
        chunks[victim] = 0;
        parent[victim] = target;
        merges.push((victim, target));
        live -= 1;
    }

    // Compress the union-find chains and enumerate surviving topics in
    // original order.
    let mut final_topic_of = vec![usize::MAX; k0];
    let survivors: Vec<usize> = (0..k0).filter(|&c| tf[c].is_some()).collect();
    for c in 0..k0 {
        let mut root = c;
        while parent[root] != root {
            root = parent[root];
        }
        final_topic_of[c] = survivors.iter().position(|&s| s == root).unwrap();
    }

    let v = counts.tf.ncols();
    let mut merged_tf = DMatrix::zeros(survivors.len(), v);
    let mut merged_chunks = Vec::with_capacity(survivors.len());
    for (row, &s) in survivors.iter().enumerate() {
        let tf_row = tf[s].as_ref().unwrap();
        for t in 0..v {
            merged_tf[(row, t)] = tf_row[t];
        }
        merged_chunks.push(chunks[s]);
    }
    let merged = ClusterTermCounts {
        tf: merged_tf,
        chunk_counts: merged_chunks,
    };
    let (weights, _) = ctfidf(&merged);
    Ok((
        weights,
        merged,
        MergeMap {
            final_topic_of,
            merges,
        },
    ))
}

fn current_ctfidf(
    tf: &[Option<Vec<f64>>],
    live: usize,
) -> std::collections::HashMap<usize, Vec<f64>> {
    let v = tf.iter().flatten().next().map(|r| r.len()).unwrap_or(0);
    let mut term_totals = vec![0.0f64; v];
    let mut grand = 0.0;
    for row in tf.iter().flatten() {
        for (t, &x) in row.iter().enumerate() {
            term_totals[t] += x;
            grand += x;
        }
    }
    let avg = grand / live as f64;
    tf.iter()
        .enumerate()
        .filter_map(|(c, row)| row.as_ref().map(|r| (c, r)))
        .map(|(c, row)| {
            let total: f64 = row.iter().sum();
            let w = row
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    if x > 0.0 && total > 0.0 {
                        (x / total) * (1.0 + avg / term_totals[t]).ln()
                    } else {
                        0.0
                    }
                })
                .collect();
            (c, w)
        })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Document-topic features: row d holds the share of document d's chunks in
/// each merged topic; rows sum to one.
pub fn doc_topic_counts(
    assignment: &ClusterAssignment,
    merge_map: &MergeMap,
    chunkset: &ChunkSet,
    n_topics: usize,
    n_docs: usize,
) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(n_docs, n_topics);
    let mut per_doc = vec![0usize; n_docs];
    for (chunk, &label) in chunkset.chunks.iter().zip(&assignment.labels) {
        let topic = merge_map.final_topic_of[label];
        out[(chunk.doc_index, topic)] += 1.0;
        per_doc[chunk.doc_index] += 1;
    }
    for d in 0..n_docs {
        if per_doc[d] == 0 {
            return Err(CoreError::Document {
                id: format!("#{d}"),
                message: "document has zero chunks".into(),
            });
        }
        for t in 0..n_topics {
            out[(d, t)] /= per_doc[d] as f64;
        }
    }
    Ok(out)
}
