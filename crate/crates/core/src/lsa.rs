//! Latent semantic analysis: the TFIDF matrix compressed to `m` topics by
//! truncated SVD. Documents live in `doc_loadings * diag(sigma)`; topics are
//! rows of `term_loadings^T`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::{randomized_svd, RsvdOptions};
use crate::sparse::SparseDocTermMatrix;
use crate::text::Vocabulary;
use crate::topics::{SignedTerm, TopicModel, TopicSource};

/// Rank-m factors of the document-term matrix: `W ~ V * diag(S) * U^T` with
/// `U` (terms x m) and `V` (docs x m) orthonormal and `S` descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub term_loadings: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub doc_loadings: DMatrix<f64>,
    pub m: usize,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Truncated SVD of the document-term matrix via randomized subspace
/// iteration. Signs follow the max-|entry|-nonnegative convention on term
/// loading columns. When `m` exceeds the numerical rank, the surviving
/// components are returned and a warning recorded.
pub fn truncated_svd(w: &SparseDocTermMatrix, m: usize, seed: u64) -> Result<SvdFactors> {
    truncated_svd_with(w, m, seed, &RsvdOptions::default())
}

pub fn truncated_svd_with(
    w: &SparseDocTermMatrix,
    m: usize,
    seed: u64,
    opts: &RsvdOptions,
) -> Result<SvdFactors> {
    let f = randomized_svd(w, m, seed, opts)?;
    Ok(SvdFactors {
        m: f.sigma.len(),
        term_loadings: f.right,
        singular_values: f.sigma,
        doc_loadings: f.left,
        iterations: f.iterations,
        warnings: f.warnings,
    })
}

/// Document-topic features `V * diag(S)`; column j has variance
/// proportional to `S_j^2`.
pub fn doc_topic_features(f: &SvdFactors) -> DMatrix<f64> {
    let mut out = f.doc_loadings.clone();
    for j in 0..f.m {
        let s = f.singular_values[j];
        for i in 0..out.nrows() {
            out[(i, j)] *= s;
        }
    }
    out
}

/// Per-topic top-k n-grams by absolute loading, signs preserved.
pub fn topic_terms(f: &SvdFactors, vocab: &Vocabulary, top_k: usize) -> Vec<Vec<SignedTerm>> {
    (0..f.m)
        .map(|j| {
            let col = f.term_loadings.column(j);
            let mut idx: Vec<usize> = (0..col.len()).collect();
            idx.sort_by(|&a, &b| {
                col[b]
                    .abs()
                    .partial_cmp(&col[a].abs())
                    .unwrap()
                    .then_with(|| a.cmp(&b))
            });
            idx.into_iter()
                .take(top_k)
                .map(|t| SignedTerm {
                    term: vocab.term(t).to_string(),
                    weight: col[t],
                })
                .collect()
        })
        .collect()
}

/// Per-topic and cumulative shares of the total (Frobenius) variance of `W`.
pub fn explained_variance(f: &SvdFactors, w: &SparseDocTermMatrix) -> (Vec<f64>, Vec<f64>) {
    let total = w.frob_sq();
    let per: Vec<f64> = (0..f.m)
        .map(|j| {
            let s = f.singular_values[j];
            if total > 0.0 {
                s * s / total
            } else {
                0.0
            }
        })
        .collect();
    let mut cum = Vec::with_capacity(per.len());
    let mut acc = 0.0;
    for &p in &per {
        acc += p;
        cum.push(acc);
    }
    (per, cum)
}

/// Assembles the LSA topic model: features, topic-term rows, labels, and
/// explained-variance diagnostics.
pub fn lsa_topic_model(
    w: &SparseDocTermMatrix,
    vocab: &Vocabulary,
    m: usize,
    seed: u64,
    label_k: usize,
) -> Result<(TopicModel, SvdFactors)> {
    let f = truncated_svd(w, m, seed)?;
    let (per, _) = explained_variance(&f, w);
    let model = TopicModel {
        doc_topic: doc_topic_features(&f),
        topic_term: f.term_loadings.transpose(),
        topic_labels: topic_terms(&f, vocab, label_k),
        source: TopicSource::Lsa,
        explained_variance_ratio: per,
    };
    Ok((model, f))
}
