//! Topic model container shared by all feature branches.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Which branch produced a topic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicSource {
    Lsa,
    Ctfidf,
    Ohe,
    Noise,
}

impl std::fmt::Display for TopicSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TopicSource::Lsa => "lsa",
            TopicSource::Ctfidf => "ctfidf",
            TopicSource::Ohe => "ohe",
            TopicSource::Noise => "noise",
        };
        f.write_str(s)
    }
}

/// One labelled n-gram of a topic; `weight` keeps its sign for LSA loadings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedTerm {
    pub term: String,
    pub weight: f64,
}

/// An m-topic model over an n-document corpus: document-topic features,
/// topic-term weights, and per-topic label terms.
#[derive(Debug, Clone)]
pub struct TopicModel {
    /// n x m; rows align with corpus order.
    pub doc_topic: DMatrix<f64>,
    /// m x v over the branch vocabulary; empty (m x 0) for noise features.
    pub topic_term: DMatrix<f64>,
    /// Top-k signed n-grams per topic, by |weight| descending.
    pub topic_labels: Vec<Vec<SignedTerm>>,
    pub source: TopicSource,
    /// Per-topic share of total variance; empty for branches without one.
    pub explained_variance_ratio: Vec<f64>,
}

impl TopicModel {
    pub fn n_topics(&self) -> usize {
        self.doc_topic.ncols()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_topic.nrows()
    }
}
