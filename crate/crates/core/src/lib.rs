//! Discovery of outcome-correlated topics in labelled decision corpora.
//!
//! The pipeline masks outcome-revealing text, synthesizes topic features
//! (LSA over TFIDF, or clustered chunk embeddings with class-based TFIDF),
//! fits an L1-penalized logistic outcome model, and reports post-selection
//! p-values, representative n-grams, and top-weighted documents for each
//! significant topic.

pub mod cluster;
pub mod corpus;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod lsa;
pub mod metrics;
pub mod pipeline;
pub mod sparse;
pub mod lasso;
pub mod synth;
pub mod text;
pub mod topics;

pub use error::{CoreError, ErrorClass, Result};
pub use sparse::SparseDocTermMatrix;
pub use topics::{SignedTerm, TopicModel, TopicSource};
