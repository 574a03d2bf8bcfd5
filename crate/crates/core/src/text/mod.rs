//! Text pipeline: normalization, n-grams, vocabulary, and TFIDF weighting.

pub mod stem;
pub mod stopwords;
mod tfidf;
mod tokenize;
mod vocab;

pub use stopwords::StopwordList;
pub use tfidf::tfidf;
pub use tokenize::{ngrams, normalize};
pub use vocab::Vocabulary;
