//! Frequency-capped n-gram vocabulary.

use std::collections::HashMap;

use crate::error::{CoreError, Result};

/// An ordered n-gram vocabulary. Terms are ranked by descending total corpus
/// frequency with a lexicographic tie-break, truncated to `max_terms`, and
/// every kept term satisfies the `min_df` document-frequency cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    corpus_tf: Vec<u64>,
    index: HashMap<String, usize>,
    pub min_df: u32,
    pub max_terms: usize,
}

impl Vocabulary {
    /// Builds the vocabulary from per-document n-gram lists.
    pub fn build(docs: &[Vec<String>], min_df: u32, max_terms: usize) -> Result<Self> {
        if min_df < 1 {
            return Err(CoreError::invalid("build_vocabulary", "min_df must be >= 1"));
        }
        if max_terms < 1 {
            return Err(CoreError::invalid(
                "build_vocabulary",
                "max_terms must be >= 1",
            ));
        }

        let mut tf: HashMap<&str, u64> = HashMap::new();
        let mut df: HashMap<&str, u32> = HashMap::new();
        for doc in docs {
            let mut seen: HashMap<&str, ()> = HashMap::with_capacity(doc.len());
            for gram in doc {
                *tf.entry(gram).or_insert(0) += 1;
                if seen.insert(gram, ()).is_none() {
                    *df.entry(gram).or_insert(0) += 1;
                }
            }
        }

        let mut kept: Vec<(&str, u64, u32)> = tf
            .iter()
            .filter_map(|(&term, &freq)| {
                let d = df[term];
                (d >= min_df).then_some((term, freq, d))
            })
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.truncate(max_terms);

        if kept.is_empty() {
            return Err(CoreError::EmptyVocabulary);
        }

        let terms: Vec<String> = kept.iter().map(|(t, _, _)| t.to_string()).collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            df: kept.iter().map(|&(_, _, d)| d).collect(),
            corpus_tf: kept.iter().map(|&(_, f, _)| f).collect(),
            terms,
            index,
            min_df,
            max_terms,
        })
    }

    /// Assembles a vocabulary from pre-ranked (term, df) pairs, e.g. when
    /// re-loading an exported vocabulary file.
    pub fn from_parts(pairs: Vec<(String, u32)>, min_df: u32, max_terms: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(CoreError::EmptyVocabulary);
        }
        let index = pairs
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms: pairs.iter().map(|(t, _)| t.clone()).collect(),
            df: pairs.iter().map(|&(_, d)| d).collect(),
            corpus_tf: vec![0; pairs.len()],
            index,
            min_df,
            max_terms,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, idx: usize) -> &str {
        &self.terms[idx]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, idx: usize) -> u32 {
        self.df[idx]
    }

    pub fn corpus_tf(&self, idx: usize) -> u64 {
        self.corpus_tf[idx]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}
