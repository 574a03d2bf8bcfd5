//! Stopword list handling. A default English list ships with the crate as a
//! versioned data file; callers may load their own.

use std::collections::HashSet;
use std::path::Path;

use crate::error::Result;

const DEFAULT_LIST: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_LIST)
    }

    /// An empty list (keep every token).
    pub fn none() -> Self {
        StopwordList {
            words: HashSet::new(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        StopwordList { words }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
