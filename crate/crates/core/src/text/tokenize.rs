//! Token normalization and n-gram generation.

use super::stem::stem;
use super::stopwords::StopwordList;
use crate::error::{CoreError, Result};

/// Lowercases, splits on non-alphanumeric characters, drops stopwords, and
/// stems every surviving token. Pure-digit tokens are kept as-is (years carry
/// signal in decision corpora).
pub fn normalize(text: &str, stopwords: &StopwordList) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !stopwords.contains(t))
        .map(stem)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// All contiguous n-grams for each n in `[n_min, n_max]`, joined by single
/// spaces, in document order (all n-grams of size n_min first, then n_min+1,
/// and so on).
pub fn ngrams(tokens: &[String], n_min: usize, n_max: usize) -> Result<Vec<String>> {
    if n_min < 1 || n_min > n_max {
        return Err(CoreError::invalid(
            "ngrams",
            format!("require 1 <= n_min <= n_max, got {n_min}..{n_max}"),
        ));
    }
    let mut out = Vec::new();
    for n in n_min..=n_max {
        if tokens.len() < n {
            break;
        }
        for window in tokens.windows(n) {
            out.push(window.join(" "));
        }
    }
    Ok(out)
}
