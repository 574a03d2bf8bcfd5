//! TFIDF weighting over an n-gram vocabulary.
//!
//! Variant: raw term counts, smoothed idf `ln((1 + n) / (1 + df)) + 1`, and
//! L2 row normalization. Out-of-vocabulary n-grams are ignored.

use std::collections::HashMap;

use super::vocab::Vocabulary;
use crate::error::Result;
use crate::sparse::SparseDocTermMatrix;

/// Computes the TFIDF matrix for per-document n-gram lists.
pub fn tfidf(
    docs: &[Vec<String>],
    doc_ids: &[String],
    vocab: &Vocabulary,
) -> Result<SparseDocTermMatrix> {
    let n = docs.len();
    let idf: Vec<f64> = (0..vocab.len())
        .map(|t| (((1 + n) as f64) / ((1 + vocab.df(t)) as f64)).ln() + 1.0)
        .collect();

    let mut rows = Vec::with_capacity(n);
    for doc in docs {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for gram in doc {
            if let Some(idx) = vocab.index_of(gram) {
                *counts.entry(idx).or_insert(0) += 1;
            }
        }
        let mut row: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(idx, tf)| (idx as u32, tf as f64 * idf[idx]))
            .collect();
        let norm = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut row {
                *w /= norm;
            }
        }
        rows.push(row);
    }
    SparseDocTermMatrix::from_rows(vocab.len(), doc_ids.to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(grams: &[&str]) -> Vec<String> {
        grams.iter().map(|s| s.to_string()).collect()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn single_doc_single_term_normalizes_to_one() {
        let docs = vec![doc(&["x", "x", "x"])];
        let v = Vocabulary::build(&docs, 1, 10).unwrap();
        let m = tfidf(&docs, &ids(1), &v).unwrap();
        let row: Vec<_> = m.row(0).collect();
        assert_eq!(row.len(), 1);
        assert!((row[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn idf_strictly_smaller_for_ubiquitous_term() {
        let n = 7usize;
        let idf = |df: usize| (((1 + n) as f64) / ((1 + df) as f64)).ln() + 1.0;
        assert!(idf(n) < idf(1));
    }

    #[test]
    fn matches_hand_computed_dense_tfidf() {
        // 3-doc toy corpus, weights checked against a by-hand tf*idf with
        // smoothed idf and L2 row norms.
        let docs = vec![
            doc(&["a", "a", "b"]),
            doc(&["a", "c"]),
            doc(&["b", "b", "c", "c"]),
        ];
        let v = Vocabulary::build(&docs, 1, 10).unwrap();
        let m = tfidf(&docs, &ids(3), &v).unwrap();

        let n = 3.0f64;
        let idf = |df: f64| ((1.0 + n) / (1.0 + df)).ln() + 1.0;
        let (ia, ib, ic) = (idf(2.0), idf(2.0), idf(2.0));

        // Row 0: tf(a)=2, tf(b)=1.
        let (wa, wb) = (2.0 * ia, 1.0 * ib);
        let norm0 = (wa * wa + wb * wb).sqrt();
        let expect = |t: &str, w: f64| (v.index_of(t).unwrap() as u32, w);
        let mut row0: Vec<_> = m.row(0).collect();
        row0.sort_by_key(|&(c, _)| c);
        let mut want0 = vec![expect("a", wa / norm0), expect("b", wb / norm0)];
        want0.sort_by_key(|&(c, _)| c);
        for ((c, got), (wc, want)) in row0.iter().zip(&want0) {
            assert_eq!(c, wc);
            assert!((got - want).abs() < 1e-12);
        }

        // Row 2: tf(b)=2, tf(c)=2, perfectly symmetric weights.
        let (wb2, wc2) = (2.0 * ib, 2.0 * ic);
        let norm2 = (wb2 * wb2 + wc2 * wc2).sqrt();
        for (c, got) in m.row(2) {
            let want = if c == v.index_of("b").unwrap() as u32 {
                wb2 / norm2
            } else {
                wc2 / norm2
            };
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_unit_norm_or_empty() {
        let docs = vec![doc(&["a", "b", "c"]), doc(&["zzz"]), doc(&["a", "a"])];
        // "zzz" filtered by min_df=2; its row is empty.
        let v = Vocabulary::build(&docs, 2, 10).unwrap();
        let m = tfidf(&docs, &ids(3), &v).unwrap();
        for i in 0..3 {
            let norm: f64 = m.row(i).map(|(_, w)| w * w).sum::<f64>().sqrt();
            assert!(norm.abs() < 1e-12 || (norm - 1.0).abs() < 1e-12);
        }
    }
}
