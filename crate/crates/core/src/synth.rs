//! Synthetic labelled corpora with planted outcome-driving topics.
//!
//! The substitute for corpora that cannot be redistributed: documents draw
//! tokens from a background vocabulary plus per-topic word pools, outcomes
//! follow a logistic model over the planted topic intensities, and a ground
//! truth map records which pool drives which documents. Each document also
//! carries an outcome-revealing "Decision" section so that masking stays on
//! the hook end to end.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{ChunkSet, EmbeddingMatrix};
use crate::corpus::{Document, DropPhrase, MaskPolicy, SectionRule, SectionRules};
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    /// Background vocabulary size; total vocabulary is this plus the pools.
    pub background_vocab: usize,
    pub n_topics: usize,
    /// Words per planted pool (pools are disjoint).
    pub pool_size: usize,
    /// Outcome log-odds per planted topic.
    pub log_odds: Vec<f64>,
    /// Intercept of the outcome model.
    pub base_rate_logit: f64,
    /// Probability that a document activates a given topic.
    pub topic_prevalence: f64,
    /// Tokens per document body.
    pub doc_len: usize,
    /// Distinct pool words drawn per active topic per document.
    pub pool_terms_per_doc: usize,
    /// Share of tokens drawn from the background regardless of topics.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_docs: 400,
            background_vocab: 180,
            n_topics: 2,
            pool_size: 10,
            log_odds: vec![2.5, -2.5],
            base_rate_logit: 0.0,
            topic_prevalence: 0.35,
            doc_len: 160,
            pool_terms_per_doc: 6,
            noise_level: 0.55,
            seed: 1,
        }
    }
}

/// What the generator actually planted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticGroundTruth {
    /// Per-topic word pools (already lowercase, stemmer-stable).
    pub pools: Vec<Vec<String>>,
    /// Per-document, per-topic intensity in [0, 1]; 0 = inactive.
    pub intensities: Vec<Vec<f64>>,
    pub outcome_probabilities: Vec<f64>,
}

/// Section rules matching the generated documents.
pub fn synthetic_section_rules() -> SectionRules {
    SectionRules {
        rules: vec![
            SectionRule {
                name: "Facts".into(),
                pattern: "facts".into(),
            },
            SectionRule {
                name: "Decision".into(),
                pattern: "decision".into(),
            },
        ],
        require_all: true,
    }
}

/// Mask policy matching the generated documents: the Decision section is
/// dropped and outcome words are deleted wherever they leak.
pub fn synthetic_mask_policy() -> MaskPolicy {
    MaskPolicy {
        drop_sections: vec!["Decision".into()],
        drop_phrases: vec![
            DropPhrase {
                stem: "grant".into(),
                variant_patterns: vec!["grant(?:ed|s|ing)?".into()],
            },
            DropPhrase {
                stem: "deny".into(),
                variant_patterns: vec!["den(?:y|ied|ies)".into()],
            },
        ],
    }
}

const CONSONANTS: &[u8] = b"bcdfgjklmnprtvz";
const VOWELS: &[u8] = b"aeiou";

/// Pronounceable pseudo-words that the stemmer leaves alone. Deterministic
/// per RNG state; uniqueness enforced by the caller.
fn pseudo_word(rng: &mut ChaCha20Rng) -> String {
    let syllables = 2 + rng.random_range(0..2);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
    }
    w
}

fn stemmer_safe(w: &str) -> bool {
    // Reject anything that stemming or stopping would rewrite.
    !(w.ends_with('s')
        || w.ends_with("ed")
        || w.ends_with("ing")
        || w.ends_with("ly")
        || crate::text::StopwordList::english().contains(w))
}

fn word_list(count: usize, rng: &mut ChaCha20Rng, taken: &mut std::collections::HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = pseudo_word(rng);
        if stemmer_safe(&w) && taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Generates the corpus. Documents carry a "Facts" section with the token
/// stream and a "Decision" section revealing the outcome.
pub fn synthetic_corpus(spec: &SyntheticSpec) -> Result<(Vec<Document>, SyntheticGroundTruth)> {
    if spec.log_odds.len() != spec.n_topics {
        return Err(CoreError::invalid(
            "synthetic_corpus",
            "log_odds length must equal n_topics",
        ));
    }
    if spec.pool_terms_per_doc > spec.pool_size {
        return Err(CoreError::invalid(
            "synthetic_corpus",
            format!(
                "pool_terms_per_doc ({}) exceeds pool_size ({})",
                spec.pool_terms_per_doc, spec.pool_size
            ),
        ));
    }
    if !(0.0..=1.0).contains(&spec.noise_level) || !(0.0..=1.0).contains(&spec.topic_prevalence) {
        return Err(CoreError::invalid(
            "synthetic_corpus",
            "noise_level and topic_prevalence must lie in [0, 1]",
        ));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut taken = std::collections::HashSet::new();
    let background = word_list(spec.background_vocab, &mut rng, &mut taken);
    let pools: Vec<Vec<String>> = (0..spec.n_topics)
        .map(|_| word_list(spec.pool_size, &mut rng, &mut taken))
        .collect();

    let mut docs = Vec::with_capacity(spec.n_docs);
    let mut intensities = Vec::with_capacity(spec.n_docs);
    let mut probs = Vec::with_capacity(spec.n_docs);
    for d in 0..spec.n_docs {
        // Topic activation and intensity.
        let z: Vec<f64> = (0..spec.n_topics)
            .map(|_| {
                if rng.random::<f64>() < spec.topic_prevalence {
                    0.5 + 0.5 * rng.random::<f64>()
                } else {
                    0.0
                }
            })
            .collect();

        // Per-document pool subsets, drawn without replacement.
        let subsets: Vec<Vec<&String>> = (0..spec.n_topics)
            .map(|t| {
                if z[t] > 0.0 {
                    let mut idx: Vec<usize> = (0..spec.pool_size).collect();
                    for i in 0..spec.pool_terms_per_doc {
                        let j = i + rng.random_range(0..(spec.pool_size - i));
                        idx.swap(i, j);
                    }
                    idx[..spec.pool_terms_per_doc]
                        .iter()
                        .map(|&i| &pools[t][i])
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect();

        // Fixed composition: active documents devote a deterministic share of
        // tokens to their pools (split across active topics by intensity),
        // spread evenly over the drawn pool words. Token order is shuffled.
        let z_total: f64 = z.iter().sum();
        let mut tokens = Vec::with_capacity(spec.doc_len);
        if z_total > 0.0 {
            let pool_budget =
                ((1.0 - spec.noise_level) * spec.doc_len as f64).round() as usize;
            let mut assigned = 0usize;
            let active: Vec<usize> = (0..spec.n_topics).filter(|&t| z[t] > 0.0).collect();
            for (rank, &t) in active.iter().enumerate() {
                let share = if rank + 1 == active.len() {
                    pool_budget - assigned
                } else {
                    ((z[t] / z_total) * pool_budget as f64).round() as usize
                };
                assigned += share;
                let subset = &subsets[t];
                for i in 0..share {
                    tokens.push(subset[i % subset.len()].to_string());
                }
            }
        }
        while tokens.len() < spec.doc_len {
            tokens.push(background[rng.random_range(0..background.len())].clone());
        }
        // Fisher-Yates so n-grams vary across documents.
        for i in (1..tokens.len()).rev() {
            let j = rng.random_range(0..=i);
            tokens.swap(i, j);
        }

        let logit: f64 = spec.base_rate_logit
            + z.iter()
                .zip(&spec.log_odds)
                .map(|(&zt, &lo)| zt * lo)
                .sum::<f64>();
        let p = sigmoid(logit);
        let outcome = u8::from(rng.random::<f64>() < p);

        let decision_word = if outcome == 1 { "granted" } else { "denied" };
        let text = format!(
            "Facts\n{}\nDecision\nthe request is {} by this panel\n",
            tokens.join(" "),
            decision_word
        );
        docs.push(Document {
            id: format!("syn{d:04}"),
            text,
            sections: Vec::new(),
            outcome,
            covariates: Vec::new(),
        });
        intensities.push(z);
        probs.push(p);
    }

    Ok((
        docs,
        SyntheticGroundTruth {
            pools,
            intensities,
            outcome_probabilities: probs,
        },
    ))
}

/// Deterministic content-based chunk embeddings for fixtures: every token
/// hashes to a fixed Gaussian direction and a chunk embeds as the mean of
/// its token directions. Chunks sharing vocabulary land close together, so
/// the clustering branch has real structure to find without any language
/// model in the loop.
pub fn hashed_chunk_embeddings(chunkset: &ChunkSet, dim: usize, seed: u64) -> EmbeddingMatrix {
    use std::collections::HashMap;
    let mut cache: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut data = DMatrix::zeros(chunkset.chunks.len(), dim);
    for (i, chunk) in chunkset.chunks.iter().enumerate() {
        let mut acc = vec![0.0f64; dim];
        for tok in &chunk.tokens {
            let dir = cache.entry(tok.as_str()).or_insert_with(|| {
                let mut h = std::collections::hash_map::DefaultHasher::new();
                use std::hash::{Hash, Hasher};
                tok.hash(&mut h);
                seed.hash(&mut h);
                let mut trng = ChaCha20Rng::seed_from_u64(h.finish());
                (0..dim)
                    .map(|_| {
                        use rand_distr::StandardNormal;
                        trng.sample::<f64, _>(StandardNormal)
                    })
                    .collect()
            });
            for (a, d) in acc.iter_mut().zip(dir.iter()) {
                *a += d;
            }
        }
        let norm = chunk.tokens.len().max(1) as f64;
        for (j, a) in acc.iter().enumerate() {
            data[(i, j)] = a / norm;
        }
    }
    let keys = chunkset
        .chunks
        .iter()
        .map(|c| (c.doc_id.clone(), c.chunk_index))
        .collect();
    EmbeddingMatrix { data, keys }
}
