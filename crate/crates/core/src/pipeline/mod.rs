//! Pipeline orchestration: one config in, a discovery report and a directory
//! of hashed artifacts out.

mod artifacts;
mod report;

pub use artifacts::{sha256_hex, ArtifactWriter};
pub use report::{render_metrics_text, render_report_text, stars, DiscoveryReport, TopicEntry};

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cluster::{
    chunk_documents, cluster_topic_model, load_embeddings, ClusterBranchConfig,
};
use crate::corpus::{
    load_corpus, CorpusSchema, Document, Exclusion, MaskPolicy, SectionRules,
};
use crate::error::{CoreError, Result};
use crate::inference::{fixed_lambda_inference, InferenceTable};
use crate::lasso::{
    estimate_lambda_heuristic, fit_at, fit_path, median_deviance_ratio, DesignMatrix,
    FeatureGroup, LassoFit, RawColumn,
};
use crate::lsa::lsa_topic_model;
use crate::metrics::{auroc, significance_summary, white_noise_features, MetricsReport};
use crate::text::{ngrams, normalize, tfidf, StopwordList, Vocabulary};
use crate::topics::{SignedTerm, TopicModel, TopicSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicBranch {
    Lsa,
    Ctfidf,
    Ohe,
    None,
    Noise,
}

impl std::str::FromStr for TopicBranch {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsa" => Ok(TopicBranch::Lsa),
            "ctfidf" => Ok(TopicBranch::Ctfidf),
            "ohe" => Ok(TopicBranch::Ohe),
            "none" => Ok(TopicBranch::None),
            "noise" => Ok(TopicBranch::Noise),
            other => Err(CoreError::Config(format!("unknown topic branch `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LambdaMode {
    Fixed { value: f64 },
    Heuristic { draws: usize },
}

fn default_ngram_min() -> usize {
    1
}
fn default_ngram_max() -> usize {
    3
}
fn default_min_df() -> u32 {
    5
}
fn default_max_terms() -> usize {
    2500
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabularyConfig {
    #[serde(default = "default_min_df")]
    pub min_df: u32,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    #[serde(default = "default_ngram_min")]
    pub ngram_min: usize,
    #[serde(default = "default_ngram_max")]
    pub ngram_max: usize,
}

impl Default for VocabularyConfig {
    fn default() -> Self {
        VocabularyConfig {
            min_df: 5,
            max_terms: 2500,
            ngram_min: 1,
            ngram_max: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicsConfig {
    pub branch: TopicBranch,
    /// Topic count (ignored by `ohe` and `none`).
    #[serde(default = "default_m")]
    pub m: usize,
    /// Chunk embeddings file; required by the `ctfidf` branch.
    #[serde(default)]
    pub embeddings_path: Option<PathBuf>,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    #[serde(default = "default_pca_dims")]
    pub pca_dims: usize,
    #[serde(default = "default_k_multiple")]
    pub initial_k_multiple: usize,
}

fn default_m() -> usize {
    250
}
fn default_chunk_size() -> usize {
    128
}
fn default_pca_dims() -> usize {
    5
}
fn default_k_multiple() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateConfig {
    /// Covariates are penalized by default; list exceptions here.
    #[serde(default)]
    pub unpenalized: Vec<String>,
    /// Set to false to leave every covariate unpenalized.
    #[serde(default = "default_true")]
    pub penalize_by_default: bool,
}

fn default_true() -> bool {
    true
}

impl Default for CovariateConfig {
    fn default() -> Self {
        CovariateConfig {
            unpenalized: Vec::new(),
            penalize_by_default: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConfig {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_top_k_terms")]
    pub top_k_terms: usize,
    #[serde(default = "default_top_k_docs")]
    pub top_k_docs: usize,
}

fn default_alphas() -> Vec<f64> {
    vec![0.05, 0.01, 0.001]
}
fn default_top_k_terms() -> usize {
    10
}
fn default_top_k_docs() -> usize {
    5
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            alphas: default_alphas(),
            top_k_terms: default_top_k_terms(),
            top_k_docs: default_top_k_docs(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathConfig {
    #[serde(default = "default_path_points")]
    pub n_lambdas: usize,
    #[serde(default = "default_lambda_min_ratio")]
    pub lambda_min_ratio: f64,
}

fn default_path_points() -> usize {
    100
}
fn default_lambda_min_ratio() -> f64 {
    1e-4
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            n_lambdas: default_path_points(),
            lambda_min_ratio: default_lambda_min_ratio(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub corpus_path: PathBuf,
    #[serde(default)]
    pub schema: Option<CorpusSchema>,
    pub section_rules_path: PathBuf,
    pub mask_policy_path: PathBuf,
    #[serde(default)]
    pub stopwords_path: Option<PathBuf>,
    pub topics: TopicsConfig,
    #[serde(default)]
    pub vocabulary: VocabularyConfig,
    pub lambda: LambdaMode,
    #[serde(default)]
    pub covariates: CovariateConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| CoreError::Toml(e.to_string()))?;
        // Relative paths resolve against the config file location.
        if let Some(base) = path.parent() {
            cfg.corpus_path = base.join(&cfg.corpus_path);
            cfg.section_rules_path = base.join(&cfg.section_rules_path);
            cfg.mask_policy_path = base.join(&cfg.mask_policy_path);
            if let Some(p) = cfg.stopwords_path.take() {
                cfg.stopwords_path = Some(base.join(p));
            }
            if let Some(p) = cfg.topics.embeddings_path.take() {
                cfg.topics.embeddings_path = Some(base.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, path) in [
            ("corpus_path", &self.corpus_path),
            ("section_rules_path", &self.section_rules_path),
            ("mask_policy_path", &self.mask_policy_path),
        ] {
            if !path.exists() {
                return Err(CoreError::Config(format!(
                    "{label} `{}` does not exist",
                    path.display()
                )));
            }
        }
        if self.topics.m < 1 {
            return Err(CoreError::Config("topic count m must be >= 1".into()));
        }
        if self.topics.branch == TopicBranch::Ctfidf {
            match &self.topics.embeddings_path {
                Some(p) if p.exists() => {}
                Some(p) => {
                    return Err(CoreError::Config(format!(
                        "embeddings_path `{}` does not exist",
                        p.display()
                    )))
                }
                None => {
                    return Err(CoreError::Config(
                        "the ctfidf branch requires topics.embeddings_path".into(),
                    ))
                }
            }
        }
        if let LambdaMode::Fixed { value } = self.lambda {
            if !(value >= 0.0) {
                return Err(CoreError::Config("lambda value must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Everything a finished run produced in memory.
pub struct PipelineRun {
    pub report: DiscoveryReport,
    pub usable_ids: Vec<String>,
    pub excluded: Vec<Exclusion>,
    pub inference: InferenceTable,
    pub fit: LassoFit,
    pub path_fit: LassoFit,
    pub model: Option<TopicModel>,
    pub design_names: Vec<String>,
    /// De-standardized coefficients aligned with `design_names`.
    pub raw_betas: Vec<f64>,
    pub raw_intercept: f64,
    pub vocab: Option<Vocabulary>,
    pub tfidf: Option<crate::sparse::SparseDocTermMatrix>,
}

/// The prepared (masked) corpus shared by the feature branches.
pub struct MaskedCorpus {
    pub docs: Vec<Document>,
    pub masked: Vec<(String, String)>,
    pub excluded: Vec<Exclusion>,
}

/// Ingests, sectionizes, and masks the corpus. Returns usable documents in
/// input order plus the exclusion report; the usable/excluded split is
/// exhaustive.
pub fn prepare_corpus(config: &PipelineConfig) -> Result<MaskedCorpus> {
    let schema = config.schema.clone().unwrap_or_else(CorpusSchema::plain);
    let loaded = load_corpus(&config.corpus_path, &schema)?;

    let rules_text = std::fs::read_to_string(&config.section_rules_path)?;
    let rules = SectionRules::from_toml(&rules_text)?;
    let compiled_rules = rules.compile()?;
    let policy_text = std::fs::read_to_string(&config.mask_policy_path)?;
    let policy = MaskPolicy::from_toml(&policy_text)?.compile(&rules.names())?;

    let total = loaded.len();
    let mut docs = Vec::new();
    let mut masked = Vec::new();
    let mut excluded = Vec::new();
    for mut doc in loaded {
        let verdict = if doc.sections.is_empty() {
            match compiled_rules.sectionize(&mut doc) {
                Ok(v) => v,
                Err(CoreError::Document { id, message }) => {
                    excluded.push(Exclusion {
                        id,
                        reason: message,
                    });
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            crate::corpus::SectionizeOutcome::Usable {
                warnings: Vec::new(),
            }
        };
        match verdict {
            crate::corpus::SectionizeOutcome::Excluded(reason) => {
                excluded.push(Exclusion {
                    id: doc.id.clone(),
                    reason,
                });
            }
            crate::corpus::SectionizeOutcome::Usable { .. } => {
                let text = policy.mask(&doc);
                if text.trim().is_empty() {
                    excluded.push(Exclusion {
                        id: doc.id.clone(),
                        reason: "empty_masked_text".into(),
                    });
                } else {
                    masked.push((doc.id.clone(), text));
                    docs.push(doc);
                }
            }
        }
    }
    debug_assert_eq!(docs.len() + excluded.len(), total);
    Ok(MaskedCorpus {
        docs,
        masked,
        excluded,
    })
}

fn load_stopwords(config: &PipelineConfig) -> Result<StopwordList> {
    match &config.stopwords_path {
        Some(p) => StopwordList::from_file(p),
        None => Ok(StopwordList::english()),
    }
}

/// Topic-branch output: a model (None for the covariate-only branch) plus
/// the vocabulary when one was built.
pub struct BranchOutput {
    pub model: Option<TopicModel>,
    pub vocab: Option<Vocabulary>,
    pub tfidf: Option<crate::sparse::SparseDocTermMatrix>,
    pub warnings: Vec<String>,
}

/// Runs the configured topic branch over the masked corpus.
pub fn build_topics(
    config: &PipelineConfig,
    corpus: &MaskedCorpus,
    stopwords: &StopwordList,
) -> Result<BranchOutput> {
    let n = corpus.docs.len();
    let vc = &config.vocabulary;
    match config.topics.branch {
        TopicBranch::None => Ok(BranchOutput {
            model: None,
            vocab: None,
            tfidf: None,
            warnings: Vec::new(),
        }),
        TopicBranch::Noise => {
            let m = config.topics.m;
            let doc_topic = white_noise_features(n, m, config.seed);
            Ok(BranchOutput {
                model: Some(TopicModel {
                    doc_topic,
                    topic_term: DMatrix::zeros(m, 0),
                    topic_labels: vec![Vec::new(); m],
                    source: TopicSource::Noise,
                    explained_variance_ratio: Vec::new(),
                }),
                vocab: None,
                tfidf: None,
                warnings: Vec::new(),
            })
        }
        TopicBranch::Lsa | TopicBranch::Ohe => {
            let grams: Vec<Vec<String>> = corpus
                .masked
                .iter()
                .map(|(_, text)| {
                    let tokens = normalize(text, stopwords);
                    ngrams(&tokens, vc.ngram_min, vc.ngram_max)
                })
                .collect::<Result<_>>()?;
            let vocab = Vocabulary::build(&grams, vc.min_df, vc.max_terms)?;
            let ids: Vec<String> = corpus.masked.iter().map(|(id, _)| id.clone()).collect();
            let w = tfidf(&grams, &ids, &vocab)?;

            if config.topics.branch == TopicBranch::Ohe {
                // Indicator features per vocabulary n-gram; the topic-term
                // matrix is the identity over the vocabulary.
                let v = vocab.len();
                let mut doc_topic = DMatrix::zeros(n, v);
                for (r, row) in grams.iter().enumerate() {
                    for g in row {
                        if let Some(c) = vocab.index_of(g) {
                            doc_topic[(r, c)] = 1.0;
                        }
                    }
                }
                let labels = (0..v)
                    .map(|t| {
                        vec![SignedTerm {
                            term: vocab.term(t).to_string(),
                            weight: 1.0,
                        }]
                    })
                    .collect();
                Ok(BranchOutput {
                    model: Some(TopicModel {
                        doc_topic,
                        topic_term: DMatrix::identity(v, v),
                        topic_labels: labels,
                        source: TopicSource::Ohe,
                        explained_variance_ratio: Vec::new(),
                    }),
                    vocab: Some(vocab),
                    tfidf: Some(w),
                    warnings: Vec::new(),
                })
            } else {
                let m = config.topics.m.min(n.min(vocab.len()));
                let (model, factors) =
                    lsa_topic_model(&w, &vocab, m, config.seed, config.report.top_k_terms)?;
                Ok(BranchOutput {
                    model: Some(model),
                    vocab: Some(vocab),
                    tfidf: Some(w),
                    warnings: factors.warnings,
                })
            }
        }
        TopicBranch::Ctfidf => {
            let chunkset = chunk_documents(&corpus.masked, config.topics.chunk_size)?;
            if !chunkset.excluded.is_empty() {
                // prepare_corpus already drops empty masked texts.
                return Err(CoreError::Config(
                    "chunking excluded documents after masking; this should not happen".into(),
                ));
            }
            let path = config
                .topics
                .embeddings_path
                .as_ref()
                .expect("validated earlier");
            let embeddings = load_embeddings(path, &chunkset)?;
            let ccfg = ClusterBranchConfig {
                chunk_size: config.topics.chunk_size,
                initial_k_multiple: config.topics.initial_k_multiple,
                target_m: config.topics.m,
                pca_dims: config.topics.pca_dims,
                min_df: vc.min_df,
                max_terms: vc.max_terms,
                ngram_min: vc.ngram_min,
                ngram_max: vc.ngram_max,
                label_k: config.report.top_k_terms,
                seed: config.seed,
            };
            let out = cluster_topic_model(&corpus.masked, chunkset, &embeddings, stopwords, &ccfg)?;
            Ok(BranchOutput {
                model: Some(out.model),
                vocab: Some(out.vocab),
                tfidf: None,
                warnings: out.warnings,
            })
        }
    }
}

/// Assembles the regression design: topic features then covariates, with
/// penalty flags from the config.
pub fn assemble_design(
    config: &PipelineConfig,
    corpus: &MaskedCorpus,
    model: Option<&TopicModel>,
) -> Result<DesignMatrix> {
    let n = corpus.docs.len();
    let mut columns: Vec<RawColumn> = Vec::new();
    if let Some(model) = model {
        for t in 0..model.n_topics() {
            columns.push(RawColumn {
                name: format!("topic_{t:03}"),
                values: (0..n).map(|d| model.doc_topic[(d, t)]).collect(),
                penalized: true,
                group: FeatureGroup::Topic,
            });
        }
    }
    let covariate_names: Vec<String> = corpus
        .docs
        .first()
        .map(|d| d.covariates.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    for (c, name) in covariate_names.iter().enumerate() {
        let penalized = config.covariates.penalize_by_default
            && !config.covariates.unpenalized.contains(name);
        columns.push(RawColumn {
            name: name.clone(),
            values: corpus.docs.iter().map(|d| d.covariates[c].1).collect(),
            penalized,
            group: FeatureGroup::Covariate,
        });
    }
    if columns.is_empty() {
        return Err(CoreError::Config(
            "no features: the `none` branch needs covariates".into(),
        ));
    }
    DesignMatrix::standardize(columns)
}

/// Resolves lambda per the config. The heuristic runs on the covariate-only
/// design (intercept plus covariates), mirroring its use on specifications
/// without text features; with no covariates it reduces to the intercept.
pub fn resolve_lambda(
    config: &PipelineConfig,
    design: &DesignMatrix,
    y: &[f64],
) -> Result<f64> {
    match &config.lambda {
        LambdaMode::Fixed { value } => Ok(*value),
        LambdaMode::Heuristic { draws } => {
            let n = design.n_rows();
            let covariate_cols: Vec<usize> = (0..design.n_cols())
                .filter(|&j| design.groups[j] == FeatureGroup::Covariate)
                .collect();
            let mut x = DMatrix::zeros(n, covariate_cols.len() + 1);
            for i in 0..n {
                x[(i, 0)] = 1.0;
            }
            for (c, &j) in covariate_cols.iter().enumerate() {
                for i in 0..n {
                    x[(i, c + 1)] = design.x[(i, j)];
                }
            }
            estimate_lambda_heuristic(&x, y, *draws, config.seed)
        }
    }
}

/// Runs the full pipeline in memory. Artifact writing is layered on top by
/// [`run_pipeline_to_dir`].
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    let corpus = prepare_corpus(config)?;
    if corpus.docs.len() < 2 {
        return Err(CoreError::Config(format!(
            "only {} usable documents after masking",
            corpus.docs.len()
        )));
    }
    let stopwords = load_stopwords(config)?;
    let branch = build_topics(config, &corpus, &stopwords)?;
    let design = assemble_design(config, &corpus, branch.model.as_ref())?;
    let y: Vec<f64> = corpus.docs.iter().map(|d| d.outcome as f64).collect();

    let lambda = resolve_lambda(config, &design, &y)?;
    let fit = fit_at(&design, &y, lambda)?;
    let path_fit = fit_path(&design, &y, config.path.n_lambdas, config.path.lambda_min_ratio)?;

    let alpha = config.report.alphas.first().copied().unwrap_or(0.05);
    let inference = fixed_lambda_inference(&design, &y, &fit, alpha)?;

    // In-sample predicted probabilities for AUROC.
    let scores: Vec<f64> = (0..design.n_rows())
        .map(|i| {
            let mut eta = fit.intercept;
            for (j, &b) in fit.beta.iter().enumerate() {
                if b != 0.0 {
                    eta += design.x[(i, j)] * b;
                }
            }
            1.0 / (1.0 + (-eta).exp())
        })
        .collect();
    let auroc_value = auroc(&scores, &y)?;
    let mdr = median_deviance_ratio(&path_fit)?;

    let n_topics = branch.model.as_ref().map(|m| m.n_topics()).unwrap_or(0);
    let n_covariates = design
        .groups
        .iter()
        .filter(|g| **g == FeatureGroup::Covariate)
        .count();
    let mut group_totals = Vec::new();
    if n_topics > 0 {
        group_totals.push((FeatureGroup::Topic, n_topics));
    }
    if n_covariates > 0 {
        group_totals.push((FeatureGroup::Covariate, n_covariates));
    }
    let groups = significance_summary(&inference, &config.report.alphas, &group_totals);
    let metrics = MetricsReport {
        auroc: Some(auroc_value),
        median_deviance_ratio: Some(mdr),
        n_selected: inference.rows.len(),
        alphas: config.report.alphas.clone(),
        groups,
        n_degenerate: inference.n_degenerate,
    };

    let usable_ids: Vec<String> = corpus.docs.iter().map(|d| d.id.clone()).collect();
    let report = report::topic_report(
        config,
        &inference,
        branch.model.as_ref(),
        &usable_ids,
        metrics,
        lambda,
        branch.warnings.clone(),
        corpus.excluded.len(),
    )?;

    let (raw_intercept, raw_betas) = design.to_raw_scale(fit.intercept, &fit.beta);
    Ok(PipelineRun {
        report,
        usable_ids,
        excluded: corpus.excluded,
        inference,
        fit,
        path_fit,
        model: branch.model,
        design_names: design.names,
        raw_betas,
        raw_intercept,
        vocab: branch.vocab,
        tfidf: branch.tfidf,
    })
}

/// Runs the pipeline and writes every artifact (with content hashes) under
/// `out_dir`. Identical config and corpus produce byte-identical artifacts.
pub fn run_pipeline_to_dir(config: &PipelineConfig, out_dir: &Path) -> Result<PipelineRun> {
    std::fs::create_dir_all(out_dir)?;
    let run = run_pipeline(config)?;
    artifacts::write_run(config, &run, out_dir)?;
    Ok(run)
}
