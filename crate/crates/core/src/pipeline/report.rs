//! The discovery report: significant topics with representative n-grams,
//! coefficients, stars, and the documents that carry each topic hardest.

use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::error::{CoreError, Result};
use crate::inference::{InferenceTable, TestKind};
use crate::lasso::FeatureGroup;
use crate::metrics::MetricsReport;
use crate::topics::{SignedTerm, TopicModel};

/// Significance stars, Table-style: * p<0.05, ** p<0.01, *** p<0.001
/// (strict inequalities).
pub fn stars(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.001 => "***",
        Some(p) if p < 0.01 => "**",
        Some(p) if p < 0.05 => "*",
        _ => "",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicEntry {
    pub topic: usize,
    pub name: String,
    /// One-step debiased coefficient, standardized scale.
    pub coefficient: f64,
    pub p_value: Option<f64>,
    pub stars: String,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub significant: bool,
    pub degenerate: bool,
    pub top_terms: Vec<SignedTerm>,
    /// Document ids by |topic weight|, strongest first.
    pub top_documents: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateEntry {
    pub name: String,
    pub coefficient: f64,
    pub p_value: Option<f64>,
    pub stars: String,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub wald: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub branch: String,
    pub lambda: f64,
    pub seed: u64,
    pub alpha: f64,
    /// Selected topics sorted by p-value ascending, then |coefficient|
    /// descending; `significant` marks p < alpha.
    pub entries: Vec<TopicEntry>,
    pub covariates: Vec<CovariateEntry>,
    pub metrics: MetricsReport,
    pub n_excluded_documents: usize,
    /// Methodological divergences a reader must know when comparing runs.
    pub divergence_notes: Vec<String>,
    pub branch_warnings: Vec<String>,
    /// Resolved configuration, sufficient to rerun the pipeline exactly.
    pub config_echo: String,
}

pub(super) fn divergence_notes() -> Vec<String> {
    vec![
        "lemmatisation replaced by deterministic suffix-stripping stemming".into(),
        "dimensionality reduction and clustering use PCA + k-means".into(),
        "lambda applies to the sum-form penalty: NLL(beta) + lambda * sum_j |beta_j|".into(),
        "TFIDF variant: raw counts, smoothed idf ln((1+n)/(1+df)) + 1, L2 row norm".into(),
    ]
}

/// Builds the report body from one run's inference table and topic model.
#[allow(clippy::too_many_arguments)]
pub(super) fn topic_report(
    config: &PipelineConfig,
    inference: &InferenceTable,
    model: Option<&TopicModel>,
    usable_ids: &[String],
    metrics: MetricsReport,
    lambda: f64,
    branch_warnings: Vec<String>,
    n_excluded: usize,
) -> Result<DiscoveryReport> {
    let alpha = config.report.alphas.first().copied().unwrap_or(0.05);
    let top_k_docs = config.report.top_k_docs;

    let mut entries = Vec::new();
    let mut covariates = Vec::new();
    for row in &inference.rows {
        match row.group {
            FeatureGroup::Covariate => covariates.push(CovariateEntry {
                name: row.name.clone(),
                coefficient: row.coefficient,
                p_value: row.p_value,
                stars: stars(row.p_value).to_string(),
                ci_low: row.ci_low,
                ci_high: row.ci_high,
                wald: row.kind == TestKind::Wald,
            }),
            FeatureGroup::Topic => {
                let model = model.ok_or_else(|| {
                    CoreError::Config("inference has topic rows but no topic model".into())
                })?;
                let topic = row.column;
                if topic >= model.n_topics() {
                    return Err(CoreError::Config(format!(
                        "inference row `{}` does not align with the topic model",
                        row.name
                    )));
                }
                if model.n_docs() != usable_ids.len() {
                    return Err(CoreError::Config(
                        "topic model and corpus ids are misaligned".into(),
                    ));
                }
                entries.push(TopicEntry {
                    topic,
                    name: row.name.clone(),
                    coefficient: row.coefficient,
                    p_value: row.p_value,
                    stars: stars(row.p_value).to_string(),
                    ci_low: row.ci_low,
                    ci_high: row.ci_high,
                    significant: row.p_value.map(|p| p < alpha).unwrap_or(false),
                    degenerate: row.degenerate,
                    top_terms: model.topic_labels.get(topic).cloned().unwrap_or_default(),
                    top_documents: top_documents(model, topic, usable_ids, top_k_docs),
                });
            }
        }
    }

    entries.sort_by(|a, b| {
        let pa = a.p_value.unwrap_or(f64::INFINITY);
        let pb = b.p_value.unwrap_or(f64::INFINITY);
        pa.partial_cmp(&pb)
            .unwrap()
            .then_with(|| {
                b.coefficient
                    .abs()
                    .partial_cmp(&a.coefficient.abs())
                    .unwrap()
            })
            .then_with(|| a.topic.cmp(&b.topic))
    });
    covariates.sort_by(|a, b| {
        let pa = a.p_value.unwrap_or(f64::INFINITY);
        let pb = b.p_value.unwrap_or(f64::INFINITY);
        pa.partial_cmp(&pb)
            .unwrap()
            .then_with(|| a.name.cmp(&b.name))
    });

    Ok(DiscoveryReport {
        branch: format!("{:?}", config.topics.branch).to_lowercase(),
        lambda,
        seed: config.seed,
        alpha,
        entries,
        covariates,
        metrics,
        n_excluded_documents: n_excluded,
        divergence_notes: divergence_notes(),
        branch_warnings,
        config_echo: config.to_toml(),
    })
}

/// Document ids with the largest |doc_topic| weight in a topic column.
fn top_documents(
    model: &TopicModel,
    topic: usize,
    ids: &[String],
    top_k: usize,
) -> Vec<String> {
    let col = model.doc_topic.column(topic);
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        col[b]
            .abs()
            .partial_cmp(&col[a].abs())
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    order.into_iter().take(top_k).map(|i| ids[i].clone()).collect()
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        Some(p) => format!("{p:.3e}"),
        None => "degenerate".into(),
    }
}

/// Plain-text rendering of the metrics block. Rows mirror the summary-table
/// layout: medians, significance counts per alpha, selection counts, MDR,
/// AUROC.
pub fn render_metrics_text(m: &MetricsReport) -> String {
    let mut out = String::new();
    let name = |g: FeatureGroup| match g {
        FeatureGroup::Topic => "Topics",
        FeatureGroup::Covariate => "Covariates",
    };
    let headers: Vec<String> = m.groups.iter().map(|g| name(g.group).to_string()).collect();
    out.push_str(&format!("{:<22}{}\n", "", headers.join("\t")));
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    out.push_str(&format!(
        "{:<22}{}\n",
        "Median Coef",
        m.groups
            .iter()
            .map(|g| fmt_opt(g.median_coefficient))
            .collect::<Vec<_>>()
            .join("\t")
    ));
    out.push_str(&format!(
        "{:<22}{}\n",
        "Median PV",
        m.groups
            .iter()
            .map(|g| fmt_opt(g.median_p_value))
            .collect::<Vec<_>>()
            .join("\t")
    ));
    for (i, alpha) in m.alphas.iter().enumerate() {
        out.push_str(&format!(
            "{:<22}{}\n",
            format!("No. Sig. (a={alpha})"),
            m.groups
                .iter()
                .map(|g| g.n_significant[i].to_string())
                .collect::<Vec<_>>()
                .join("\t")
        ));
    }
    out.push_str(&format!(
        "{:<22}{}\n",
        "No. Selected",
        m.groups
            .iter()
            .map(|g| g.n_selected.to_string())
            .collect::<Vec<_>>()
            .join("\t")
    ));
    out.push_str(&format!(
        "{:<22}{}\n",
        "Total No.",
        m.groups
            .iter()
            .map(|g| g.n_total.to_string())
            .collect::<Vec<_>>()
            .join("\t")
    ));
    out.push_str(&format!(
        "{:<22}{}\n",
        "Median Dev. Ratio",
        fmt_opt(m.median_deviance_ratio)
    ));
    out.push_str(&format!("{:<22}{}\n", "AUROC", fmt_opt(m.auroc)));
    out
}

/// Plain-text rendering of the whole report.
pub fn render_report_text(r: &DiscoveryReport) -> String {
    let mut out = String::new();
    out.push_str("== topic discovery report ==\n");
    out.push_str(&format!(
        "branch: {}   lambda: {:.6}   seed: {}   alpha: {}\n",
        r.branch, r.lambda, r.seed, r.alpha
    ));
    out.push_str(&format!(
        "excluded documents: {}\n",
        r.n_excluded_documents
    ));
    out.push_str("\n-- metrics --\n");
    out.push_str(&render_metrics_text(&r.metrics));

    out.push_str("\n-- selected topics (p ascending; * p<0.05, ** p<0.01, *** p<0.001) --\n");
    if r.entries.is_empty() {
        out.push_str("(none)\n");
    }
    for e in &r.entries {
        let terms = e
            .top_terms
            .iter()
            .map(|t| {
                if t.weight < 0.0 {
                    format!("-{}", t.term)
                } else {
                    t.term.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!(
            "{:<10} {:>10.4}{:<4} p={:<12} {}\n",
            e.name,
            e.coefficient,
            e.stars,
            fmt_p(e.p_value),
            terms
        ));
        out.push_str(&format!(
            "{:<10} docs: {}\n",
            "",
            e.top_documents.join(", ")
        ));
    }

    if !r.covariates.is_empty() {
        out.push_str("\n-- covariates --\n");
        for c in &r.covariates {
            let kind = if c.wald { "wald" } else { "selective" };
            out.push_str(&format!(
                "{:<18} {:>10.4}{:<4} p={:<12} [{kind}]\n",
                c.name,
                c.coefficient,
                c.stars,
                fmt_p(c.p_value)
            ));
        }
    }

    out.push_str("\n-- divergences --\n");
    for d in &r.divergence_notes {
        out.push_str(&format!("- {d}\n"));
    }
    if !r.branch_warnings.is_empty() {
        out.push_str("\n-- warnings --\n");
        for w in &r.branch_warnings {
            out.push_str(&format!("- {w}\n"));
        }
    }
    out
}
