//! Run-directory artifacts: every intermediate written as a text file with a
//! content hash recorded in the manifest. Formats are stable so reruns with
//! the same config and corpus are byte-identical.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::report::{render_report_text, stars};
use super::{PipelineConfig, PipelineRun};
use crate::error::Result;
use crate::sparse::SparseDocTermMatrix;
use crate::text::Vocabulary;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects artifact bytes and writes them with a manifest of hashes.
pub struct ArtifactWriter {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Self {
        ArtifactWriter {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(self.dir.join("manifest.json"))?);
        let json = serde_json::to_string_pretty(&self.hashes)?;
        f.write_all(json.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

/// Two-column vocabulary export: term <TAB> document frequency.
pub fn vocabulary_text(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for t in 0..vocab.len() {
        out.push_str(&format!("{}\t{}\n", vocab.term(t), vocab.df(t)));
    }
    out
}

/// Triplet export with a shape header line `n_docs <TAB> n_terms`.
pub fn matrix_triplets_text(m: &SparseDocTermMatrix) -> String {
    let mut out = format!("{}\t{}\n", m.n_docs(), m.n_terms());
    for (r, c, v) in m.triplets() {
        out.push_str(&format!("{r}\t{c}\t{v:?}\n"));
    }
    out
}

fn fit_tables(run: &PipelineRun) -> (String, String) {
    let fit = &run.fit;
    let mut coefs = String::from("name\traw_beta\tstd_beta\tselected\n");
    // We only have standardized betas here; raw-scale via the report is not
    // reconstructible without the design, so the run keeps both.
    for (j, name) in run.design_names.iter().enumerate() {
        let selected = fit.active_set.contains(&j);
        coefs.push_str(&format!(
            "{name}\t{:?}\t{:?}\t{}\n",
            run.raw_betas[j], fit.beta[j], selected as u8
        ));
    }
    let mut path = String::from("lambda\tdeviance_ratio\n");
    for p in &run.path_fit.path {
        path.push_str(&format!("{:?}\t{:?}\n", p.lambda, p.deviance_ratio));
    }
    (coefs, path)
}

fn inference_table_text(run: &PipelineRun) -> String {
    let mut out = String::from("variable\tcoef\tp\tci_low\tci_high\tstars\tkind\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_else(|| "NA".into());
    for r in &run.inference.rows {
        out.push_str(&format!(
            "{}\t{:?}\t{}\t{}\t{}\t{}\t{:?}\n",
            r.name,
            r.coefficient,
            fmt(r.p_value),
            fmt(r.ci_low),
            fmt(r.ci_high),
            stars(r.p_value),
            r.kind
        ));
    }
    out
}

/// Writes every artifact of a finished run.
pub fn write_run(config: &PipelineConfig, run: &PipelineRun, dir: &Path) -> Result<()> {
    let mut w = ArtifactWriter::new(dir);

    w.write("config.resolved.toml", config.to_toml().as_bytes())?;

    let mut exclusions = String::new();
    for e in &run.excluded {
        exclusions.push_str(&serde_json::to_string(e)?);
        exclusions.push('\n');
    }
    w.write("exclusions.jsonl", exclusions.as_bytes())?;

    if let Some(vocab) = &run.vocab {
        w.write("vocabulary.tsv", vocabulary_text(vocab).as_bytes())?;
    }
    if let Some(m) = &run.tfidf {
        w.write("tfidf.triplets", matrix_triplets_text(m).as_bytes())?;
    }
    if let Some(model) = &run.model {
        w.write(
            "doc_topic.tsv",
            dense_matrix_text(&model.doc_topic).as_bytes(),
        )?;
        if model.topic_term.ncols() > 0 {
            w.write(
                "topic_term.tsv",
                dense_matrix_text(&model.topic_term).as_bytes(),
            )?;
        }
    }

    let (coefs, path) = fit_tables(run);
    w.write("fit.tsv", coefs.as_bytes())?;
    w.write("path.tsv", path.as_bytes())?;
    w.write("inference.tsv", inference_table_text(run).as_bytes())?;

    w.write(
        "metrics.json",
        serde_json::to_string_pretty(&run.report.metrics)?.as_bytes(),
    )?;
    w.write(
        "metrics.txt",
        super::report::render_metrics_text(&run.report.metrics).as_bytes(),
    )?;
    w.write(
        "report.json",
        serde_json::to_string_pretty(&run.report)?.as_bytes(),
    )?;
    w.write("report.txt", render_report_text(&run.report).as_bytes())?;

    w.finish()
}

/// Dense matrix dump with a shape header.
pub fn dense_matrix_text(m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = format!("{}\t{}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
