//! Corpus loading: line-delimited records mapped onto [`Document`]s.

mod mask;
mod section;

pub use mask::{CompiledMaskPolicy, DropPhrase, MaskPolicy};
pub use section::{CompiledSectionRules, SectionRule, SectionRules, SectionizeOutcome};

use std::collections::HashSet;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// One decision: raw text, named sections (populated by the sectionizer),
/// a binary outcome, and optional structured covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub sections: Vec<Section>,
    /// Exactly 0 or 1.
    pub outcome: u8,
    pub covariates: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    /// Trimmed body text between this header and the next.
    pub body: String,
    /// Byte span of the header line within `Document::text`.
    pub header_span: Range<usize>,
    /// Byte span of the raw (untrimmed) body within `Document::text`.
    pub body_span: Range<usize>,
}

/// Field-name mapping from raw records onto [`Document`] fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSchema {
    pub id_field: String,
    pub text_field: String,
    /// Optional field holding pre-split sections as {name: body} pairs.
    #[serde(default)]
    pub sections_field: Option<String>,
    pub outcome_field: String,
    /// Ordered (prefix, label) pairs. An outcome string maps to the label of
    /// the first entry whose key is a case-insensitive prefix of it. Numeric
    /// 0/1 outcomes are accepted directly.
    #[serde(default)]
    pub outcome_map: Vec<(String, u8)>,
    /// Covariate field names, in the order they enter the design matrix.
    #[serde(default)]
    pub covariate_fields: Vec<String>,
}

impl CorpusSchema {
    /// The mapping used when records already carry {0,1} outcomes.
    pub fn plain() -> Self {
        CorpusSchema {
            id_field: "id".into(),
            text_field: "text".into(),
            sections_field: None,
            outcome_field: "outcome".into(),
            outcome_map: Vec::new(),
            covariate_fields: Vec::new(),
        }
    }

    fn map_outcome(&self, raw: &serde_json::Value) -> Option<u8> {
        match raw {
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(0) => Some(0),
                Some(1) => Some(1),
                _ => None,
            },
            serde_json::Value::Bool(b) => Some(u8::from(*b)),
            serde_json::Value::String(s) => {
                let lower = s.trim().to_lowercase();
                self.outcome_map
                    .iter()
                    .find(|(prefix, _)| lower.starts_with(&prefix.to_lowercase()))
                    .map(|&(_, label)| label)
            }
            _ => None,
        }
    }
}

/// Why a document was dropped from the usable set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

/// Loads a UTF-8 line-delimited record file. Every record must produce a
/// valid document; malformed records abort the load with the line number.
pub fn load_corpus(path: &Path, schema: &CorpusSchema) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut docs = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut covariate_len: Option<usize> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CoreError::Record {
                line: lineno,
                message: format!("invalid JSON: {e}"),
            })?;

        let id = record
            .get(&schema.id_field)
            .and_then(|v| v.as_str())
            .ok_or_else(|| CoreError::Record {
                line: lineno,
                message: format!("missing field `{}`", schema.id_field),
            })?
            .to_string();
        if !seen_ids.insert(id.clone()) {
            return Err(CoreError::DuplicateId(id));
        }

        let (text, sections) = read_text(&record, schema, &id)?;

        let outcome_raw = record
            .get(&schema.outcome_field)
            .ok_or_else(|| CoreError::Document {
                id: id.clone(),
                message: format!("missing field `{}`", schema.outcome_field),
            })?;
        let outcome = schema
            .map_outcome(outcome_raw)
            .ok_or_else(|| CoreError::Document {
                id: id.clone(),
                message: format!("outcome {outcome_raw} is not binary and matches no mapping"),
            })?;

        let mut covariates = Vec::with_capacity(schema.covariate_fields.len());
        for name in &schema.covariate_fields {
            let value = record
                .get(name)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| CoreError::Covariates {
                    id: id.clone(),
                    message: format!("missing or non-numeric covariate `{name}`"),
                })?;
            covariates.push((name.clone(), value));
        }
        match covariate_len {
            None => covariate_len = Some(covariates.len()),
            Some(k) if k != covariates.len() => {
                return Err(CoreError::Covariates {
                    id,
                    message: format!("expected {k} covariates, found {}", covariates.len()),
                })
            }
            _ => {}
        }

        docs.push(Document {
            id,
            text,
            sections,
            outcome,
            covariates,
        });
    }
    Ok(docs)
}

fn read_text(
    record: &serde_json::Value,
    schema: &CorpusSchema,
    id: &str,
) -> Result<(String, Vec<Section>)> {
    if let Some(sections_field) = &schema.sections_field {
        if let Some(raw) = record.get(sections_field) {
            // Pre-split sections: array of [name, body] pairs. The full text
            // is their concatenation, with names as header lines.
            let pairs: Vec<(String, String)> =
                serde_json::from_value(raw.clone()).map_err(|e| CoreError::Document {
                    id: id.to_string(),
                    message: format!("bad `{sections_field}` field: {e}"),
                })?;
            let mut text = String::new();
            let mut sections = Vec::new();
            for (name, body) in pairs {
                let header_start = text.len();
                text.push_str(&name);
                let header_end = text.len();
                text.push('\n');
                let body_start = text.len();
                text.push_str(&body);
                let body_end = text.len();
                text.push('\n');
                sections.push(Section {
                    body: body.trim().to_string(),
                    name,
                    header_span: header_start..header_end,
                    body_span: body_start..body_end,
                });
            }
            return Ok((text, sections));
        }
    }
    let text = record
        .get(&schema.text_field)
        .and_then(|v| v.as_str())
        .ok_or_else(|| CoreError::Document {
            id: id.to_string(),
            message: format!("missing field `{}`", schema.text_field),
        })?
        .to_string();
    Ok((text, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_corpus(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn round_trips_three_records() {
        let f = write_corpus(&[
            r#"{"id":"d1","text":"alpha","outcome":1}"#,
            r#"{"id":"d2","text":"beta","outcome":0}"#,
            r#"{"id":"d3","text":"gamma","outcome":1}"#,
        ]);
        let docs = load_corpus(f.path(), &CorpusSchema::plain()).unwrap();
        assert_eq!(docs.len(), 3);
        let outcomes: Vec<u8> = docs.iter().map(|d| d.outcome).collect();
        assert_eq!(outcomes, vec![1, 0, 1]);
        assert_eq!(docs[1].text, "beta");
    }

    #[test]
    fn maps_string_outcomes_by_leading_prefix() {
        let f = write_corpus(&[
            r#"{"id":"d1","text":"x","outcome":"Transfer with dissent"}"#,
            r#"{"id":"d2","text":"y","outcome":"Complaint denied"}"#,
        ]);
        let mut schema = CorpusSchema::plain();
        schema.outcome_map = vec![
            ("transfer".into(), 1),
            ("cancellation".into(), 1),
            ("complaint denied".into(), 0),
        ];
        let docs = load_corpus(f.path(), &schema).unwrap();
        assert_eq!(docs[0].outcome, 1);
        assert_eq!(docs[1].outcome, 0);
    }

    #[test]
    fn missing_text_names_the_record() {
        let f = write_corpus(&[r#"{"id":"d9","outcome":1}"#]);
        let err = load_corpus(f.path(), &CorpusSchema::plain()).unwrap_err();
        assert!(err.to_string().contains("d9"), "got: {err}");
    }

    #[test]
    fn rejects_non_binary_outcome_and_duplicates() {
        let f = write_corpus(&[r#"{"id":"d1","text":"x","outcome":2}"#]);
        assert!(load_corpus(f.path(), &CorpusSchema::plain()).is_err());

        let f = write_corpus(&[
            r#"{"id":"d1","text":"x","outcome":1}"#,
            r#"{"id":"d1","text":"y","outcome":0}"#,
        ]);
        assert!(matches!(
            load_corpus(f.path(), &CorpusSchema::plain()),
            Err(CoreError::DuplicateId(_))
        ));
    }

    #[test]
    fn rejects_inconsistent_covariates() {
        let f = write_corpus(&[
            r#"{"id":"d1","text":"x","outcome":1,"panel":1.0}"#,
            r#"{"id":"d2","text":"y","outcome":0}"#,
        ]);
        let mut schema = CorpusSchema::plain();
        schema.covariate_fields = vec!["panel".into()];
        let err = load_corpus(f.path(), &schema).unwrap_err();
        assert!(matches!(err, CoreError::Covariates { .. }));
    }

    #[test]
    fn reads_presplit_sections() {
        let f = write_corpus(&[
            r#"{"id":"d1","sections":[["Parties","foo"],["Decision","bar"]],"outcome":1}"#,
        ]);
        let mut schema = CorpusSchema::plain();
        schema.sections_field = Some("sections".into());
        let docs = load_corpus(f.path(), &schema).unwrap();
        assert_eq!(docs[0].sections.len(), 2);
        assert_eq!(docs[0].sections[0].body, "foo");
        assert_eq!(docs[0].text, "Parties\nfoo\nDecision\nbar\n");
    }
}
