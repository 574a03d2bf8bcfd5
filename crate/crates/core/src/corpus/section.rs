//! Rule-based sectionizer.
//!
//! Headers are matched on whole lines, case-insensitively, after trimming a
//! leading numbering prefix such as "4." or "B.". Sections are the maximal
//! spans between successive header matches, taken in rule order.

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Document, Section};
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionRule {
    pub name: String,
    /// Regex for the header line, stored verbatim. Compiled with `(?i)` and
    /// anchored to the full line after the numbering prefix is stripped.
    pub pattern: String,
}

/// Ordered section rules. Rule order defines the expected document order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionRules {
    pub rules: Vec<SectionRule>,
    #[serde(default)]
    pub require_all: bool,
}

/// A compiled rule set, reusable across documents.
#[derive(Debug, Clone)]
pub struct CompiledSectionRules {
    rules: Vec<(String, Regex)>,
    require_all: bool,
}

/// The sectionizer verdict for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SectionizeOutcome {
    /// All matched, in order (possibly a subset when `require_all` is off).
    /// Warnings carry non-fatal findings such as duplicate headers.
    Usable { warnings: Vec<String> },
    /// Flagged unusable; the string is a reason code for the exclusion report.
    Excluded(String),
}

impl SectionizeOutcome {
    pub fn is_usable(&self) -> bool {
        matches!(self, SectionizeOutcome::Usable { .. })
    }
}

impl SectionRules {
    pub fn compile(&self) -> Result<CompiledSectionRules> {
        let mut seen = std::collections::HashSet::new();
        let mut rules = Vec::with_capacity(self.rules.len());
        for rule in &self.rules {
            if !seen.insert(rule.name.clone()) {
                return Err(CoreError::Config(format!(
                    "duplicate section name `{}`",
                    rule.name
                )));
            }
            let anchored = format!("(?i)^(?:{})$", rule.pattern);
            let re = Regex::new(&anchored).map_err(|e| CoreError::Regex {
                pattern: rule.pattern.clone(),
                message: e.to_string(),
            })?;
            rules.push((rule.name.clone(), re));
        }
        Ok(CompiledSectionRules {
            rules,
            require_all: self.require_all,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CoreError::Toml(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("section rules serialize")
    }

    pub fn names(&self) -> Vec<&str> {
        self.rules.iter().map(|r| r.name.as_str()).collect()
    }
}

/// Strips a leading "4." / "B." / "(iv)" style numbering prefix and
/// surrounding whitespace from a header candidate line.
fn strip_numbering(line: &str) -> &str {
    let trimmed = line.trim();
    let rest = trimmed
        .strip_prefix('(')
        .map(|r| r.trim_start_matches(|c: char| c.is_ascii_alphanumeric()))
        .and_then(|r| r.strip_prefix(')'))
        .unwrap_or_else(|| {
            let head_len = trimmed
                .char_indices()
                .take_while(|&(i, c)| i < 4 && (c.is_ascii_alphanumeric()))
                .count();
            if head_len > 0 {
                let (head, tail) = trimmed.split_at(head_len);
                if let Some(after) = tail.strip_prefix('.') {
                    // Only treat "X." as numbering when X is short: "4", "B",
                    // "iv" -- not a whole word like "Facts.".
                    if head.len() <= 3 {
                        return after;
                    }
                }
            }
            trimmed
        });
    rest.trim()
}

struct HeaderHit {
    rule_idx: usize,
    line_start: usize,
    line_end: usize,
}

impl CompiledSectionRules {
    pub fn require_all(&self) -> bool {
        self.require_all
    }

    /// Populates `doc.sections` and reports whether the document is usable.
    /// Duplicate headers keep the first match; out-of-order headers flag the
    /// document.
    pub fn sectionize(&self, doc: &mut Document) -> Result<SectionizeOutcome> {
        if doc.text.is_empty() {
            return Err(CoreError::Document {
                id: doc.id.clone(),
                message: "empty text".into(),
            });
        }

        let mut hits: Vec<HeaderHit> = Vec::new();
        let mut duplicates: Vec<&str> = Vec::new();
        let mut pos = 0usize;
        for line in doc.text.split_inclusive('\n') {
            let line_start = pos;
            pos += line.len();
            let content = line.strip_suffix('\n').unwrap_or(line);
            let stripped = strip_numbering(content);
            if stripped.is_empty() {
                continue;
            }
            for (idx, (name, re)) in self.rules.iter().enumerate() {
                if re.is_match(stripped) {
                    if hits.iter().any(|h| h.rule_idx == idx) {
                        duplicates.push(name);
                    } else {
                        hits.push(HeaderHit {
                            rule_idx: idx,
                            line_start,
                            line_end: line_start + content.len(),
                        });
                    }
                    break;
                }
            }
        }

        if hits.is_empty() {
            return Err(CoreError::Document {
                id: doc.id.clone(),
                message: "no section headers matched".into(),
            });
        }

        let in_order = hits.windows(2).all(|w| w[0].rule_idx < w[1].rule_idx);

        let mut sections = Vec::with_capacity(hits.len());
        for (i, hit) in hits.iter().enumerate() {
            let body_start = (hit.line_end + 1).min(doc.text.len());
            let body_end = hits
                .get(i + 1)
                .map(|next| next.line_start)
                .unwrap_or(doc.text.len());
            let body_span = body_start..body_end.max(body_start);
            let body = doc.text[body_span.clone()].trim().to_string();
            sections.push(Section {
                name: self.rules[hit.rule_idx].0.clone(),
                body,
                header_span: hit.line_start..hit.line_end,
                body_span,
            });
        }
        doc.sections = sections;

        if !in_order {
            return Ok(SectionizeOutcome::Excluded("headers_out_of_order".into()));
        }
        if self.require_all && doc.sections.len() < self.rules.len() {
            return Ok(SectionizeOutcome::Excluded(format!(
                "missing_sections:{}",
                self.rules.len() - doc.sections.len()
            )));
        }
        // First match won; duplicates are reported, not fatal.
        let warnings = duplicates
            .iter()
            .map(|name| format!("duplicate_header:{name}"))
            .collect();
        Ok(SectionizeOutcome::Usable { warnings })
    }
}
