//! Outcome masking: drops outcome-revealing sections and deletes
//! outcome-revealing phrases (with their linguistic variants) from what
//! remains.

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{CoreError, Result};

/// One outcome word and the regexes covering its linguistic variants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropPhrase {
    pub stem: String,
    /// Stored verbatim; compiled case-insensitively inside `\b...\b`.
    pub variant_patterns: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskPolicy {
    pub drop_sections: Vec<String>,
    pub drop_phrases: Vec<DropPhrase>,
}

#[derive(Debug, Clone)]
pub struct CompiledMaskPolicy {
    drop_sections: Vec<String>,
    patterns: Vec<Regex>,
}

impl MaskPolicy {
    /// Compiles the policy. `section_names` is the rule set's name list; a
    /// drop section that is not a known section name is a config error.
    pub fn compile(&self, section_names: &[&str]) -> Result<CompiledMaskPolicy> {
        for s in &self.drop_sections {
            if !section_names.contains(&s.as_str()) {
                return Err(CoreError::Config(format!(
                    "drop section `{s}` is not declared by the section rules"
                )));
            }
        }
        let mut patterns = Vec::new();
        for phrase in &self.drop_phrases {
            for pat in &phrase.variant_patterns {
                let bounded = format!(r"\b(?:{pat})\b");
                let re = RegexBuilder::new(&bounded)
                    .case_insensitive(true)
                    .build()
                    .map_err(|e| CoreError::Regex {
                        pattern: pat.clone(),
                        message: e.to_string(),
                    })?;
                patterns.push(re);
            }
        }
        Ok(CompiledMaskPolicy {
            drop_sections: self.drop_sections.clone(),
            patterns,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CoreError::Toml(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("mask policy serializes")
    }
}

impl CompiledMaskPolicy {
    /// Concatenates the bodies of non-dropped sections, deletes every
    /// drop-phrase match, and collapses the resulting whitespace. Returns the
    /// masked text; empty output is permitted (the caller flags it).
    pub fn mask(&self, doc: &Document) -> String {
        let kept: Vec<&str> = doc
            .sections
            .iter()
            .filter(|s| !self.drop_sections.iter().any(|d| d == &s.name))
            .map(|s| s.body.as_str())
            .collect();
        self.delete_phrases(&kept.join("\n"))
    }

    /// Phrase deletion + whitespace collapse, exposed separately because it
    /// is idempotent on its own output.
    pub fn delete_phrases(&self, text: &str) -> String {
        let mut out = text.to_string();
        for re in &self.patterns {
            out = re.replace_all(&out, "").into_owned();
        }
        collapse_whitespace(&out)
    }

    /// True when no variant pattern matches `text`.
    pub fn is_clean(&self, text: &str) -> bool {
        self.patterns.iter().all(|re| !re.is_match(text))
    }
}

/// Collapses every whitespace run to a single space and trims the ends.
fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_ws = true; // leading whitespace is dropped
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_ws {
                out.push(' ');
                in_ws = true;
            }
        } else {
            out.push(c);
            in_ws = false;
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Section;

    fn doc_with(sections: &[(&str, &str)]) -> Document {
        Document {
            id: "t".into(),
            text: String::new(),
            sections: sections
                .iter()
                .map(|&(n, b)| Section {
                    name: n.into(),
                    body: b.into(),
                    header_span: 0..0,
                    body_span: 0..0,
                })
                .collect(),
            outcome: 0,
            covariates: Vec::new(),
        }
    }

    fn policy(drop_sections: &[&str], patterns: &[&str]) -> CompiledMaskPolicy {
        MaskPolicy {
            drop_sections: drop_sections.iter().map(|s| s.to_string()).collect(),
            drop_phrases: vec![DropPhrase {
                stem: "outcome".into(),
                variant_patterns: patterns.iter().map(|s| s.to_string()).collect(),
            }],
        }
        .compile(&["Facts", "Decision"])
        .unwrap()
    }

    #[test]
    fn whole_section_deletion() {
        let d = doc_with(&[("Facts", "x"), ("Decision", "transfer ordered")]);
        let p = policy(&["Decision"], &[]);
        assert_eq!(p.mask(&d), "x");
    }

    #[test]
    fn variant_patterns_delete_inflections() {
        let d = doc_with(&[("Facts", "the Panel orders Transferred")]);
        let p = policy(&[], &["transfer(?:red|s)?"]);
        assert_eq!(p.mask(&d), "the Panel orders");
    }

    #[test]
    fn masked_output_matches_no_pattern() {
        let d = doc_with(&[(
            "Facts",
            "Transfer the domain; transfers were TRANSFERRED and cancelled.",
        )]);
        let p = policy(&[], &["transfer(?:red|s)?", "cancel(?:led|s)?"]);
        let masked = p.mask(&d);
        assert!(p.is_clean(&masked), "masked text still matches: {masked}");
    }

    #[test]
    fn masking_is_idempotent() {
        let d = doc_with(&[("Facts", "transfer  transfer x   y transfer")]);
        let p = policy(&[], &["transfer"]);
        let once = p.mask(&d);
        assert_eq!(p.delete_phrases(&once), once);
    }

    #[test]
    fn word_boundaries_protect_substrings() {
        // "transference" must survive a "transfer" drop-phrase.
        let d = doc_with(&[("Facts", "transference transfer")]);
        let p = policy(&[], &["transfer"]);
        assert_eq!(p.mask(&d), "transference");
    }

    #[test]
    fn unknown_drop_section_is_config_error() {
        let err = MaskPolicy {
            drop_sections: vec!["Nope".into()],
            drop_phrases: Vec::new(),
        }
        .compile(&["Facts"])
        .unwrap_err();
        assert!(matches!(err, CoreError::Config(_)));
    }

    #[test]
    fn empty_result_permitted() {
        let d = doc_with(&[("Decision", "transfer")]);
        let p = policy(&["Decision"], &["transfer"]);
        assert_eq!(p.mask(&d), "");
    }
}
