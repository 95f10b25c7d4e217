use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Condition, Rule, RuleSet, Test};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const RULES_SCHEMA: &str = "reann.rules/v1";

/// Names used when printing rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleVocabulary {
    pub attribute_names: Vec<String>,
    /// Symbol names per attribute; empty for continuous attributes.
    pub value_names: Vec<Vec<String>>,
    pub class_names: Vec<String>,
}

impl RuleVocabulary {
    pub fn from_dataset(data: &Dataset) -> Self {
        RuleVocabulary {
            attribute_names: data.schema.iter().map(|a| a.name.clone()).collect(),
            value_names: data.schema.iter().map(|a| a.nominal_values.clone()).collect(),
            class_names: data.class_names.clone(),
        }
    }

    fn attribute(&self, a: usize) -> String {
        let name = self.attribute_names.get(a).map_or("?", String::as_str);
        format!("{name} (A_{})", a + 1)
    }

    fn class(&self, c: usize) -> String {
        self.class_names
            .get(c)
            .cloned()
            .unwrap_or_else(|| format!("class {c}"))
    }
}

fn threshold(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn condition_text(c: &Condition, vocab: &RuleVocabulary) -> String {
    let name = vocab.attribute(c.attribute);
    match c.test {
        Test::Equals { value } => {
            let symbol = vocab
                .value_names
                .get(c.attribute)
                .and_then(|v| v.get(value))
                .cloned()
                .unwrap_or_else(|| value.to_string());
            format!("{name} = {symbol}")
        }
        Test::AtMost { threshold: t } => format!("{name} ≤ {}", threshold(t)),
        Test::GreaterThan { threshold: t } => format!("{name} > {}", threshold(t)),
        Test::InInterval { lo, hi } => {
            format!("{} < {name} ≤ {}", threshold(lo), threshold(hi))
        }
    }
}

fn rule_text(rule: &Rule, vocab: &RuleVocabulary) -> String {
    let body = if rule.conditions.is_empty() {
        "true".to_string()
    } else {
        rule.conditions
            .iter()
            .map(|c| condition_text(c, vocab))
            .collect::<Vec<_>>()
            .join(" and ")
    };
    format!("If {body}, then {}", vocab.class(rule.consequent))
}

/// Numbered `Rule k: If …, then …` lines followed by the default rule.
pub fn render_text(rs: &RuleSet, vocab: &RuleVocabulary) -> String {
    let mut out = String::new();
    for (k, rule) in rs.rules.iter().enumerate() {
        let _ = writeln!(out, "Rule {}: {}", k + 1, rule_text(rule, vocab));
    }
    let _ = writeln!(out, "Default Rule: {}.", vocab.class(rs.default));
    out
}

/// Serialized rule set.
///
/// ```text
/// schema           "reann.rules/v1"
/// vocabulary       attribute_names, value_names, class_names
/// rules[]          conditions[] {attribute, op, value | threshold | lo, hi},
///                  consequent, coverage (training rows matched)
/// default          class index
/// train_accuracy   optional, fraction
/// test_accuracy    optional, fraction
/// ```
///
/// `op` is one of `equals` (`value`), `at_most` / `greater_than` (`threshold`)
/// or `in_interval` (`lo`, `hi`, meaning `lo < x ≤ hi`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSetDocument {
    pub schema: String,
    pub vocabulary: RuleVocabulary,
    pub rules: Vec<Rule>,
    pub default: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

impl RuleSetDocument {
    pub fn new(rs: &RuleSet, vocabulary: RuleVocabulary) -> Self {
        RuleSetDocument {
            schema: RULES_SCHEMA.to_string(),
            vocabulary,
            rules: rs.rules.clone(),
            default: rs.default,
            train_accuracy: None,
            test_accuracy: None,
        }
    }

    pub fn rule_set(&self) -> RuleSet {
        RuleSet::new(self.rules.clone(), self.default)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RuleSetDocument = serde_json::from_str(text)?;
        if doc.schema != RULES_SCHEMA {
            return Err(Error::Config(format!(
                "expected schema {RULES_SCHEMA}, found {}",
                doc.schema
            )));
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> RuleVocabulary {
        RuleVocabulary {
            attribute_names: vec!["Clump thickness".into(), "Tear Production Rate".into()],
            value_names: vec![vec![], vec!["reduce".into(), "normal".into()]],
            class_names: vec!["benign".into(), "malignant".into()],
        }
    }

    #[test]
    fn text_format() {
        let rs = RuleSet::new(
            vec![Rule::new(
                vec![
                    Condition {
                        attribute: 0,
                        test: Test::AtMost { threshold: 0.6000001 },
                    },
                    Condition::equals(1, 0),
                ],
                0,
            )],
            1,
        );
        let text = render_text(&rs, &vocab());
        assert_eq!(
            text,
            "Rule 1: If Clump thickness (A_1) ≤ 0.6 and Tear Production Rate (A_2) = reduce, then benign\n\
             Default Rule: malignant.\n"
        );
    }

    #[test]
    fn thresholds_round_to_two_decimals() {
        assert_eq!(threshold(0.645), "0.65");
        assert_eq!(threshold(0.5), "0.5");
        assert_eq!(threshold(1.0), "1");
    }

    #[test]
    fn document_round_trip() {
        let rs = RuleSet::new(
            vec![Rule::new(
                vec![Condition {
                    attribute: 0,
                    test: Test::InInterval { lo: 0.25, hi: 0.75 },
                }],
                1,
            )],
            0,
        );
        let doc = RuleSetDocument::new(&rs, vocab());
        let back = RuleSetDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.rule_set(), rs);
    }
}
