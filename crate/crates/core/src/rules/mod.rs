//! Symbolic rules: conditions, rule sets, and their order-insensitive evaluation.
//!
//! Rows are slices of `f64`. Discrete and nominal values are stored as indices
//! (`2.0` means symbol 2); continuous values are the normalized features.

mod cuts;
mod extraction;
mod render;
mod rex;
mod table;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use cuts::{apply_cuts, cutpoints, interval_index, interval_test, AttributeCuts};
pub use extraction::{
    compose, hidden_output_rules, input_hidden_rules, HiddenOutputRules, NodeRules, PruneLabels, RulesConfig,
};
pub use render::{render_text, RuleSetDocument, RuleVocabulary, RULES_SCHEMA};
pub use rex::{cluster, extract, prune, DefaultPolicy, Extraction, PruneOptions, RuleGroup};
pub use table::{inconsistency_rate, DiscreteTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Test {
    Equals { value: usize },
    AtMost { threshold: f64 },
    GreaterThan { threshold: f64 },
    /// Half-open interval `(lo, hi]`.
    InInterval { lo: f64, hi: f64 },
}

impl Test {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Test::Equals { value } => (x - value as f64).abs() < 0.5,
            Test::AtMost { threshold } => x <= threshold,
            Test::GreaterThan { threshold } => x > threshold,
            Test::InInterval { lo, hi } => lo < x && x <= hi,
        }
    }

    /// `(lo, hi]` bounds of a threshold test; `None` for equality tests.
    fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Test::Equals { .. } => None,
            Test::AtMost { threshold } => Some((f64::NEG_INFINITY, threshold)),
            Test::GreaterThan { threshold } => Some((threshold, f64::INFINITY)),
            Test::InInterval { lo, hi } => Some((lo, hi)),
        }
    }

    fn from_bounds(lo: f64, hi: f64) -> Option<Test> {
        match (lo.is_finite(), hi.is_finite()) {
            _ if lo >= hi => None,
            (false, false) => None,
            (false, true) => Some(Test::AtMost { threshold: hi }),
            (true, false) => Some(Test::GreaterThan { threshold: lo }),
            (true, true) => Some(Test::InInterval { lo, hi }),
        }
    }

    /// Whether every value passing `self` also passes `other`.
    fn implies(&self, other: &Test) -> bool {
        match (self.bounds(), other.bounds()) {
            (None, None) => self == other,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: usize,
    #[serde(flatten)]
    pub test: Test,
}

impl Condition {
    pub fn equals(attribute: usize, value: usize) -> Self {
        Condition {
            attribute,
            test: Test::Equals { value },
        }
    }

    pub fn matches(&self, row: &[f64]) -> bool {
        self.test.holds(row[self.attribute])
    }
}

/// Conjunction of two conditions on the same attribute. `Ok(None)` marks a
/// contradiction (disjoint symbols or an empty interval).
fn conjoin(a: &Condition, b: &Condition) -> Result<Option<Condition>> {
    debug_assert_eq!(a.attribute, b.attribute);
    match (a.test.bounds(), b.test.bounds()) {
        (None, None) => Ok((a.test == b.test).then_some(*a)),
        (Some((lo1, hi1)), Some((lo2, hi2))) => {
            Ok(Test::from_bounds(lo1.max(lo2), hi1.min(hi2)).map(|test| Condition {
                attribute: a.attribute,
                test,
            }))
        }
        _ => Err(Error::Rules(format!(
            "attribute {} mixes equality and threshold tests",
            a.attribute
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Conjunction, sorted by attribute, at most one condition per attribute.
    pub conditions: Vec<Condition>,
    pub consequent: usize,
    /// Training rows matched, used to resolve conflicts between rules.
    #[serde(default)]
    pub coverage: usize,
}

impl Rule {
    pub fn new(conditions: Vec<Condition>, consequent: usize) -> Self {
        Rule::conjunction(conditions, consequent)
            .expect("conditions are consistent")
            .expect("conditions are satisfiable")
    }

    /// Builds a rule from an arbitrary list of conditions, merging those on the
    /// same attribute. `Ok(None)` when the conjunction can never hold.
    pub fn conjunction(mut conditions: Vec<Condition>, consequent: usize) -> Result<Option<Self>> {
        conditions.sort_by_key(|c| c.attribute);
        let mut merged: Vec<Condition> = Vec::with_capacity(conditions.len());
        for c in conditions {
            match merged.last_mut() {
                Some(last) if last.attribute == c.attribute => match conjoin(last, &c)? {
                    Some(both) => *last = both,
                    None => return Ok(None),
                },
                _ => merged.push(c),
            }
        }
        Ok(Some(Rule {
            conditions: merged,
            consequent,
            coverage: 0,
        }))
    }

    pub fn matches(&self, row: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.matches(row))
    }

    /// Same conditions and consequent, coverage ignored.
    pub fn same_body(&self, other: &Rule) -> bool {
        self.consequent == other.consequent && self.conditions == other.conditions
    }

    /// Every row matched by `self` is matched by `general`.
    pub fn is_subsumed_by(&self, general: &Rule) -> bool {
        general.conditions.iter().all(|g| {
            self.conditions
                .iter()
                .any(|s| s.attribute == g.attribute && s.test.implies(&g.test))
        })
    }

    pub(crate) fn count_matches(&self, rows: &[Vec<f64>]) -> usize {
        rows.iter().filter(|r| self.matches(r)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub default: usize,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, default: usize) -> Self {
        RuleSet { rules, default }
    }

    /// One matching consequent wins outright; among several, the matching rule
    /// with the highest coverage wins (ties to the lowest class); no match falls
    /// to the default.
    pub fn predict(&self, row: &[f64]) -> usize {
        predict_with(&self.rules, row).unwrap_or(self.default)
    }

    /// Number of explicit rules plus the default rule.
    pub fn size(&self) -> usize {
        self.rules.len() + 1
    }

    /// Mean condition count over the explicit rules.
    pub fn mean_conditions(&self) -> f64 {
        if self.rules.is_empty() {
            return 0.0;
        }
        self.rules.iter().map(|r| r.conditions.len()).sum::<usize>() as f64
            / self.rules.len() as f64
    }

    pub fn referenced_attributes(&self) -> Vec<usize> {
        let mut attrs: Vec<usize> = self
            .rules
            .iter()
            .flat_map(|r| r.conditions.iter().map(|c| c.attribute))
            .collect();
        attrs.sort_unstable();
        attrs.dedup();
        attrs
    }

    /// Sorts rules by consequent, then descending coverage, then conditions.
    pub(crate) fn canonicalize(&mut self) {
        self.rules.sort_by(|a, b| {
            a.consequent
                .cmp(&b.consequent)
                .then(b.coverage.cmp(&a.coverage))
                .then(a.conditions.len().cmp(&b.conditions.len()))
                .then_with(|| compare_conditions(&a.conditions, &b.conditions))
        });
    }
}

fn compare_conditions(a: &[Condition], b: &[Condition]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.attribute.cmp(&y.attribute).then_with(|| {
            format!("{:?}", x.test)
                .partial_cmp(&format!("{:?}", y.test))
                .unwrap_or(Ordering::Equal)
        });
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// Prediction of a rule list; `None` when no rule matches.
pub(crate) fn predict_with(rules: &[Rule], row: &[f64]) -> Option<usize> {
    resolve(
        rules
            .iter()
            .filter(|r| r.matches(row))
            .map(|r| (r.coverage, r.consequent)),
    )
}

/// Conflict policy over the `(coverage, consequent)` pairs of matching rules.
pub(crate) fn resolve(matched: impl Iterator<Item = (usize, usize)>) -> Option<usize> {
    let mut winner: Option<(usize, usize)> = None;
    let mut first_class: Option<usize> = None;
    let mut conflict = false;
    for (coverage, class) in matched {
        match first_class {
            None => first_class = Some(class),
            Some(c) if c != class => conflict = true,
            _ => {}
        }
        let better = match winner {
            None => true,
            Some((cov, cls)) => coverage > cov || (coverage == cov && class < cls),
        };
        if better {
            winner = Some((coverage, class));
        }
    }
    if conflict {
        winner.map(|(_, class)| class)
    } else {
        first_class
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Rows matched by each rule, in rule order.
    pub coverage: Vec<usize>,
    pub predictions: Vec<usize>,
}

pub fn evaluate_rows(rs: &RuleSet, rows: &[Vec<f64>], labels: &[usize]) -> Evaluation {
    let predictions: Vec<usize> = rows.iter().map(|r| rs.predict(r)).collect();
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, t)| p == t)
        .count();
    Evaluation {
        accuracy: if rows.is_empty() {
            0.0
        } else {
            correct as f64 / rows.len() as f64
        },
        coverage: rs.rules.iter().map(|r| r.count_matches(rows)).collect(),
        predictions,
    }
}

pub fn evaluate(rs: &RuleSet, data: &Dataset) -> Evaluation {
    let rows: Vec<Vec<f64>> = data.patterns.iter().map(|p| p.features.clone()).collect();
    evaluate_rows(rs, &rows, &data.targets())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_most(attribute: usize, threshold: f64) -> Condition {
        Condition {
            attribute,
            test: Test::AtMost { threshold },
        }
    }

    #[test]
    fn tests_hold_on_half_open_intervals() {
        let t = Test::InInterval { lo: 0.2, hi: 0.5 };
        assert!(!t.holds(0.2));
        assert!(t.holds(0.5));
        assert!(Test::Equals { value: 2 }.holds(2.0));
        assert!(!Test::Equals { value: 2 }.holds(1.0));
    }

    #[test]
    fn conjunction_intersects_and_detects_contradictions() {
        let r = Rule::conjunction(
            vec![
                at_most(0, 0.6),
                Condition {
                    attribute: 0,
                    test: Test::GreaterThan { threshold: 0.2 },
                },
            ],
            1,
        )
        .unwrap()
        .unwrap();
        assert_eq!(r.conditions[0].test, Test::InInterval { lo: 0.2, hi: 0.6 });
        let none = Rule::conjunction(
            vec![
                at_most(0, 0.2),
                Condition {
                    attribute: 0,
                    test: Test::GreaterThan { threshold: 0.6 },
                },
            ],
            1,
        )
        .unwrap();
        assert!(none.is_none());
        let clash = Rule::conjunction(vec![Condition::equals(1, 0), Condition::equals(1, 1)], 0);
        assert!(clash.unwrap().is_none());
    }

    #[test]
    fn empty_rule_list_predicts_default() {
        let rs = RuleSet::new(vec![], 1);
        assert_eq!(rs.predict(&[0.3]), 1);
    }

    #[test]
    fn conflicts_go_to_highest_coverage() {
        let mut a = Rule::new(vec![at_most(0, 0.5)], 0);
        a.coverage = 3;
        let mut b = Rule::new(vec![at_most(1, 0.5)], 1);
        b.coverage = 7;
        let rs = RuleSet::new(vec![a.clone(), b.clone()], 2);
        assert_eq!(rs.predict(&[0.1, 0.1]), 1);
        let rev = RuleSet::new(vec![b, a], 2);
        assert_eq!(rev.predict(&[0.1, 0.1]), 1);
        assert_eq!(rs.predict(&[0.1, 0.9]), 0);
        assert_eq!(rs.predict(&[0.9, 0.9]), 2);
    }

    #[test]
    fn subsumption_uses_interval_containment() {
        let specific = Rule::new(vec![at_most(0, 0.4), Condition::equals(2, 1)], 0);
        let general = Rule::new(vec![at_most(0, 0.6)], 0);
        assert!(specific.is_subsumed_by(&general));
        assert!(!general.is_subsumed_by(&specific));
    }
}
