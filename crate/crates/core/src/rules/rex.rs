//! Covering rule induction over discrete tables: greedy rule generation,
//! grouping by consequent, and generalization pruning with a default rule.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::table::inconsistency_rate;
use super::{resolve, Condition, DiscreteTable, Rule, RuleSet, Test};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub rules: Vec<Rule>,
    /// Inconsistency rate of the source table, a lower bound on rule error.
    pub inconsistency: f64,
}

/// `a/b` against `c/d` without rounding.
fn cmp_ratio(a: usize, b: usize, c: usize, d: usize) -> Ordering {
    (a * d).cmp(&(c * b))
}

/// A test on one table column: equality for nominal columns, a cut between
/// index `k` and `k + 1` for ordinal ones.
#[derive(Clone, Copy, PartialEq)]
enum Cand {
    Eq(usize, usize),
    Le(usize, usize),
    Gt(usize, usize),
}

impl Cand {
    fn holds(self, row: &[usize]) -> bool {
        match self {
            Cand::Eq(a, v) => row[a] == v,
            Cand::Le(a, k) => row[a] <= k,
            Cand::Gt(a, k) => row[a] > k,
        }
    }

    fn attribute(self) -> usize {
        match self {
            Cand::Eq(a, _) | Cand::Le(a, _) | Cand::Gt(a, _) => a,
        }
    }

    fn condition(self) -> Condition {
        match self {
            Cand::Eq(a, v) => Condition::equals(a, v),
            Cand::Le(a, k) => Condition {
                attribute: a,
                test: Test::AtMost { threshold: k as f64 + 0.5 },
            },
            Cand::Gt(a, k) => Condition {
                attribute: a,
                test: Test::GreaterThan { threshold: k as f64 + 0.5 },
            },
        }
    }
}

/// Tests satisfied by `row`: its value on nominal columns, every cut on the
/// appropriate side on ordinal ones.
fn candidates(table: &DiscreteTable, row: &[usize]) -> Vec<Cand> {
    let mut out = Vec::new();
    for (a, &v) in row.iter().enumerate() {
        if table.is_ordinal(a) {
            for k in 0..table.values[a].len().saturating_sub(1) {
                out.push(if v <= k { Cand::Le(a, k) } else { Cand::Gt(a, k) });
            }
        } else {
            out.push(Cand::Eq(a, v));
        }
    }
    out
}

/// Generates one rule per still-uncovered seed row. Purity is measured on the
/// whole table so each emitted rule is exact unless its seed row belongs to a
/// group of identical rows with mixed labels.
pub fn extract(table: &DiscreteTable) -> Result<Extraction> {
    table.validate()?;
    if table.is_empty() {
        return Err(Error::Rules("cannot extract rules from an empty table".into()));
    }
    let n = table.len();
    let width = table.attribute_names.len();
    let mut covered = vec![false; n];
    let mut rules = Vec::new();

    while let Some(seed) = covered.iter().position(|c| !c) {
        let row = &table.rows[seed];
        let label = table.labels[seed];
        let pool = candidates(table, row);
        let mut chosen: Vec<Cand> = Vec::new();
        let mut matching: Vec<usize> = (0..n).collect();
        let same = |m: &[usize]| m.iter().filter(|&&i| table.labels[i] == label).count();

        let pure = loop {
            let hits = same(&matching);
            if hits == matching.len() {
                break true;
            }
            // (hits, size, uncovered, candidate)
            let mut best: Option<(usize, usize, usize, Cand)> = None;
            for &cand in pool.iter().filter(|c| !chosen.contains(c)) {
                let sub: Vec<usize> = matching
                    .iter()
                    .copied()
                    .filter(|&i| cand.holds(&table.rows[i]))
                    .collect();
                if sub.len() == matching.len() {
                    continue;
                }
                let h = same(&sub);
                let unc = sub.iter().filter(|&&i| !covered[i]).count();
                let better = match best {
                    None => true,
                    Some((bh, bs, bu, _)) => match cmp_ratio(h, sub.len(), bh, bs) {
                        Ordering::Greater => true,
                        Ordering::Equal => unc > bu || (unc == bu && sub.len() > bs),
                        Ordering::Less => false,
                    },
                };
                if better {
                    best = Some((h, sub.len(), unc, cand));
                }
            }
            match best {
                Some((h, s, _, cand)) if cmp_ratio(h, s, hits, matching.len()) == Ordering::Greater => {
                    chosen.push(cand);
                    matching.retain(|&i| cand.holds(&table.rows[i]));
                }
                _ => break false,
            }
        };

        let consequent = if pure {
            label
        } else {
            chosen = (0..width).map(|a| Cand::Eq(a, row[a])).collect();
            matching.retain(|&i| table.rows[i] == *row);
            let mut hist = vec![0usize; table.n_labels()];
            for &i in &matching {
                hist[table.labels[i]] += 1;
            }
            majority(&hist)
        };
        for &i in &matching {
            covered[i] = true;
        }
        chosen.sort_by_key(|c| c.attribute());
        let conditions = chosen.iter().map(|c| c.condition()).collect();
        let mut rule = Rule::conjunction(conditions, consequent)?
            .ok_or_else(|| Error::Rules("seed row violates its own rule".into()))?;
        rule.coverage = matching.len();
        rules.push(rule);
    }

    Ok(Extraction {
        rules,
        inconsistency: inconsistency_rate(table),
    })
}

/// Highest count, ties to the lowest index.
fn majority(hist: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in hist.iter().enumerate() {
        if c > hist[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleGroup {
    pub consequent: usize,
    pub rules: Vec<Rule>,
}

/// Groups rules by consequent in order of first appearance, dropping exact
/// duplicates inside each group.
pub fn cluster(rules: &[Rule]) -> Vec<RuleGroup> {
    let mut groups: Vec<RuleGroup> = Vec::new();
    for rule in rules {
        let idx = match groups.iter().position(|g| g.consequent == rule.consequent) {
            Some(i) => i,
            None => {
                groups.push(RuleGroup {
                    consequent: rule.consequent,
                    rules: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let group = &mut groups[idx];
        if !group.rules.iter().any(|r| r.same_body(rule)) {
            group.rules.push(rule.clone());
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOptions {
    pub n_labels: usize,
    /// Keep at least one explicit rule for every consequent that has one, so
    /// each label can be described without relying on the default.
    pub keep_all_labels: bool,
    pub default_policy: DefaultPolicy,
    /// Fraction of the rows whose misclassification may be traded for removing
    /// low-coverage rules once the default is chosen. Zero keeps pruning
    /// error-monotone.
    pub noise_budget: f64,
    /// Per attribute, the sorted cut points a threshold may be widened to.
    pub thresholds: Vec<Vec<f64>>,
}

impl PruneOptions {
    pub fn exact(n_labels: usize, keep_all_labels: bool) -> Self {
        PruneOptions {
            n_labels,
            keep_all_labels,
            default_policy: DefaultPolicy::UncoveredMass,
            noise_budget: 0.0,
            thresholds: Vec::new(),
        }
    }

    pub fn with_thresholds(mut self, thresholds: Vec<Vec<f64>>) -> Self {
        self.thresholds = thresholds;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultPolicy {
    /// Majority label of the rows no rule matches; the overall majority when
    /// every row is matched.
    UncoveredMass,
    /// The label whose selection leaves the fewest explicit rules, then the
    /// fewest training errors.
    FewestRules,
}

struct Scorer<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
}

impl Scorer<'_> {
    fn matches(&self, rule: &Rule) -> Vec<bool> {
        self.rows.iter().map(|r| rule.matches(r)).collect()
    }

    fn rule_errors(&self, rule: &Rule, m: &[bool]) -> usize {
        m.iter()
            .zip(self.labels)
            .filter(|(&hit, &l)| hit && l != rule.consequent)
            .count()
    }

    fn predictions(&self, rules: &[Rule], m: &[Vec<bool>]) -> Vec<Option<usize>> {
        (0..self.rows.len())
            .map(|i| {
                resolve(
                    rules
                        .iter()
                        .zip(m)
                        .filter(|(_, mm)| mm[i])
                        .map(|(r, _)| (r.coverage, r.consequent)),
                )
            })
            .collect()
    }

    /// Errors of the set, with unmatched rows going to `default` (or counted
    /// wrong when there is none).
    fn set_errors(&self, rules: &[Rule], m: &[Vec<bool>], default: Option<usize>) -> usize {
        self.predictions(rules, m)
            .iter()
            .zip(self.labels)
            .filter(|(p, &l)| p.or(default) != Some(l))
            .count()
    }
}

/// Subsumption removal, condition-level generalization, default selection and
/// redundancy removal. Never raises the training error of `rules` on
/// `(rows, labels)`.
pub fn prune(rules: &[Rule], rows: &[Vec<f64>], labels: &[usize], opts: &PruneOptions) -> RuleSet {
    assert_eq!(rows.len(), labels.len(), "rows and labels differ in length");
    let scorer = Scorer { rows, labels };
    let mut rules: Vec<Rule> = cluster(rules).into_iter().flat_map(|g| g.rules).collect();
    let mut m: Vec<Vec<bool>> = rules.iter().map(|r| scorer.matches(r)).collect();
    for (r, mm) in rules.iter_mut().zip(&m) {
        r.coverage = mm.iter().filter(|&&b| b).count();
    }
    retain_with(&mut rules, &mut m, |r| r.coverage > 0);
    drop_subsumed(&mut rules, &mut m);

    generalize(&scorer, &mut rules, &mut m, &opts.thresholds, None);
    dedupe(&mut rules, &mut m);
    drop_subsumed(&mut rules, &mut m);

    let predictions = scorer.predictions(&rules, &m);
    let mut uncovered = vec![0usize; opts.n_labels];
    let mut all = vec![0usize; opts.n_labels];
    for (p, &l) in predictions.iter().zip(labels) {
        all[l] += 1;
        if p.is_none() {
            uncovered[l] += 1;
        }
    }
    let candidates: Vec<usize> = match opts.default_policy {
        DefaultPolicy::UncoveredMass if uncovered.iter().any(|&c| c > 0) => vec![majority(&uncovered)],
        DefaultPolicy::UncoveredMass => vec![majority(&all)],
        DefaultPolicy::FewestRules => (0..opts.n_labels).collect(),
    };
    let budget = (opts.noise_budget * rows.len() as f64).floor() as usize;
    let (default, mut rules, m, _) = candidates
        .into_iter()
        .map(|d| {
            let allowed = scorer.set_errors(&rules, &m, Some(d)) + budget;
            let (alive, errors) = eliminate(&scorer, &rules, &m, d, opts.keep_all_labels, allowed);
            let (mut kept, mut kept_m) = subset(&rules, &m, &alive);
            if opts.keep_all_labels {
                return (d, kept, kept_m, errors);
            }
            generalize(&scorer, &mut kept, &mut kept_m, &opts.thresholds, Some(d));
            let errors = reduce(&scorer, &mut kept, &mut kept_m, &opts.thresholds, d, allowed);
            (d, kept, kept_m, errors)
        })
        .min_by_key(|(d, kept, _, errors)| (kept.len(), *errors, *d))
        .expect("at least one label");

    for (r, mm) in rules.iter_mut().zip(&m) {
        r.coverage = mm.iter().filter(|&&b| b).count();
    }
    let mut set = RuleSet::new(rules, default);
    set.canonicalize();
    set
}

/// Replaces rules by generalizations while the set's error count does not
/// rise. Without a default, unmatched rows count as errors and a rule's own
/// error rate may not rise either; with one, the best generalization of each
/// rule is taken until none helps.
fn generalize(
    scorer: &Scorer,
    rules: &mut [Rule],
    m: &mut [Vec<bool>],
    thresholds: &[Vec<f64>],
    default: Option<usize>,
) {
    let mut current = scorer.set_errors(rules, m, default);
    for i in 0..rules.len() {
        loop {
            let own = scorer.rule_errors(&rules[i], &m[i]);
            // (set errors, conditions, uncovered, rule, matches)
            let mut best: Option<(usize, usize, usize, Rule, Vec<bool>)> = None;
            for mut cand in generalizations(&rules[i], thresholds) {
                let cm = scorer.matches(&cand);
                cand.coverage = cm.iter().filter(|&&b| b).count();
                if default.is_none()
                    && scorer.rule_errors(&cand, &cm) * rules[i].coverage > own * cand.coverage
                {
                    continue;
                }
                let old_m = std::mem::replace(&mut m[i], cm);
                let old = std::mem::replace(&mut rules[i], cand);
                let e = scorer.set_errors(rules, m, default);
                let cand = std::mem::replace(&mut rules[i], old);
                let cm = std::mem::replace(&mut m[i], old_m);
                if e > current {
                    continue;
                }
                let key = (e, cand.conditions.len(), scorer.rows.len() - cand.coverage);
                if default.is_none() {
                    best = Some((key.0, key.1, key.2, cand, cm));
                    break;
                }
                if best.as_ref().is_none_or(|b| key < (b.0, b.1, b.2)) {
                    best = Some((key.0, key.1, key.2, cand, cm));
                }
            }
            match best {
                Some((e, _, _, cand, cm)) => {
                    rules[i] = cand;
                    m[i] = cm;
                    current = e;
                }
                None => break,
            }
        }
    }
}

/// Drops rules one at a time, regeneralizing the rest after each removal and
/// taking the removal that leaves the fewest errors, while the set stays within
/// `allowed` errors or does not get worse. Returns the final error count.
fn reduce(
    scorer: &Scorer,
    rules: &mut Vec<Rule>,
    m: &mut Vec<Vec<bool>>,
    thresholds: &[Vec<f64>],
    default: usize,
    allowed: usize,
) -> usize {
    let mut errors = scorer.set_errors(rules, m, Some(default));
    loop {
        let best = (0..rules.len())
            .map(|r| {
                let mut trial = rules.clone();
                let mut trial_m = m.clone();
                trial.remove(r);
                trial_m.remove(r);
                generalize(scorer, &mut trial, &mut trial_m, thresholds, Some(default));
                (scorer.set_errors(&trial, &trial_m, Some(default)), r, trial, trial_m)
            })
            .min_by_key(|(e, r, _, _)| (*e, *r));
        match best {
            Some((e, _, trial, trial_m)) if e <= errors.max(allowed) => {
                *rules = trial;
                *m = trial_m;
                errors = e;
            }
            _ => return errors,
        }
    }
}

/// One-step generalizations of `rule`, per condition: dropping it, then
/// widening its threshold to each farther cut in `thresholds`, farthest first.
fn generalizations(rule: &Rule, thresholds: &[Vec<f64>]) -> Vec<Rule> {
    let mut out = Vec::new();
    for (c, cond) in rule.conditions.iter().enumerate() {
        let mut dropped = rule.clone();
        dropped.conditions.remove(c);
        out.push(dropped);
        let cuts: &[f64] = thresholds.get(cond.attribute).map_or(&[], Vec::as_slice);
        let mut tests = Vec::new();
        match cond.test {
            Test::Equals { .. } => {}
            Test::AtMost { threshold } => {
                tests.extend(cuts.iter().rev().filter(|&&t| t > threshold).map(|&t| Test::AtMost { threshold: t }));
            }
            Test::GreaterThan { threshold } => {
                tests.extend(cuts.iter().filter(|&&t| t < threshold).map(|&t| Test::GreaterThan { threshold: t }));
            }
            Test::InInterval { lo, hi } => {
                tests.push(Test::GreaterThan { threshold: lo });
                tests.extend(cuts.iter().rev().filter(|&&t| t > hi).map(|&t| Test::InInterval { lo, hi: t }));
                tests.push(Test::AtMost { threshold: hi });
                tests.extend(cuts.iter().filter(|&&t| t < lo).map(|&t| Test::InInterval { lo: t, hi }));
            }
        }
        for test in tests {
            let mut wider = rule.clone();
            wider.conditions[c].test = test;
            out.push(wider);
        }
    }
    out
}

/// Removes rules that the default makes redundant, smallest coverage first.
/// Returns the surviving mask and the resulting training errors.
fn eliminate(
    scorer: &Scorer,
    rules: &[Rule],
    m: &[Vec<bool>],
    default: usize,
    keep_all_labels: bool,
    allowed: usize,
) -> (Vec<bool>, usize) {
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.sort_by(|&a, &b| {
        rules[a]
            .coverage
            .cmp(&rules[b].coverage)
            .then(rules[b].conditions.len().cmp(&rules[a].conditions.len()))
            .then(a.cmp(&b))
    });
    let mut alive = vec![true; rules.len()];
    let mut errors = scorer.set_errors(rules, m, Some(default));
    for &r in &order {
        alive[r] = false;
        if keep_all_labels {
            let twins: Vec<usize> = (0..rules.len())
                .filter(|&o| alive[o] && rules[o].consequent == rules[r].consequent)
                .collect();
            let shadowed = (0..m[r].len()).all(|i| !m[r][i] || twins.iter().any(|&o| m[o][i]));
            if !shadowed {
                alive[r] = true;
                continue;
            }
        }
        let (kept, kept_m) = subset(rules, m, &alive);
        let e = scorer.set_errors(&kept, &kept_m, Some(default));
        if e <= errors || e <= allowed {
            errors = e;
        } else {
            alive[r] = true;
        }
    }
    if keep_all_labels && (0..rules.len()).all(|r| !alive[r] || rules[r].consequent == default) {
        let e = scorer.set_errors(&[], &[], Some(default));
        if e <= errors {
            alive.iter_mut().for_each(|a| *a = false);
            errors = e;
        }
    }
    (alive, errors)
}

fn subset(rules: &[Rule], m: &[Vec<bool>], alive: &[bool]) -> (Vec<Rule>, Vec<Vec<bool>>) {
    rules
        .iter()
        .zip(m)
        .zip(alive)
        .filter(|(_, &a)| a)
        .map(|((r, mm), _)| (r.clone(), mm.clone()))
        .unzip()
}

fn retain_with(rules: &mut Vec<Rule>, m: &mut Vec<Vec<bool>>, keep: impl Fn(&Rule) -> bool) {
    let alive: Vec<bool> = rules.iter().map(keep).collect();
    let (r, mm) = subset(rules, m, &alive);
    *rules = r;
    *m = mm;
}

fn dedupe(rules: &mut Vec<Rule>, m: &mut Vec<Vec<bool>>) {
    let alive: Vec<bool> = (0..rules.len())
        .map(|i| !(0..i).any(|j| rules[j].same_body(&rules[i])))
        .collect();
    let (r, mm) = subset(rules, m, &alive);
    *rules = r;
    *m = mm;
}

/// Drops every rule that is at least as specific as another rule with the same
/// consequent. Of two logically equal rules the earlier one survives.
fn drop_subsumed(rules: &mut Vec<Rule>, m: &mut Vec<Vec<bool>>) {
    let n = rules.len();
    let mut alive = vec![true; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || !alive[j] || rules[i].consequent != rules[j].consequent {
                continue;
            }
            if rules[i].is_subsumed_by(&rules[j]) && (!rules[j].is_subsumed_by(&rules[i]) || j < i) {
                alive[i] = false;
                break;
            }
        }
    }
    let (r, mm) = subset(rules, m, &alive);
    *rules = r;
    *m = mm;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<usize>>, labels: Vec<usize>, n_labels: usize) -> DiscreteTable {
        let width = rows[0].len();
        let arity = rows.iter().flatten().max().unwrap() + 1;
        DiscreteTable {
            attribute_names: (0..width).map(|a| format!("a{a}")).collect(),
            values: vec![(0..arity).map(|v| v.to_string()).collect(); width],
            rows,
            labels,
            label_names: (0..n_labels).map(|l| l.to_string()).collect(),
            ordinal: vec![],
        }
    }

    #[test]
    fn determining_attribute_gives_single_condition_rules() {
        let t = table(
            vec![vec![0, 0], vec![1, 0], vec![2, 1], vec![0, 1], vec![1, 1]],
            vec![0, 1, 2, 0, 1],
            3,
        );
        let ex = extract(&t).unwrap();
        assert_eq!(ex.rules.len(), 3);
        for r in &ex.rules {
            assert_eq!(r.conditions.len(), 1);
            assert_eq!(r.conditions[0].attribute, 0);
        }
    }

    #[test]
    fn contradictory_rows_take_the_majority() {
        let t = table(vec![vec![0], vec![0], vec![0]], vec![1, 0, 0], 2);
        let ex = extract(&t).unwrap();
        assert_eq!(ex.rules.len(), 1);
        assert_eq!(ex.rules[0].consequent, 0);
        assert!((ex.inconsistency - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cluster_groups_and_dedupes() {
        let a = Rule::new(vec![Condition::equals(0, 1)], 0);
        let b = Rule::new(vec![Condition::equals(0, 2)], 1);
        let groups = cluster(&[a.clone(), b, a.clone()]);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].rules.len(), 1);
        assert!(cluster(&[]).is_empty());
        let c = Rule::new(vec![Condition::equals(0, 3)], 0);
        let groups = cluster(&[a, Rule::new(vec![Condition::equals(0, 2)], 1), c]);
        assert_eq!((groups[0].consequent, groups[0].rules.len()), (0, 2));
        assert_eq!((groups[1].consequent, groups[1].rules.len()), (1, 1));
    }

    #[test]
    fn superset_rule_is_dropped() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 0.0], vec![0.0, 2.0]];
        let labels = vec![0, 0, 1];
        let long = Rule::new(vec![Condition::equals(0, 1), Condition::equals(1, 2)], 0);
        let short = Rule::new(vec![Condition::equals(0, 1)], 0);
        let other = Rule::new(vec![Condition::equals(0, 0)], 1);
        let opts = PruneOptions::exact(2, true);
        let rs = prune(&[long, short.clone(), other], &rows, &labels, &opts);
        assert!(rs.rules.iter().all(|r| r.conditions.len() <= 1));
        assert!(rs.rules.iter().any(|r| r.same_body(&short)));
    }

    #[test]
    fn vacuous_condition_is_dropped() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let labels = vec![0, 1, 0];
        let r = Rule::new(vec![Condition::equals(0, 0), Condition::equals(1, 1)], 0);
        let s = Rule::new(vec![Condition::equals(0, 1), Condition::equals(1, 1)], 1);
        let opts = PruneOptions::exact(2, true);
        let rs = prune(&[r, s], &rows, &labels, &opts);
        assert!(rs
            .rules
            .iter()
            .all(|r| r.conditions.iter().all(|c| c.attribute == 0)));
    }

    #[test]
    fn single_label_table_collapses_to_default() {
        let t = table(vec![vec![0], vec![1]], vec![1, 1], 2);
        let ex = extract(&t).unwrap();
        let opts = PruneOptions::exact(2, true);
        let rs = prune(&ex.rules, &t.float_rows(), &t.labels, &opts);
        assert!(rs.rules.is_empty());
        assert_eq!(rs.default, 1);
    }
}
