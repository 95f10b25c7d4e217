//! Two-level rule extraction from a discretized network and composition of the
//! levels into rules over the original attributes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cuts::{apply_cuts, cutpoints, interval_test, AttributeCuts};
use super::rex::{extract, prune, DefaultPolicy, PruneOptions};
use super::{Condition, DiscreteTable, Rule, RuleSet, Test};
use crate::dataset::Dataset;
use crate::discretizer::DiscretizedNetwork;
use crate::error::{Error, Result};
use crate::network::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RulesConfig {
    pub max_intervals: usize,
    /// Largest hidden-cluster combination table that will be enumerated.
    pub max_cross_product: usize,
    /// Largest number of conjunctions produced while composing.
    pub max_composed: usize,
    /// How the default class of the composed rule set is chosen.
    pub default_policy: DefaultPolicy,
    /// Training-error fraction the composed rule set may give up to shed
    /// low-coverage rules.
    pub noise_budget: f64,
    /// Labels the composed rule set is pruned against.
    pub prune_labels: PruneLabels,
    /// Lets the final prune move thresholds to any midpoint between adjacent
    /// training values, not only to cut points of the input-level codings.
    pub midpoint_widening: bool,
}

/// Source of the training labels used by the final prune.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneLabels {
    /// Predictions of the discretized network.
    Network,
    /// The dataset's class labels.
    Target,
}

impl Default for RulesConfig {
    fn default() -> Self {
        RulesConfig {
            max_intervals: 5,
            max_cross_product: 4096,
            max_composed: 100_000,
            default_policy: DefaultPolicy::FewestRules,
            noise_budget: 0.02,
            prune_labels: PruneLabels::Target,
            midpoint_widening: true,
        }
    }
}

impl RulesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.noise_budget) {
            return Err(Error::Config("noise_budget must lie in [0, 1)".into()));
        }
        if self.max_intervals == 0 || self.max_cross_product == 0 || self.max_composed == 0 {
            return Err(Error::Config("rules limits must be positive".into()));
        }
        Ok(())
    }
}

/// Rules mapping hidden-cluster indices (attribute `k` is `models[k]`) to classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenOutputRules {
    pub table: DiscreteTable,
    pub rules: RuleSet,
}

pub fn hidden_output_rules(
    dnet: &DiscretizedNetwork,
    class_names: &[String],
    cfg: &RulesConfig,
) -> Result<HiddenOutputRules> {
    let sizes: Vec<usize> = dnet.models.iter().map(|nm| nm.model.len()).collect();
    let total = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&t| t <= cfg.max_cross_product)
        .ok_or_else(|| {
            Error::Rules(format!(
                "hidden cluster combinations {sizes:?} exceed the bound of {}; \
                 use a larger clustering threshold to get fewer clusters",
                cfg.max_cross_product
            ))
        })?;

    let base = &dnet.base;
    let fixed = base.forward_unchecked(&vec![0.0; base.n_inputs]).hidden;
    let mut rows = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut idx = vec![0usize; sizes.len()];
    for _ in 0..total {
        let mut hidden = fixed.clone();
        for (nm, &j) in dnet.models.iter().zip(&idx) {
            hidden[nm.hidden] = nm.model.centers[j];
        }
        rows.push(idx.clone());
        labels.push(argmax(&base.outputs_from_hidden(&hidden)));
        for pos in (0..idx.len()).rev() {
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }

    let table = DiscreteTable {
        attribute_names: dnet.models.iter().map(|nm| format!("H{}", nm.hidden + 1)).collect(),
        values: dnet
            .models
            .iter()
            .map(|nm| nm.model.centers.iter().map(|c| format!("{c:.3}")).collect())
            .collect(),
        rows,
        labels,
        label_names: class_names.to_vec(),
        ordinal: Vec::new(),
    };
    let extraction = extract(&table)?;
    let rules = prune(
        &extraction.rules,
        &table.float_rows(),
        &table.labels,
        &PruneOptions::exact(class_names.len(), true),
    );
    Ok(HiddenOutputRules { table, rules })
}

/// Rules describing one hidden node's cluster index in terms of the inputs it
/// is still connected to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRules {
    pub hidden: usize,
    pub codings: Vec<AttributeCuts>,
    pub inconsistency: f64,
    /// Training patterns falling in each cluster.
    pub support: Vec<usize>,
    /// Over dataset attributes; consequents are cluster indices.
    pub rules: RuleSet,
}

impl NodeRules {
    pub fn attributes(&self) -> Vec<usize> {
        self.codings.iter().map(|c| c.attribute).collect()
    }
}

pub fn input_hidden_rules(
    train: &Dataset,
    dnet: &DiscretizedNetwork,
    cfg: &RulesConfig,
) -> Result<Vec<NodeRules>> {
    let input_attr = train.input_attributes();
    let inputs: Vec<Vec<f64>> = train.patterns.iter().map(|p| train.encode_inputs(p)).collect();
    let clusters: Vec<Vec<usize>> = inputs.iter().map(|x| dnet.cluster_indices(x)).collect();

    dnet.models
        .par_iter()
        .enumerate()
        .map(|(k, nm)| {
            let mut attrs: Vec<usize> = (0..dnet.base.n_inputs)
                .filter(|&l| dnet.base.w_live(nm.hidden, l))
                .map(|l| input_attr[l])
                .collect();
            attrs.dedup();
            let labels: Vec<usize> = clusters.iter().map(|c| c[k]).collect();
            let codings: Vec<AttributeCuts> = attrs
                .iter()
                .map(|&a| AttributeCuts {
                    attribute: a,
                    cuts: (!train.schema[a].is_nominal()).then(|| {
                        let values: Vec<f64> =
                            train.patterns.iter().map(|p| p.features[a]).collect();
                        cutpoints(&values, &labels, cfg.max_intervals)
                    }),
                })
                .collect();
            let label_names = (0..nm.model.len())
                .map(|j| format!("H{}={:.3}", nm.hidden + 1, nm.model.centers[j]))
                .collect();
            let table = apply_cuts(train, &codings, &labels, label_names)?;
            let extraction = extract(&table)?;
            let local = prune(
                &extraction.rules,
                &table.float_rows(),
                &labels,
                &PruneOptions::exact(nm.model.len(), true).with_thresholds(table.index_thresholds()),
            );
            let rules = local
                .rules
                .iter()
                .map(|r| lift(r, &codings))
                .collect::<Result<Vec<_>>>()?;
            let mut support = vec![0; nm.model.len()];
            for &l in &labels {
                support[l] += 1;
            }
            Ok(NodeRules {
                hidden: nm.hidden,
                codings,
                inconsistency: extraction.inconsistency,
                support,
                rules: RuleSet::new(rules, local.default),
            })
        })
        .collect()
}

/// Rewrites a rule over table columns as a rule over dataset attributes. On
/// interval-coded columns a threshold `k + 0.5` is the cut between intervals
/// `k` and `k + 1`.
fn lift(rule: &Rule, codings: &[AttributeCuts]) -> Result<Rule> {
    let mut conditions = Vec::with_capacity(rule.conditions.len());
    for c in &rule.conditions {
        let coding = &codings[c.attribute];
        let test = match (&coding.cuts, c.test) {
            (None, Test::Equals { value }) => Some(Test::Equals { value }),
            (None, _) => return Err(Error::Rules("threshold test on a nominal attribute".into())),
            (Some(cuts), Test::Equals { value }) => interval_test(cuts, value),
            (Some(cuts), Test::AtMost { threshold }) => Some(Test::AtMost {
                threshold: cuts[threshold.floor() as usize],
            }),
            (Some(cuts), Test::GreaterThan { threshold }) => Some(Test::GreaterThan {
                threshold: cuts[threshold.floor() as usize],
            }),
            (Some(cuts), Test::InInterval { lo, hi }) => Some(Test::InInterval {
                lo: cuts[lo.floor() as usize],
                hi: cuts[hi.floor() as usize],
            }),
        };
        if let Some(test) = test {
            conditions.push(Condition {
                attribute: coding.attribute,
                test,
            });
        }
    }
    let mut lifted = Rule::conjunction(conditions, rule.consequent)?
        .ok_or_else(|| Error::Rules("lifted rule is contradictory".into()))?;
    lifted.coverage = rule.coverage;
    Ok(lifted)
}

/// Substitutes input-level bodies for the hidden-cluster conditions of each
/// output rule, then prunes the result against `(rows, labels)`. Output rules
/// that need a cluster the node's input rules never yield are dropped.
pub fn compose(
    output: &RuleSet,
    nodes: &[NodeRules],
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    cfg: &RulesConfig,
) -> Result<RuleSet> {
    let mut composed = Vec::new();
    'rules: for rule in &output.rules {
        let mut options: Vec<Vec<&[Condition]>> = Vec::with_capacity(rule.conditions.len());
        for cond in &rule.conditions {
            let node = nodes.get(cond.attribute).ok_or_else(|| {
                Error::Composition(format!("output rule refers to unknown hidden input {}", cond.attribute))
            })?;
            let Test::Equals { value } = cond.test else {
                return Err(Error::Composition("hidden-level conditions must be equalities".into()));
            };
            let bodies: Vec<&[Condition]> = node
                .rules
                .rules
                .iter()
                .filter(|r| r.consequent == value)
                .map(|r| r.conditions.as_slice())
                .collect();
            if !bodies.is_empty() {
                options.push(bodies);
            } else if node.rules.rules.is_empty() && node.rules.default == value {
                options.push(vec![&[]]);
            } else if node.rules.default != value {
                // The node's rules never yield this cluster.
                continue 'rules;
            } else {
                return Err(Error::Composition(format!(
                    "no input rule derives cluster {value} of hidden node H{}",
                    node.hidden + 1
                )));
            }
        }
        let count = options
            .iter()
            .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
            .filter(|&c| composed.len() + c <= cfg.max_composed)
            .ok_or_else(|| {
                Error::Composition(format!(
                    "composition exceeds the bound of {} conjunctions",
                    cfg.max_composed
                ))
            })?;
        let mut idx = vec![0usize; options.len()];
        for _ in 0..count {
            let conditions: Vec<Condition> = options
                .iter()
                .zip(&idx)
                .flat_map(|(o, &j)| o[j].iter().copied())
                .collect();
            if let Some(r) = Rule::conjunction(conditions, rule.consequent)? {
                composed.push(r);
            }
            for pos in (0..idx.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < options[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    let width = rows.first().map_or(0, Vec::len);
    let mut thresholds = vec![Vec::<f64>::new(); width];
    for coding in nodes.iter().flat_map(|n| &n.codings) {
        if let (Some(cuts), Some(slot)) = (&coding.cuts, thresholds.get_mut(coding.attribute)) {
            slot.extend(cuts);
            if cfg.midpoint_widening {
                let mut vals: Vec<f64> = rows.iter().map(|r| r[coding.attribute]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                slot.extend(vals.windows(2).map(|w| (w[0] + w[1]) / 2.0));
            }
        }
    }
    for t in &mut thresholds {
        t.sort_by(f64::total_cmp);
        t.dedup();
    }
    Ok(prune(
        &composed,
        rows,
        labels,
        &PruneOptions {
            n_labels: n_classes,
            keep_all_labels: false,
            default_policy: cfg.default_policy,
            noise_budget: cfg.noise_budget,
            thresholds,
        },
    ))
}
