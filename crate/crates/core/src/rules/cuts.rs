//! Interval coding of continuous attributes against a labelling.
//!
//! Sorted distinct values form groups; cut points sit at midpoints between
//! adjacent groups. The chosen partition has the fewest majority-label errors
//! achievable with at most `max_intervals` intervals, then the fewest intervals,
//! then the earliest cuts.

use serde::{Deserialize, Serialize};

use super::{DiscreteTable, Test};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Coding of one dataset attribute as a table column: symbol indices for nominal
/// attributes (`cuts == None`), interval indices otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeCuts {
    pub attribute: usize,
    pub cuts: Option<Vec<f64>>,
}

/// Index of the `(lo, hi]` interval containing `x`.
pub fn interval_index(cuts: &[f64], x: f64) -> usize {
    cuts.iter().filter(|&&c| x > c).count()
}

/// Test selecting interval `k`; `None` when there are no cuts.
pub fn interval_test(cuts: &[f64], k: usize) -> Option<Test> {
    if cuts.is_empty() {
        return None;
    }
    Some(if k == 0 {
        Test::AtMost { threshold: cuts[0] }
    } else if k >= cuts.len() {
        Test::GreaterThan {
            threshold: cuts[cuts.len() - 1],
        }
    } else {
        Test::InInterval {
            lo: cuts[k - 1],
            hi: cuts[k],
        }
    })
}

pub fn cutpoints(values: &[f64], labels: &[usize], max_intervals: usize) -> Vec<f64> {
    assert_eq!(values.len(), labels.len(), "values and labels differ in length");
    if values.is_empty() {
        return Vec::new();
    }
    let n_labels = labels.iter().max().map_or(1, |m| m + 1);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut group_values: Vec<f64> = Vec::new();
    let mut prefix: Vec<Vec<usize>> = vec![vec![0; n_labels]];
    for &i in &order {
        if group_values.last() != Some(&values[i]) {
            group_values.push(values[i]);
            prefix.push(prefix.last().expect("seeded").clone());
        }
        prefix.last_mut().expect("seeded")[labels[i]] += 1;
    }
    let g = group_values.len();
    let k_max = max_intervals.clamp(1, g);

    let cost = |i: usize, j: usize| -> usize {
        let counts = prefix[j + 1].iter().zip(&prefix[i]).map(|(b, a)| b - a);
        let (total, best) = counts.fold((0, 0), |(t, m), c| (t + c, m.max(c)));
        total - best
    };

    // best[k][i]: fewest errors covering groups i.. with exactly k intervals.
    const NONE: usize = usize::MAX;
    let mut best = vec![vec![NONE; g + 1]; k_max + 1];
    best[0][g] = 0;
    for k in 1..=k_max {
        for i in (0..g).rev() {
            let mut b = NONE;
            for j in i..g {
                let rest = best[k - 1][j + 1];
                if rest != NONE {
                    b = b.min(cost(i, j) + rest);
                }
            }
            best[k][i] = b;
        }
    }

    let (mut k, _) = (1..=k_max)
        .map(|k| (k, best[k][0]))
        .filter(|&(_, e)| e != NONE)
        .min_by_key(|&(k, e)| (e, k))
        .expect("one interval is always feasible");

    let mut cuts = Vec::with_capacity(k - 1);
    let mut i = 0;
    while k > 0 {
        let target = best[k][i];
        let j = (i..g)
            .find(|&j| best[k - 1][j + 1] != NONE && cost(i, j) + best[k - 1][j + 1] == target)
            .expect("optimal split exists");
        if j + 1 < g {
            cuts.push((group_values[j] + group_values[j + 1]) / 2.0);
        }
        i = j + 1;
        k -= 1;
    }
    cuts
}

/// Codes the chosen attributes of `data` into a table labelled by `labels`.
pub fn apply_cuts(
    data: &Dataset,
    codings: &[AttributeCuts],
    labels: &[usize],
    label_names: Vec<String>,
) -> Result<DiscreteTable> {
    if labels.len() != data.len() {
        return Err(Error::Rules("one label per pattern expected".into()));
    }
    let mut attribute_names = Vec::with_capacity(codings.len());
    let mut values = Vec::with_capacity(codings.len());
    for c in codings {
        let spec = data
            .schema
            .get(c.attribute)
            .ok_or_else(|| Error::Rules(format!("no attribute {}", c.attribute)))?;
        attribute_names.push(spec.name.clone());
        values.push(match &c.cuts {
            None => spec.nominal_values.clone(),
            Some(cuts) => interval_names(cuts),
        });
    }
    let rows = data
        .patterns
        .iter()
        .map(|p| {
            codings
                .iter()
                .map(|c| match &c.cuts {
                    None => p.features[c.attribute] as usize,
                    Some(cuts) => interval_index(cuts, p.features[c.attribute]),
                })
                .collect()
        })
        .collect();
    let table = DiscreteTable {
        attribute_names,
        values,
        rows,
        labels: labels.to_vec(),
        label_names,
        ordinal: codings.iter().map(|c| c.cuts.is_some()).collect(),
    };
    table.validate()?;
    Ok(table)
}

fn interval_names(cuts: &[f64]) -> Vec<String> {
    if cuts.is_empty() {
        return vec!["any".into()];
    }
    (0..=cuts.len())
        .map(|k| match interval_test(cuts, k).expect("cuts present") {
            Test::AtMost { threshold } => format!("<= {threshold}"),
            Test::GreaterThan { threshold } => format!("> {threshold}"),
            Test::InInterval { lo, hi } => format!("({lo}, {hi}]"),
            Test::Equals { .. } => unreachable!(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_boundary() {
        let cuts = cutpoints(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1], 5);
        assert_eq!(cuts.len(), 1);
        assert!((cuts[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pure_and_constant_columns_have_no_cuts() {
        assert!(cutpoints(&[0.1, 0.5, 0.9], &[1, 1, 1], 5).is_empty());
        assert!(cutpoints(&[0.4, 0.4, 0.4], &[0, 1, 0], 5).is_empty());
    }

    #[test]
    fn interval_cap_is_respected() {
        let values: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        assert!(cutpoints(&values, &labels, 3).len() <= 2);
        assert_eq!(cutpoints(&values, &labels, 100).len(), 9);
    }

    #[test]
    fn intervals_are_half_open() {
        let cuts = [0.5, 0.8];
        assert_eq!(interval_index(&cuts, 0.5), 0);
        assert_eq!(interval_index(&cuts, 0.51), 1);
        assert_eq!(interval_index(&cuts, 0.9), 2);
        assert_eq!(interval_test(&cuts, 1), Some(Test::InInterval { lo: 0.5, hi: 0.8 }));
        assert_eq!(interval_test(&[], 0), None);
    }
}
