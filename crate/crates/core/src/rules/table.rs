use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A table of symbolic rows: each cell is an index into its attribute's value list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTable {
    pub attribute_names: Vec<String>,
    pub values: Vec<Vec<String>>,
    pub rows: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    /// Attributes whose value indices are ordered (interval codes); empty means
    /// none are.
    #[serde(default)]
    pub ordinal: Vec<bool>,
}

impl DiscreteTable {
    pub fn validate(&self) -> Result<()> {
        let width = self.attribute_names.len();
        if self.values.len() != width {
            return Err(Error::Rules("one value list per attribute expected".into()));
        }
        if !self.ordinal.is_empty() && self.ordinal.len() != width {
            return Err(Error::Rules("one ordinal flag per attribute expected".into()));
        }
        if self.rows.len() != self.labels.len() {
            return Err(Error::Rules("rows and labels differ in length".into()));
        }
        for row in &self.rows {
            if row.len() != width {
                return Err(Error::Rules(format!(
                    "row of width {} in a table of width {width}",
                    row.len()
                )));
            }
            if row.iter().zip(&self.values).any(|(&v, vals)| v >= vals.len()) {
                return Err(Error::Rules("cell value outside its attribute's domain".into()));
            }
        }
        if self.labels.iter().any(|&l| l >= self.label_names.len()) {
            return Err(Error::Rules("label outside the label domain".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn is_ordinal(&self, attribute: usize) -> bool {
        self.ordinal.get(attribute).copied().unwrap_or(false)
    }

    /// Boundaries between consecutive value indices of each ordinal attribute.
    pub fn index_thresholds(&self) -> Vec<Vec<f64>> {
        (0..self.attribute_names.len())
            .map(|a| {
                if self.is_ordinal(a) {
                    (1..self.values[a].len()).map(|k| k as f64 - 0.5).collect()
                } else {
                    Vec::new()
                }
            })
            .collect()
    }

    pub fn float_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    }
}

/// Fraction of rows that disagree with the majority label of their identical-row group.
pub fn inconsistency_rate(table: &DiscreteTable) -> f64 {
    if table.is_empty() {
        return 0.0;
    }
    let mut groups: HashMap<&[usize], Vec<usize>> = HashMap::new();
    for (row, &label) in table.rows.iter().zip(&table.labels) {
        let hist = groups
            .entry(row.as_slice())
            .or_insert_with(|| vec![0; table.n_labels().max(1)]);
        hist[label] += 1;
    }
    let minority: usize = groups
        .values()
        .map(|h| h.iter().sum::<usize>() - h.iter().max().copied().unwrap_or(0))
        .sum();
    minority as f64 / table.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inconsistency_counts_minority_of_duplicates() {
        let t = DiscreteTable {
            attribute_names: vec!["a".into()],
            values: vec![vec!["0".into(), "1".into()]],
            rows: vec![vec![0], vec![0], vec![0], vec![1]],
            labels: vec![0, 0, 1, 1],
            label_names: vec!["x".into(), "y".into()],
            ordinal: vec![],
        };
        t.validate().unwrap();
        assert!((inconsistency_rate(&t) - 0.25).abs() < 1e-12);
    }
}
