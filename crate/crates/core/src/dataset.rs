//! Loading of the three UCI medical benchmark files and the fixed train/test splits.
//!
//! Continuous attributes are mapped to `[0, 1]` through an affine map stored in
//! [`AttributeSpec::raw_range`], so every normalized value can be mapped back to
//! the raw file value. Nominal attributes are stored as symbol indices and are
//! one-hot encoded only when fed to a network (see [`Dataset::encode_inputs`]).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Continuous,
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    /// Ordered symbols; empty for continuous attributes.
    pub nominal_values: Vec<String>,
    /// Raw value mapped to 0 and to 1 by [`AttributeSpec::normalize`].
    pub raw_range: (f64, f64),
}

impl AttributeSpec {
    pub fn continuous(name: &str, raw_range: (f64, f64)) -> Self {
        AttributeSpec {
            name: name.to_string(),
            kind: AttributeKind::Continuous,
            nominal_values: Vec::new(),
            raw_range,
        }
    }

    pub fn nominal(name: &str, values: &[&str]) -> Self {
        AttributeSpec {
            name: name.to_string(),
            kind: AttributeKind::Nominal,
            nominal_values: values.iter().map(|v| v.to_string()).collect(),
            raw_range: (0.0, 0.0),
        }
    }

    pub fn is_nominal(&self) -> bool {
        self.kind == AttributeKind::Nominal
    }

    /// Affine map of a raw value into `[0, 1]`, clamped at the ends.
    pub fn normalize(&self, raw: f64) -> f64 {
        let (lo, hi) = self.raw_range;
        ((raw - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn denormalize(&self, value: f64) -> f64 {
        let (lo, hi) = self.raw_range;
        lo + value * (hi - lo)
    }

    /// Number of network inputs this attribute occupies.
    pub fn input_width(&self) -> usize {
        match self.kind {
            AttributeKind::Continuous => 1,
            AttributeKind::Nominal => self.nominal_values.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            AttributeKind::Nominal if self.nominal_values.is_empty() => Err(Error::Logic(format!(
                "nominal attribute {} has no values",
                self.name
            ))),
            AttributeKind::Continuous if !self.nominal_values.is_empty() => Err(Error::Logic(
                format!("continuous attribute {} lists nominal values", self.name),
            )),
            AttributeKind::Continuous if !(self.raw_range.0 < self.raw_range.1) => {
                Err(Error::Logic(format!(
                    "continuous attribute {} has empty range {:?}",
                    self.name, self.raw_range
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    /// Normalized continuous values, or symbol indices for nominal attributes.
    pub features: Vec<f64>,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Vec<AttributeSpec>,
    pub patterns: Vec<Pattern>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        schema: Vec<AttributeSpec>,
        patterns: Vec<Pattern>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        for spec in &schema {
            spec.validate()?;
        }
        for (i, p) in patterns.iter().enumerate() {
            if p.features.len() != schema.len() {
                return Err(Error::Logic(format!(
                    "pattern {i} has {} features, schema has {}",
                    p.features.len(),
                    schema.len()
                )));
            }
            if p.target >= class_names.len() {
                return Err(Error::Logic(format!(
                    "pattern {i} has class {} but only {} classes exist",
                    p.target,
                    class_names.len()
                )));
            }
        }
        Ok(Dataset {
            schema,
            patterns,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    /// Width of the network input vector.
    pub fn input_width(&self) -> usize {
        self.schema.iter().map(AttributeSpec::input_width).sum()
    }

    /// For each network input, the attribute it was encoded from.
    pub fn input_attributes(&self) -> Vec<usize> {
        self.schema
            .iter()
            .enumerate()
            .flat_map(|(a, spec)| std::iter::repeat_n(a, spec.input_width()))
            .collect()
    }

    /// Network input vector of a pattern: continuous values pass through, nominal
    /// values become one-hot blocks.
    pub fn encode_inputs(&self, pattern: &Pattern) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.input_width());
        for (spec, &value) in self.schema.iter().zip(&pattern.features) {
            match spec.kind {
                AttributeKind::Continuous => out.push(value),
                AttributeKind::Nominal => {
                    let hot = value as usize;
                    out.extend((0..spec.nominal_values.len()).map(|k| f64::from(k == hot)));
                }
            }
        }
        out
    }

    pub fn targets(&self) -> Vec<usize> {
        self.patterns.iter().map(|p| p.target).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for p in &self.patterns {
            counts[p.target] += 1;
        }
        counts
    }

    pub(crate) fn with_patterns(&self, patterns: Vec<Pattern>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            patterns,
            class_names: self.class_names.clone(),
        }
    }

    /// Patterns in `range`, keeping the schema.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        self.with_patterns(self.patterns[range].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
}

/// Train = first `train_count` patterns in file order, test = the rest.
pub fn split(data: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    if spec.train_count == 0 || spec.train_count >= data.len() {
        return Err(Error::Usage(format!(
            "train count {} must lie strictly between 0 and {}",
            spec.train_count,
            data.len()
        )));
    }
    Ok((
        data.slice(0..spec.train_count),
        data.slice(spec.train_count..data.len()),
    ))
}

pub fn one_of_c(target: usize, classes: usize) -> Result<Vec<f64>> {
    if target >= classes {
        return Err(Error::Logic(format!(
            "class index {target} out of range for {classes} classes"
        )));
    }
    Ok((0..classes).map(|k| f64::from(k == target)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    BreastCancer,
    Diabetes,
    Lenses,
}

impl SchemaId {
    pub const ALL: [SchemaId; 3] = [SchemaId::BreastCancer, SchemaId::Diabetes, SchemaId::Lenses];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::BreastCancer => "breast_cancer",
            SchemaId::Diabetes => "diabetes",
            SchemaId::Lenses => "lenses",
        }
    }

    /// Size of the training split used by the published experiments.
    pub fn default_train_count(self) -> usize {
        match self {
            SchemaId::BreastCancer => 350,
            SchemaId::Diabetes => 384,
            SchemaId::Lenses => 12,
        }
    }

    pub fn default_file_name(self) -> &'static str {
        match self {
            SchemaId::BreastCancer => "breast-cancer-wisconsin.data",
            SchemaId::Diabetes => "pima-indians-diabetes.data",
            SchemaId::Lenses => "lenses.data",
        }
    }

    fn field_count(self) -> usize {
        match self {
            SchemaId::BreastCancer => 11,
            SchemaId::Diabetes => 9,
            SchemaId::Lenses => 6,
        }
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "breast_cancer" | "cancer" | "breast_cancer_wisconsin" => Ok(SchemaId::BreastCancer),
            "diabetes" | "pima" | "pima_indians_diabetes" => Ok(SchemaId::Diabetes),
            "lenses" => Ok(SchemaId::Lenses),
            other => Err(Error::Usage(format!(
                "unknown dataset `{other}` (expected breast_cancer, diabetes or lenses)"
            ))),
        }
    }
}

const CANCER_ATTRIBUTES: [&str; 9] = [
    "Clump thickness",
    "Uniformity of cell size",
    "Uniformity of cell shape",
    "Marginal adhesion",
    "Single epithelial cell size",
    "Bare nuclei",
    "Bland chromatin",
    "Normal nucleoli",
    "Mitosis",
];

const DIABETES_ATTRIBUTES: [&str; 8] = [
    "Number of times pregnant",
    "Plasma glucose concentration",
    "Diastolic blood pressure",
    "Triceps skin fold thickness",
    "2-hour serum insulin",
    "Body mass index",
    "Diabetes pedigree function",
    "Age",
];

pub fn load_uci(path: impl AsRef<Path>, schema: SchemaId) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_uci(&text, schema, path)
}

/// Parses the text of a UCI file. `origin` only labels parse errors.
pub fn parse_uci(text: &str, schema: SchemaId, origin: impl AsRef<Path>) -> Result<Dataset> {
    let origin = origin.as_ref();
    let records = tokenize(text, schema, origin)?;
    match schema {
        SchemaId::BreastCancer => build_cancer(records, origin),
        SchemaId::Diabetes => build_diabetes(records, origin),
        SchemaId::Lenses => build_lenses(records, origin),
    }
}

struct Record<'a> {
    line: usize,
    fields: Vec<&'a str>,
}

fn tokenize<'a>(text: &'a str, schema: SchemaId, origin: &Path) -> Result<Vec<Record<'a>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('@') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != schema.field_count() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message: format!(
                    "expected {} fields for {schema}, found {}",
                    schema.field_count(),
                    fields.len()
                ),
            });
        }
        out.push(Record {
            line: idx + 1,
            fields,
        });
    }
    Ok(out)
}

fn number(field: &str, line: usize, origin: &Path) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message: format!("expected a number, found `{field}`"),
        })
}

fn build_cancer(records: Vec<Record<'_>>, origin: &Path) -> Result<Dataset> {
    let train_count = SchemaId::BreastCancer.default_train_count();
    // Raw values with None for '?'; the sample-code column is dropped.
    let mut raw: Vec<(Vec<Option<f64>>, usize)> = Vec::with_capacity(records.len());
    for rec in &records {
        let mut values = Vec::with_capacity(9);
        for field in &rec.fields[1..10] {
            values.push(match *field {
                "?" => None,
                f => Some(number(f, rec.line, origin)?),
            });
        }
        let target = match rec.fields[10] {
            "2" => 0,
            "4" => 1,
            other => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: rec.line,
                    message: format!("class must be 2 or 4, found `{other}`"),
                })
            }
        };
        raw.push((values, target));
    }

    let means = training_means(&raw, train_count);
    let schema: Vec<AttributeSpec> = CANCER_ATTRIBUTES
        .iter()
        .map(|name| AttributeSpec::continuous(name, (0.0, 10.0)))
        .collect();
    let patterns = raw
        .into_iter()
        .map(|(values, target)| Pattern {
            features: values
                .iter()
                .zip(&schema)
                .zip(&means)
                .map(|((v, spec), mean)| spec.normalize(v.unwrap_or(*mean)))
                .collect(),
            target,
        })
        .collect();
    Dataset::new(
        schema,
        patterns,
        vec!["benign".to_string(), "malignant".to_string()],
    )
}

/// Per-attribute mean over the non-missing values among the first `train_count` records.
fn training_means(raw: &[(Vec<Option<f64>>, usize)], train_count: usize) -> Vec<f64> {
    let width = raw.first().map_or(0, |(v, _)| v.len());
    (0..width)
        .map(|a| {
            let present: Vec<f64> = raw
                .iter()
                .take(train_count)
                .filter_map(|(v, _)| v[a])
                .collect();
            if present.is_empty() {
                0.0
            } else {
                present.iter().sum::<f64>() / present.len() as f64
            }
        })
        .collect()
}

fn build_diabetes(records: Vec<Record<'_>>, origin: &Path) -> Result<Dataset> {
    let train_count = SchemaId::Diabetes.default_train_count();
    let mut raw: Vec<(Vec<f64>, usize)> = Vec::with_capacity(records.len());
    for rec in &records {
        let values = rec.fields[..8]
            .iter()
            .map(|f| number(f, rec.line, origin))
            .collect::<Result<Vec<_>>>()?;
        let target = match rec.fields[8] {
            "0" | "tested_negative" => 0,
            "1" | "tested_positive" => 1,
            other => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: rec.line,
                    message: format!("class must be 0 or 1, found `{other}`"),
                })
            }
        };
        raw.push((values, target));
    }

    let fit = &raw[..train_count.min(raw.len())];
    let schema: Vec<AttributeSpec> = DIABETES_ATTRIBUTES
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let lo = fit.iter().map(|(v, _)| v[a]).fold(f64::INFINITY, f64::min);
            let hi = fit.iter().map(|(v, _)| v[a]).fold(f64::NEG_INFINITY, f64::max);
            // Degenerate columns keep a unit range so normalization stays defined.
            let range = if lo < hi { (lo, hi) } else { (lo, lo + 1.0) };
            AttributeSpec::continuous(name, range)
        })
        .collect();
    let patterns = raw
        .into_iter()
        .map(|(values, target)| Pattern {
            features: values
                .iter()
                .zip(&schema)
                .map(|(&v, spec)| spec.normalize(v))
                .collect(),
            target,
        })
        .collect();
    Dataset::new(
        schema,
        patterns,
        vec!["tested negative".to_string(), "tested positive".to_string()],
    )
}

fn build_lenses(records: Vec<Record<'_>>, origin: &Path) -> Result<Dataset> {
    let schema = vec![
        AttributeSpec::nominal("Age", &["young", "pre-presbyopic", "presbyopic"]),
        AttributeSpec::nominal("Spectacle Prescription", &["myope", "hypermetrope"]),
        AttributeSpec::nominal("Astigmatic", &["no", "yes"]),
        AttributeSpec::nominal("Tear Production Rate", &["reduce", "normal"]),
    ];
    let mut patterns = Vec::with_capacity(records.len());
    for rec in &records {
        let mut features = Vec::with_capacity(4);
        for (spec, field) in schema.iter().zip(&rec.fields[1..5]) {
            features.push(symbol(field, spec.nominal_values.len(), rec.line, origin)? as f64);
        }
        let target = symbol(rec.fields[5], 3, rec.line, origin)?;
        patterns.push(Pattern { features, target });
    }
    Dataset::new(
        schema,
        patterns,
        vec![
            "hard contact lenses".to_string(),
            "soft contact lenses".to_string(),
            "no contact lenses".to_string(),
        ],
    )
}

/// 1-based code in the file → 0-based symbol index.
fn symbol(field: &str, count: usize, line: usize, origin: &Path) -> Result<usize> {
    match field.parse::<usize>() {
        Ok(code) if (1..=count).contains(&code) => Ok(code - 1),
        _ => Err(Error::Parse {
            path: origin.to_path_buf(),
            line,
            message: format!("expected a code in 1..={count}, found `{field}`"),
        }),
    }
}
