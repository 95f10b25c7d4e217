//! End-to-end runs: load, split, grow, prune, discretize, extract and compose,
//! evaluate. Each seed is independent; failures are recorded per seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset, SchemaId, SplitSpec};
use crate::discretizer::{self, DiscretizeConfig, DiscretizedNetwork, DiscretizedSnapshot};
use crate::error::{Error, Result};
use crate::growth::{self, GrowthConfig, GrowthOutcome};
use crate::network::{self, NetworkSnapshot, NetworkWeights, Samples};
use crate::pruning::{self, PruneConfig, PruneTrace};
use crate::rules::{
    self, HiddenOutputRules, NodeRules, RuleSet, RuleSetDocument, RuleVocabulary, RulesConfig,
};

pub const REPORT_SCHEMA: &str = "reann.report/v1";
pub const EXTRACTION_SCHEMA: &str = "reann.extraction/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: SchemaId,
    /// Defaults to `data/<standard file name>` under the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    /// Leading patterns used for training; the rest form the test split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_count: Option<usize>,
    pub growth: GrowthConfig,
    pub prune: PruneConfig,
    pub discretize: DiscretizeConfig,
    pub rules: RulesConfig,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn for_dataset(dataset: SchemaId) -> Self {
        let accept_threshold = match dataset {
            SchemaId::BreastCancer => 0.05,
            SchemaId::Diabetes => 0.25,
            SchemaId::Lenses => 0.0,
        };
        RunConfig {
            dataset,
            data_path: None,
            train_count: None,
            growth: GrowthConfig {
                accept_threshold,
                ..GrowthConfig::default()
            },
            prune: PruneConfig::default(),
            discretize: DiscretizeConfig::default(),
            rules: RulesConfig::default(),
            seeds: (0..10).collect(),
            out: None,
        }
    }

    /// Reads a TOML document over the defaults of its dataset. Keys absent from
    /// the document keep their defaults; `dataset` overrides the document's own.
    pub fn from_toml(text: &str, dataset: Option<SchemaId>) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let id = match dataset {
            Some(id) => id,
            None => doc
                .get("dataset")
                .and_then(|v| v.as_str())
                .ok_or_else(|| Error::Config("config names no dataset".into()))?
                .parse()?,
        };
        let mut base = toml::Table::try_from(RunConfig::for_dataset(id))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, doc);
        base.insert("dataset".into(), toml::Value::String(id.as_str().into()));
        let cfg: RunConfig = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.growth.validate()?;
        self.prune.validate()?;
        self.discretize.validate()?;
        self.rules.validate()
    }

    pub fn data_path(&self) -> PathBuf {
        self.data_path
            .clone()
            .unwrap_or_else(|| Path::new("data").join(self.dataset.default_file_name()))
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_count: self.train_count.unwrap_or(self.dataset.default_train_count()),
        }
    }

    /// Copy of the configuration with every training seed set to `seed`.
    pub fn seeded(&self, seed: u64) -> RunConfig {
        let mut cfg = self.clone();
        cfg.growth.train.seed = seed;
        cfg.prune.retrain.seed = seed;
        cfg
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Training and test splits of the configured dataset.
pub fn load_splits(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let data = dataset::load_uci(cfg.data_path(), cfg.dataset)?;
    dataset::split(&data, cfg.split_spec())
}

pub fn phase_grow(cfg: &RunConfig, train: &Dataset) -> Result<GrowthOutcome> {
    let samples = Samples::from_dataset(train);
    growth::grow_on_split(&samples, train.input_width(), &cfg.growth)
}

pub fn phase_prune(
    cfg: &RunConfig,
    net: &NetworkWeights,
    train: &Dataset,
) -> Result<(NetworkWeights, PruneTrace)> {
    pruning::prune_loop(net, &Samples::from_dataset(train), &cfg.prune)
}

pub fn phase_discretize(
    cfg: &RunConfig,
    net: &NetworkWeights,
    train: &Dataset,
) -> Result<DiscretizedNetwork> {
    discretizer::search_epsilon(net, &Samples::from_dataset(train), &cfg.discretize)
}

/// Both rule levels and their composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extracted {
    pub schema: String,
    pub hidden_output: HiddenOutputRules,
    pub input_hidden: Vec<NodeRules>,
    pub rules: RuleSet,
}

impl Extracted {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let e: Extracted = serde_json::from_str(text)?;
        if e.schema != EXTRACTION_SCHEMA {
            return Err(Error::Config(format!(
                "expected schema {EXTRACTION_SCHEMA}, found {}",
                e.schema
            )));
        }
        Ok(e)
    }
}

pub fn phase_extract(cfg: &RunConfig, dnet: &DiscretizedNetwork, train: &Dataset) -> Result<Extracted> {
    let hidden_output = rules::hidden_output_rules(dnet, &train.class_names, &cfg.rules)?;
    let input_hidden = rules::input_hidden_rules(train, dnet, &cfg.rules)?;
    let rows: Vec<Vec<f64>> = train.patterns.iter().map(|p| p.features.clone()).collect();
    let labels: Vec<usize> = match cfg.rules.prune_labels {
        rules::PruneLabels::Network => train
            .patterns
            .iter()
            .map(|p| dnet.predict(&train.encode_inputs(p)))
            .collect(),
        rules::PruneLabels::Target => train.patterns.iter().map(|p| p.target).collect(),
    };
    let rules = rules::compose(
        &hidden_output.rules,
        &input_hidden,
        &rows,
        &labels,
        train.n_classes(),
        &cfg.rules,
    )?;
    Ok(Extracted {
        schema: EXTRACTION_SCHEMA.to_string(),
        hidden_output,
        input_hidden,
        rules,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub initial_hidden: usize,
    pub grown_hidden: usize,
    pub final_hidden: usize,
    pub initial_connections: usize,
    pub grown_connections: usize,
    pub final_connections: usize,
    pub growth_capped: bool,
    pub growth_epochs: usize,
    pub prune_epochs: usize,
    /// Constructive stages plus the final retrain on the whole training split.
    pub training_epochs: usize,
    pub total_epochs: usize,
    pub grown_test_accuracy: f64,
    pub net_train_accuracy: f64,
    pub net_test_accuracy: f64,
    pub prune_rolled_back: bool,
    /// Attribute indices still feeding a live hidden node.
    pub surviving_attributes: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub cluster_counts: Vec<usize>,
    pub continuous_train_accuracy: f64,
    pub discrete_train_accuracy: f64,
    pub discrete_test_accuracy: f64,
    /// Explicit rules plus the default rule.
    pub rule_count: usize,
    pub mean_conditions: f64,
    pub rule_train_accuracy: f64,
    pub rule_test_accuracy: f64,
    pub rules_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Some(Stat {
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

/// Aggregates over successful seeds, keyed by record field name.
pub type Aggregates = std::collections::BTreeMap<String, Stat>;

const AGGREGATED: [&str; 16] = [
    "initial_hidden",
    "grown_hidden",
    "final_hidden",
    "initial_connections",
    "grown_connections",
    "final_connections",
    "training_epochs",
    "total_epochs",
    "net_train_accuracy",
    "net_test_accuracy",
    "discrete_train_accuracy",
    "discrete_test_accuracy",
    "rule_count",
    "mean_conditions",
    "rule_train_accuracy",
    "rule_test_accuracy",
];

impl SeedRecord {
    fn field(&self, name: &str) -> f64 {
        match name {
            "initial_hidden" => self.initial_hidden as f64,
            "grown_hidden" => self.grown_hidden as f64,
            "final_hidden" => self.final_hidden as f64,
            "initial_connections" => self.initial_connections as f64,
            "grown_connections" => self.grown_connections as f64,
            "final_connections" => self.final_connections as f64,
            "training_epochs" => self.training_epochs as f64,
            "total_epochs" => self.total_epochs as f64,
            "net_train_accuracy" => self.net_train_accuracy,
            "net_test_accuracy" => self.net_test_accuracy,
            "discrete_train_accuracy" => self.discrete_train_accuracy,
            "discrete_test_accuracy" => self.discrete_test_accuracy,
            "rule_count" => self.rule_count as f64,
            "mean_conditions" => self.mean_conditions,
            "rule_train_accuracy" => self.rule_train_accuracy,
            "rule_test_accuracy" => self.rule_test_accuracy,
            other => unreachable!("unknown aggregate {other}"),
        }
    }
}

pub fn aggregate(records: &[SeedRecord]) -> Aggregates {
    AGGREGATED
        .iter()
        .filter_map(|&name| {
            let values: Vec<f64> = records.iter().map(|r| r.field(name)).collect();
            Stat::of(&values).map(|s| (name.to_string(), s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema: String,
    pub dataset: SchemaId,
    pub seeds: Vec<u64>,
    pub records: Vec<SeedRecord>,
    pub failures: Vec<SeedFailure>,
    pub aggregates: Aggregates,
}

impl PipelineReport {
    pub fn new(dataset: SchemaId, seeds: Vec<u64>, records: Vec<SeedRecord>, failures: Vec<SeedFailure>) -> Self {
        let aggregates = aggregate(&records);
        PipelineReport {
            schema: REPORT_SCHEMA.to_string(),
            dataset,
            seeds,
            records,
            failures,
            aggregates,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: PipelineReport = serde_json::from_str(text)?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::Config(format!(
                "expected schema {REPORT_SCHEMA}, found {}",
                r.schema
            )));
        }
        Ok(r)
    }

    pub fn stat(&self, name: &str) -> Option<Stat> {
        self.aggregates.get(name).copied()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Dataset: {}  seeds: {}  succeeded: {}  failed: {}\n",
            self.dataset.as_str(),
            self.seeds.len(),
            self.records.len(),
            self.failures.len()
        );
        let _ = writeln!(
            out,
            "{:>5} {:>14} {:>17} {:>7} {:>9} {:>8} {:>8} {:>6} {:>8} {:>10} {:>9}",
            "seed",
            "hidden i/g/f",
            "conn i/g/f",
            "epochs",
            "net train",
            "net test",
            "discrete",
            "rules",
            "avg cond",
            "rule train",
            "rule test"
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>5} {:>14} {:>17} {:>7} {:>9} {:>8} {:>8} {:>6} {:>8.2} {:>10} {:>9}",
                r.seed,
                format!("{}/{}/{}", r.initial_hidden, r.grown_hidden, r.final_hidden),
                format!("{}/{}/{}", r.initial_connections, r.grown_connections, r.final_connections),
                r.total_epochs,
                pct(r.net_train_accuracy),
                pct(r.net_test_accuracy),
                pct(r.discrete_test_accuracy),
                r.rule_count,
                r.mean_conditions,
                pct(r.rule_train_accuracy),
                pct(r.rule_test_accuracy)
            );
        }
        for (label, pick) in [
            ("mean", (|s: Stat| s.mean) as fn(Stat) -> f64),
            ("median", |s| s.median),
            ("min", |s| s.min),
            ("max", |s| s.max),
        ] {
            let get = |name: &str| self.stat(name).map(pick).unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{:>5} {:>14} {:>17} {:>7.1} {:>9} {:>8} {:>8} {:>6.1} {:>8.2} {:>10} {:>9}",
                label,
                format!("{:.1}/{:.1}/{:.1}", get("initial_hidden"), get("grown_hidden"), get("final_hidden")),
                format!(
                    "{:.1}/{:.1}/{:.1}",
                    get("initial_connections"),
                    get("grown_connections"),
                    get("final_connections")
                ),
                get("total_epochs"),
                pct(get("net_train_accuracy")),
                pct(get("net_test_accuracy")),
                pct(get("discrete_test_accuracy")),
                get("rule_count"),
                get("mean_conditions"),
                pct(get("rule_train_accuracy")),
                pct(get("rule_test_accuracy"))
            );
        }
        for f in &self.failures {
            let _ = writeln!(out, "\nseed {} failed: {}", f.seed, f.error);
        }
        for r in &self.records {
            let _ = write!(out, "\nRules for seed {}:\n{}", r.seed, r.rules_text);
        }
        out
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Everything produced for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedArtifacts {
    pub grown: GrowthOutcome,
    pub pruned: NetworkWeights,
    pub prune_trace: PruneTrace,
    pub discretized: DiscretizedNetwork,
    pub extracted: Extracted,
    pub record: SeedRecord,
}

pub fn run_seed(cfg: &RunConfig, seed: u64, train: &Dataset, test: &Dataset) -> Result<SeedArtifacts> {
    let cfg = cfg.seeded(seed);
    let train_s = Samples::from_dataset(train);
    let test_s = Samples::from_dataset(test);

    let grown = phase_grow(&cfg, train)?;
    let (pruned, prune_trace) = phase_prune(&cfg, &grown.network, train)?;
    let discretized = phase_discretize(&cfg, &pruned, train)?;
    let extracted = phase_extract(&cfg, &discretized, train)?;

    let vocab = RuleVocabulary::from_dataset(train);
    let rule_train = rules::evaluate(&extracted.rules, train);
    let rule_test = rules::evaluate(&extracted.rules, test);
    let initial = cfg.growth.initial_hidden;
    let n = train.input_width();
    let c = train.n_classes();
    let growth_epochs = grown.trace.epochs();
    let training_epochs = growth_epochs + grown.retrain_epochs;
    let input_attr = train.input_attributes();
    let mut surviving: Vec<usize> = pruned.live_inputs().iter().map(|&l| input_attr[l]).collect();
    surviving.dedup();

    let record = SeedRecord {
        seed,
        initial_hidden: initial,
        grown_hidden: grown.network.n_hidden,
        final_hidden: pruned.live_hidden().len(),
        initial_connections: initial * (n + c),
        grown_connections: grown.network.live_connections(),
        final_connections: pruned.live_connections(),
        growth_capped: grown.trace.capped,
        growth_epochs,
        prune_epochs: prune_trace.retrain_epochs,
        training_epochs,
        total_epochs: training_epochs + prune_trace.retrain_epochs,
        grown_test_accuracy: network::accuracy(&grown.network, &test_s),
        net_train_accuracy: network::accuracy(&pruned, &train_s),
        net_test_accuracy: network::accuracy(&pruned, &test_s),
        prune_rolled_back: prune_trace.rolled_back,
        surviving_attributes: surviving,
        epsilons: discretized.models.iter().map(|m| m.model.epsilon).collect(),
        cluster_counts: discretized.models.iter().map(|m| m.model.len()).collect(),
        continuous_train_accuracy: discretized.continuous_accuracy,
        discrete_train_accuracy: discretized.discrete_accuracy,
        discrete_test_accuracy: discretized.accuracy(&test_s),
        rule_count: extracted.rules.size(),
        mean_conditions: extracted.rules.mean_conditions(),
        rule_train_accuracy: rule_train.accuracy,
        rule_test_accuracy: rule_test.accuracy,
        rules_text: rules::render_text(&extracted.rules, &vocab),
    };
    Ok(SeedArtifacts {
        grown,
        pruned,
        prune_trace,
        discretized,
        extracted,
        record,
    })
}

/// Writes every artifact of one seed under `dir`.
pub fn write_seed_artifacts(
    dir: &Path,
    cfg: &RunConfig,
    train: &Dataset,
    a: &SeedArtifacts,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let seeded = cfg.seeded(a.record.seed);
    let mut doc = RuleSetDocument::new(&a.extracted.rules, RuleVocabulary::from_dataset(train));
    doc.train_accuracy = Some(a.record.rule_train_accuracy);
    doc.test_accuracy = Some(a.record.rule_test_accuracy);
    let files: [(&str, String); 7] = [
        (
            "grown.json",
            NetworkSnapshot::new(a.grown.network.clone(), seeded.growth.train).to_json()?,
        ),
        (
            "pruned.json",
            NetworkSnapshot::new(a.pruned.clone(), seeded.prune.retrain).to_json()?,
        ),
        ("prune_trace.json", serde_json::to_string_pretty(&a.prune_trace)?),
        (
            "discretized.json",
            DiscretizedSnapshot::new(a.discretized.clone()).to_json()?,
        ),
        ("extraction.json", a.extracted.to_json()?),
        ("rules.json", doc.to_json()?),
        ("rules.txt", a.record.rules_text.clone()),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Runs every configured seed and writes artifacts and the report when an
/// output directory is set.
pub fn run(cfg: &RunConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let (train, test) = load_splits(cfg)?;
    let outcomes: Vec<(u64, Result<SeedArtifacts>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(cfg, seed, &train, &test)))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(a) => {
                info!(
                    "seed {seed}: {} connections, rule test accuracy {:.4}",
                    a.record.final_connections, a.record.rule_test_accuracy
                );
                if let Some(out) = &cfg.out {
                    write_seed_artifacts(&out.join(format!("seed-{seed}")), cfg, &train, &a)?;
                }
                records.push(a.record);
            }
            Err(e) => {
                warn!("seed {seed} failed: {e}");
                failures.push(SeedFailure {
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    let report = PipelineReport::new(cfg.dataset, cfg.seeds.clone(), records, failures);
    if let Some(out) = &cfg.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        for (name, text) in [
            ("report.json", report.to_json()?),
            ("report.txt", report.render_text()),
            ("config.toml", cfg.to_toml()?),
        ] {
            let path = out.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_only_given_keys() {
        let cfg = RunConfig::from_toml(
            "dataset = \"diabetes\"\nseeds = [3]\n[growth.train]\nlearning_rate = 0.5\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.dataset, SchemaId::Diabetes);
        assert_eq!(cfg.seeds, vec![3]);
        assert_eq!(cfg.growth.train.learning_rate, 0.5);
        assert_eq!(cfg.growth.train.tau, 10);
        assert_eq!(cfg.growth.accept_threshold, 0.25);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_without_dataset_is_rejected() {
        assert!(RunConfig::from_toml("seeds = [1]", None).is_err());
        assert!(RunConfig::from_toml("seeds = [1]", Some(SchemaId::Lenses)).is_ok());
    }

    #[test]
    fn stat_of_single_value() {
        let s = Stat::of(&[0.5]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (0.5, 0.5, 0.5, 0.5));
        assert!(Stat::of(&[]).is_none());
        assert_eq!(Stat::of(&[1.0, 3.0, 2.0, 4.0]).unwrap().median, 2.5);
    }

    #[test]
    fn empty_report_is_valid() {
        let r = PipelineReport::new(SchemaId::Lenses, vec![], vec![], vec![]);
        assert!(r.aggregates.is_empty());
        let back = PipelineReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.render_text().contains("succeeded: 0"));
    }
}
