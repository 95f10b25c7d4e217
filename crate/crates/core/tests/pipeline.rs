mod common;

use reann_core::dataset::SchemaId;
use reann_core::discretizer::DiscretizedSnapshot;
use reann_core::network::NetworkSnapshot;
use reann_core::pipeline::{self, PipelineReport};

#[test]
fn phases_run_from_serialized_artifacts_match_a_full_run() {
    for dataset in [SchemaId::Lenses, SchemaId::BreastCancer] {
        let cfg = common::config(dataset);
        let (train, test) = pipeline::load_splits(&cfg).unwrap();
        let seed = 3;
        let full = pipeline::run_seed(&cfg, seed, &train, &test).unwrap();

        let cfg = cfg.seeded(seed);
        let grown = pipeline::phase_grow(&cfg, &train).unwrap();
        let json = NetworkSnapshot::new(grown.network, cfg.growth.train).to_json().unwrap();
        let grown_net = NetworkSnapshot::from_json(&json).unwrap().network;
        assert_eq!(grown_net, full.grown.network);

        let (pruned, _) = pipeline::phase_prune(&cfg, &grown_net, &train).unwrap();
        let json = NetworkSnapshot::new(pruned, cfg.prune.retrain).to_json().unwrap();
        let pruned = NetworkSnapshot::from_json(&json).unwrap().network;
        assert_eq!(pruned, full.pruned);

        let dnet = pipeline::phase_discretize(&cfg, &pruned, &train).unwrap();
        let json = DiscretizedSnapshot::new(dnet).to_json().unwrap();
        let dnet = DiscretizedSnapshot::from_json(&json).unwrap().discretized;
        assert_eq!(dnet, full.discretized);

        let extracted = pipeline::phase_extract(&cfg, &dnet, &train).unwrap();
        assert_eq!(extracted, full.extracted);
    }
}

#[test]
fn runs_are_reproducible() {
    let mut cfg = common::config(SchemaId::BreastCancer);
    cfg.seeds = vec![0, 1, 2, 3];
    let a = pipeline::run(&cfg).unwrap().to_json().unwrap();
    let b = pipeline::run(&cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let report = PipelineReport::from_json(&a).unwrap();
    assert_eq!(report.records.len() + report.failures.len(), 4);
}

#[test]
fn aggregates_match_records() {
    let mut cfg = common::config(SchemaId::Lenses);
    cfg.seeds = (0..5).collect();
    let report = pipeline::run(&cfg).unwrap();
    let counts: Vec<f64> = report.records.iter().map(|r| r.rule_count as f64).collect();
    let stat = report.stat("rule_count").unwrap();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    assert!((stat.mean - mean).abs() < 1e-12);
    assert_eq!(stat.max, counts.iter().cloned().fold(f64::MIN, f64::max));
}

#[test]
fn breast_cancer_rules_use_only_surviving_attributes() {
    let mut cfg = common::config(SchemaId::BreastCancer);
    cfg.seeds = vec![0, 1, 2];
    let (train, test) = pipeline::load_splits(&cfg).unwrap();
    for seed in cfg.seeds.clone() {
        let art = pipeline::run_seed(&cfg, seed, &train, &test).unwrap();
        let surviving = &art.record.surviving_attributes;
        for a in art.extracted.rules.referenced_attributes() {
            assert!(surviving.contains(&a), "rule uses removed attribute {a}");
        }
        assert!(art.record.rules_text.lines().last().unwrap().starts_with("Default Rule: "));
    }
}
