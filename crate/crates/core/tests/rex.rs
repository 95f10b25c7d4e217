mod common;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reann_core::dataset::{self, SchemaId};
use reann_core::rules::{
    apply_cuts, extract, inconsistency_rate, prune, AttributeCuts, PruneOptions, RuleSet, Test,
};

fn errors(rs: &RuleSet, rows: &[Vec<f64>], labels: &[usize]) -> usize {
    rows.iter().zip(labels).filter(|(r, &l)| rs.predict(r) != l).count()
}

#[test]
fn inconsistency_rate_matches_pairwise_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..200 {
        let t = common::random_table(&mut rng);
        let want = common::brute_inconsistency(&t.rows, &t.labels);
        assert!((inconsistency_rate(&t) - want).abs() < 1e-12);
    }
}

#[test]
fn extraction_error_is_bounded_by_inconsistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..300 {
        let t = common::random_table(&mut rng);
        let rows = t.float_rows();
        let ex = extract(&t).unwrap();
        assert!(rows.iter().all(|r| ex.rules.iter().any(|rule| rule.matches(r))), "row left uncovered");

        let rs = RuleSet::new(ex.rules.clone(), 0);
        let rate = errors(&rs, &rows, &t.labels) as f64 / rows.len() as f64;
        let bound = common::brute_inconsistency(&t.rows, &t.labels);
        assert!(rate <= bound + 1e-12, "error {rate} above inconsistency {bound}");

        let pruned = prune(
            &ex.rules,
            &rows,
            &t.labels,
            &PruneOptions::exact(t.n_labels(), false).with_thresholds(t.index_thresholds()),
        );
        assert!(errors(&pruned, &rows, &t.labels) <= errors(&rs, &rows, &t.labels));
    }
}

#[test]
fn evaluation_ignores_rule_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..200 {
        let t = common::random_table(&mut rng);
        let rows = t.float_rows();
        let ex = extract(&t).unwrap();
        let base = RuleSet::new(ex.rules.clone(), 0);
        let expected: Vec<usize> = rows.iter().map(|r| base.predict(r)).collect();
        for _ in 0..10 {
            let mut shuffled = ex.rules.clone();
            shuffled.shuffle(&mut rng);
            let rs = RuleSet::new(shuffled, 0);
            let got: Vec<usize> = rows.iter().map(|r| rs.predict(r)).collect();
            assert_eq!(got, expected);
        }
    }
}

#[test]
fn lenses_table_yields_reduced_tear_rule() {
    let data = dataset::load_uci(common::data_file("lenses.data"), SchemaId::Lenses).unwrap();
    let (train, _) = dataset::split(&data, dataset::SplitSpec { train_count: 12 }).unwrap();
    let codings: Vec<AttributeCuts> = (0..train.n_attributes())
        .map(|a| AttributeCuts { attribute: a, cuts: None })
        .collect();
    let table = apply_cuts(&train, &codings, &train.targets(), train.class_names.clone()).unwrap();
    let ex = extract(&table).unwrap();
    let reduce = train.schema[3].nominal_values.iter().position(|v| v == "reduce").unwrap();
    let none = train.class_names.iter().position(|c| c == "no contact lenses").unwrap();
    assert!(ex.rules.iter().any(|r| r.consequent == none
        && r.conditions.len() == 1
        && r.conditions[0].attribute == 3
        && r.conditions[0].test == Test::Equals { value: reduce }));
}
