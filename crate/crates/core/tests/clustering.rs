mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reann_core::discretizer::cluster_node;

fn sequence(rng: &mut impl Rng) -> Vec<f64> {
    let len = rng.random_range(1..=300);
    let coarse = rng.random_bool(0.3);
    (0..len)
        .map(|_| {
            let v: f64 = rng.random_range(-1.0..=1.0);
            // Coarse sequences repeat values, which exercises distance ties.
            if coarse { (v * 4.0).round() / 4.0 } else { v }
        })
        .collect()
}

#[test]
fn matches_flow_chart_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let values = sequence(&mut rng);
        let eps = rng.random_range(1..10) as f64 * 0.1;
        let model = cluster_node(&values, eps);
        let (h, count, sum) = common::fig5(&values, eps);
        assert_eq!(model.counts, count);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&model.centers), bits(&h));
        assert_eq!(bits(&model.sums), bits(&sum));
    }
}

#[test]
fn centers_are_member_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let values = sequence(&mut rng);
        let model = cluster_node(&values, rng.random_range(0.05..0.95));
        let weighted: f64 = model.centers.iter().zip(&model.counts).map(|(c, &n)| c * n as f64).sum();
        let total: f64 = values.iter().sum();
        assert!((weighted - total).abs() <= 1e-9, "{weighted} vs {total}");
        assert_eq!(model.counts.iter().sum::<usize>(), values.len());
    }
}

#[test]
fn tiny_epsilon_keeps_every_distinct_value() {
    let values = [0.5, -0.25, 0.5, 0.75, -0.25];
    let model = cluster_node(&values, 1e-9);
    assert_eq!(model.centers, vec![0.5, -0.25, 0.75]);
    assert_eq!(model.counts, vec![2, 2, 1]);
}
