mod common;

use reann_core::network::{accuracy, NetworkWeights, Samples};
use reann_core::pipeline;
use reann_core::pruning::{prune_loop, PruneConfig};
use reann_core::dataset::SchemaId;

/// One hidden node computing AND of two inputs. Losing either input connection
/// makes (0, 1) and (1, 1) indistinguishable, so every removal costs accuracy.
fn and_gate() -> (NetworkWeights, Samples) {
    let mut net = NetworkWeights::zeros(2, 1, 2);
    net.set_w(0, 0, 4.0);
    net.set_w(0, 1, 4.0);
    net.set_w(0, 2, -6.0);
    net.set_v(0, 0, -3.0);
    net.set_v(1, 0, 3.0);
    net.set_v(0, 1, 0.5);
    net.set_v(1, 1, -0.5);
    let data = Samples {
        inputs: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        targets: vec![0, 0, 0, 1],
        n_classes: 2,
    };
    (net, data)
}

#[test]
fn fragile_network_is_rolled_back_exactly() {
    let (net, data) = and_gate();
    assert_eq!(accuracy(&net, &data), 1.0);
    let cfg = PruneConfig {
        accept_drop: 0.0,
        ..PruneConfig::default()
    };
    let (pruned, trace) = prune_loop(&net, &data, &cfg).unwrap();
    assert!(trace.entry_condition_met);
    assert!(trace.rolled_back);
    assert!(trace.events.is_empty());
    assert_eq!(trace.rejected.len(), 1);
    assert_eq!(pruned, net);
}

#[test]
fn accuracy_never_drops_past_the_allowance() {
    for dataset in [SchemaId::Lenses, SchemaId::BreastCancer] {
        let cfg = common::config(dataset);
        let (train, _) = pipeline::load_splits(&cfg).unwrap();
        for seed in 0..3 {
            let cfg = cfg.seeded(seed);
            let grown = pipeline::phase_grow(&cfg, &train).unwrap();
            let (net, trace) = pipeline::phase_prune(&cfg, &grown.network, &train).unwrap();
            let samples = Samples::from_dataset(&train);
            assert!(trace.final_accuracy >= trace.baseline_accuracy - cfg.prune.accept_drop - 1e-12);
            assert_eq!(accuracy(&net, &samples), trace.final_accuracy);
            assert!(net.live_connections() <= grown.network.live_connections());
        }
    }
}
