//! Magnitude-based connection pruning with retraining and rollback.
//!
//! An input→hidden weight `w_ml` is removable when `max_p |v_pm · w_ml| ≤ 4η2`,
//! a hidden→output weight when `|v_pm| ≤ 4η2`. When neither rule fires, the single
//! input→hidden connection with the smallest saliency `max_p |v_pm · w_ml|` goes.
//! After each pass the network is retrained; a pass that costs more than
//! `accept_drop` training accuracy is undone and pruning stops.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{self, NetworkWeights, Samples, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub accept_drop: f64,
    /// Extra training rounds allowed to satisfy the output-error condition on entry.
    pub condition_rounds: usize,
    pub retrain: TrainConfig,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            eta1: 0.35,
            eta2: 0.1,
            accept_drop: 0.01,
            condition_rounds: 3,
            retrain: TrainConfig::default(),
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.eta1) || !(self.eta2 > 0.0) || self.eta1 + self.eta2 >= 0.5 {
            return Err(Error::Config(format!(
                "need eta1 in [0, 0.5), eta2 > 0 and eta1 + eta2 < 0.5 (got {}, {})",
                self.eta1, self.eta2
            )));
        }
        if !(self.accept_drop >= 0.0) {
            return Err(Error::Config("accept_drop must be non-negative".into()));
        }
        self.retrain.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum Connection {
    InputHidden { hidden: usize, input: usize },
    HiddenOutput { output: usize, hidden: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// `max_p |v_pm · w_ml| ≤ 4η2`
    Cond4,
    /// `|v_pm| ≤ 4η2`
    Cond5,
    SmallestSaliency,
    /// Connection of a hidden node left without inputs or outputs.
    DeadNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneEvent {
    pub pass: usize,
    pub connection: Connection,
    pub trigger: Trigger,
    pub accuracy_after: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub events: Vec<PruneEvent>,
    /// Removals of the pass that was undone, if any.
    pub rejected: Vec<PruneEvent>,
    pub baseline_accuracy: f64,
    pub final_accuracy: f64,
    pub entry_condition_met: bool,
    /// Output-error condition after each accepted retrain.
    pub condition_after_retrain: Vec<bool>,
    pub rolled_back: bool,
    pub retrain_epochs: usize,
    pub removed_inputs: Vec<usize>,
    pub removed_hidden: Vec<usize>,
    pub warning: Option<String>,
}

/// Every correctly classified pattern has `max_p |S_p − t_p| ≤ eta1`.
pub fn meets_accuracy_condition(net: &NetworkWeights, data: &Samples, eta1: f64) -> bool {
    data.inputs.iter().zip(&data.targets).all(|(x, &t)| {
        let out = net.forward_unchecked(x).outputs;
        if network::argmax(&out) != t {
            return true;
        }
        out.iter()
            .enumerate()
            .all(|(p, &s)| (s - f64::from(p == t)).abs() <= eta1)
    })
}

/// `max_p |v_pm · w_ml|`
pub fn saliency(net: &NetworkWeights, hidden: usize, input: usize) -> f64 {
    let w = net.w(hidden, input).abs();
    (0..net.n_outputs)
        .map(|p| (net.v(p, hidden) * w).abs())
        .fold(0.0, f64::max)
}

pub fn prunable_w(net: &NetworkWeights, eta2: f64) -> Vec<(usize, usize)> {
    let limit = 4.0 * eta2;
    live_w(net)
        .filter(|&(m, l)| saliency(net, m, l) <= limit)
        .collect()
}

pub fn prunable_v(net: &NetworkWeights, eta2: f64) -> Vec<(usize, usize)> {
    let limit = 4.0 * eta2;
    (0..net.n_outputs)
        .flat_map(|p| (0..net.n_hidden).map(move |m| (p, m)))
        .filter(|&(p, m)| net.v_live(p, m) && net.v(p, m).abs() <= limit)
        .collect()
}

/// Live input→hidden connection of least saliency; ties go to the smallest `(m, l)`.
pub fn smallest_saliency_w(net: &NetworkWeights) -> Result<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for (m, l) in live_w(net) {
        let s = saliency(net, m, l);
        if best.is_none_or(|(_, b)| s < b) {
            best = Some(((m, l), s));
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| Error::Logic("no live input-to-hidden connection left".into()))
}

fn live_w(net: &NetworkWeights) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..net.n_hidden)
        .flat_map(move |m| (0..net.n_inputs).map(move |l| (m, l)))
        .filter(move |&(m, l)| net.w_live(m, l))
}

/// Repeatedly removes connections and retrains until accuracy would fall more
/// than `accept_drop` below the entry baseline, then strips dead nodes.
pub fn prune_loop(
    net: &NetworkWeights,
    train: &Samples,
    cfg: &PruneConfig,
) -> Result<(NetworkWeights, PruneTrace)> {
    cfg.validate()?;
    let mut trace = PruneTrace::default();
    let mut current = net.clone();

    trace.entry_condition_met = meets_accuracy_condition(&current, train, cfg.eta1);
    let mut rounds = 0;
    while !trace.entry_condition_met && rounds < cfg.condition_rounds {
        let (next, stats) = network::train_to_plateau(&current, train, &cfg.retrain)?;
        trace.retrain_epochs += stats.len();
        current = next;
        rounds += 1;
        trace.entry_condition_met = meets_accuracy_condition(&current, train, cfg.eta1);
    }
    if !trace.entry_condition_met {
        debug!("output-error condition not met after {rounds} extra rounds; pruning anyway");
    }

    trace.baseline_accuracy = network::accuracy(&current, train);
    let floor = trace.baseline_accuracy - cfg.accept_drop;
    let mut pass = 0;

    loop {
        pass += 1;
        let mut candidate = current.clone();
        let mut removed: Vec<(Connection, Trigger)> = Vec::new();
        for (m, l) in prunable_w(&current, cfg.eta2) {
            candidate.remove_w(m, l);
            removed.push((Connection::InputHidden { hidden: m, input: l }, Trigger::Cond4));
        }
        for (p, m) in prunable_v(&current, cfg.eta2) {
            candidate.remove_v(p, m);
            removed.push((Connection::HiddenOutput { output: p, hidden: m }, Trigger::Cond5));
        }
        if removed.is_empty() {
            match smallest_saliency_w(&current) {
                Ok((m, l)) => {
                    candidate.remove_w(m, l);
                    removed.push((
                        Connection::InputHidden { hidden: m, input: l },
                        Trigger::SmallestSaliency,
                    ));
                }
                Err(_) => break,
            }
        }

        let retrained = match network::train_to_plateau(&candidate, train, &cfg.retrain) {
            Ok((next, stats)) => {
                trace.retrain_epochs += stats.len();
                next
            }
            Err(e @ Error::Diverged { .. }) => {
                warn!("retraining after pruning pass {pass} failed: {e}; keeping previous weights");
                trace.warning = Some(e.to_string());
                trace.rolled_back = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let acc = network::accuracy(&retrained, train);
        let events = removed.into_iter().map(|(connection, trigger)| PruneEvent {
            pass,
            connection,
            trigger,
            accuracy_after: acc,
        });
        debug!("pruning pass {pass}: accuracy {acc:.4} (floor {floor:.4})");
        if acc < floor {
            trace.rejected.extend(events);
            trace.rolled_back = true;
            break;
        }
        trace.events.extend(events);
        trace
            .condition_after_retrain
            .push(meets_accuracy_condition(&retrained, train, cfg.eta1));
        current = retrained;
    }

    let final_acc = network::accuracy(&current, train);
    remove_dead_nodes(&mut current, &mut trace, pass, final_acc);
    trace.final_accuracy = network::accuracy(&current, train);
    Ok((current, trace))
}

/// Strips hidden nodes with no live input or no live output connections and
/// records inputs that no longer feed any live hidden node. A hidden node that
/// lost all its inputs outputs the constant `tanh(bias)`; that contribution is
/// folded into the output biases so the network function is unchanged.
fn remove_dead_nodes(net: &mut NetworkWeights, trace: &mut PruneTrace, pass: usize, acc: f64) {
    let live = net.live_hidden();
    for m in 0..net.n_hidden {
        if live.contains(&m) {
            continue;
        }
        let has_inputs = (0..net.n_inputs).any(|l| net.w_live(m, l));
        let has_outputs = (0..net.n_outputs).any(|p| net.v_live(p, m));
        if !has_inputs && !has_outputs && !net.w_live(m, net.n_inputs) {
            continue;
        }
        if !has_inputs {
            let constant = net.w(m, net.n_inputs).tanh();
            for p in 0..net.n_outputs {
                let folded = net.v(p, net.n_hidden) + net.v(p, m) * constant;
                net.set_v(p, net.n_hidden, folded);
            }
        }
        for l in 0..=net.n_inputs {
            if net.w_live(m, l) {
                net.remove_w(m, l);
                if l < net.n_inputs {
                    trace.events.push(PruneEvent {
                        pass,
                        connection: Connection::InputHidden { hidden: m, input: l },
                        trigger: Trigger::DeadNode,
                        accuracy_after: acc,
                    });
                }
            }
        }
        for p in 0..net.n_outputs {
            if net.v_live(p, m) {
                net.remove_v(p, m);
                trace.events.push(PruneEvent {
                    pass,
                    connection: Connection::HiddenOutput { output: p, hidden: m },
                    trigger: Trigger::DeadNode,
                    accuracy_after: acc,
                });
            }
        }
        trace.removed_hidden.push(m);
    }
    let inputs = net.live_inputs();
    trace.removed_inputs = (0..net.n_inputs).filter(|l| !inputs.contains(l)).collect();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hidden(ws: &[f64], vs: &[f64]) -> NetworkWeights {
        let mut net = NetworkWeights::zeros(ws.len(), 1, vs.len());
        for (l, &w) in ws.iter().enumerate() {
            net.set_w(0, l, w);
        }
        for (p, &v) in vs.iter().enumerate() {
            net.set_v(p, 0, v);
        }
        net
    }

    #[test]
    fn accuracy_condition_examples() {
        let data = Samples {
            inputs: vec![vec![0.0]],
            targets: vec![0],
            n_classes: 1,
        };
        // output = sigmoid(bias): 0.6 gives |S - t| = 0.4 on a correct pattern
        let mut net = NetworkWeights::zeros(1, 1, 1);
        net.set_v(0, 1, (0.6f64 / 0.4).ln());
        assert!(!meets_accuracy_condition(&net, &data, 0.35));
        assert!(meets_accuracy_condition(&net, &data, 0.45));

        // Misclassified pattern is exempt: two outputs, class 1 wins but target is 0.
        let mut net2 = NetworkWeights::zeros(1, 1, 2);
        net2.set_v(1, 1, 1.0);
        let data2 = Samples {
            inputs: vec![vec![0.0]],
            targets: vec![0],
            n_classes: 2,
        };
        assert!(meets_accuracy_condition(&net2, &data2, 0.0));
    }

    #[test]
    fn eq4_and_eq5_examples() {
        let net = one_hidden(&[0.3], &[1.0]);
        assert_eq!(prunable_w(&net, 0.1), vec![(0, 0)]);
        let net = one_hidden(&[2.0], &[3.0354, -3.0354]);
        assert!(prunable_v(&net, 0.1).is_empty());
        let zero = NetworkWeights::zeros(2, 2, 2);
        assert_eq!(prunable_w(&zero, 0.1).len(), 4);
        assert_eq!(prunable_v(&zero, 0.1).len(), 4);
    }

    #[test]
    fn smallest_saliency_examples() {
        let net = one_hidden(&[0.2, 0.5], &[1.0]);
        assert_eq!(smallest_saliency_w(&net).unwrap(), (0, 0));
        let tie = one_hidden(&[0.5, -0.5], &[1.0]);
        assert_eq!(smallest_saliency_w(&tie).unwrap(), (0, 0));
        let mut single = one_hidden(&[0.5, 0.9], &[1.0]);
        single.remove_w(0, 0);
        assert_eq!(smallest_saliency_w(&single).unwrap(), (0, 1));
        single.remove_w(0, 1);
        assert!(matches!(smallest_saliency_w(&single), Err(Error::Logic(_))));
    }

    #[test]
    fn invalid_etas_rejected() {
        let cfg = PruneConfig {
            eta1: 0.4,
            eta2: 0.2,
            ..PruneConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dead_hidden_node_is_folded_into_bias() {
        let mut net = NetworkWeights::zeros(2, 2, 2);
        net.set_w(0, 0, 1.5);
        net.set_w(0, 1, -0.7);
        net.set_v(0, 0, 2.0);
        net.set_v(1, 0, -2.0);
        net.set_w(1, 2, 0.8); // bias only
        net.set_v(0, 1, 1.1);
        net.set_v(1, 1, 0.4);
        net.remove_w(1, 0);
        net.remove_w(1, 1);
        let x = [0.3, 0.9];
        let before = net.forward(&x).unwrap().outputs;
        let mut trace = PruneTrace::default();
        remove_dead_nodes(&mut net, &mut trace, 1, 1.0);
        let after = net.forward(&x).unwrap().outputs;
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(trace.removed_hidden, vec![1]);
        assert_eq!(net.live_hidden(), vec![0]);
        net.validate().unwrap();
    }
}
