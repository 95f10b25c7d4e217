//! Constructive sizing of the hidden layer: start small, train to a plateau,
//! and add one hidden node at a time until the validation error is acceptable.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{self, NetworkWeights, Samples, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthConfig {
    pub initial_hidden: usize,
    /// Upper bound on the hidden layer; `None` means the number of network inputs.
    pub max_hidden: Option<usize>,
    /// Validation misclassification fraction at or below which growth stops.
    pub accept_threshold: f64,
    /// Tail fraction of the training split held out for validation while growing.
    pub validation_fraction: f64,
    pub train: TrainConfig,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            initial_hidden: 1,
            max_hidden: None,
            accept_threshold: 0.05,
            validation_fraction: 0.2,
            train: TrainConfig::default(),
        }
    }
}

impl GrowthConfig {
    pub fn max_hidden_for(&self, n_inputs: usize) -> usize {
        self.max_hidden.unwrap_or(n_inputs).max(self.initial_hidden)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_hidden == 0 {
            return Err(Error::Config("initial_hidden must be at least 1".into()));
        }
        if matches!(self.max_hidden, Some(m) if m < self.initial_hidden) {
            return Err(Error::Config("max_hidden is below initial_hidden".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthStage {
    pub hidden: usize,
    pub epochs: usize,
    pub train_sse: f64,
    pub validation_misclass: f64,
    pub sse_curve: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub stages: Vec<GrowthStage>,
    /// Growth stopped at `max_hidden` without reaching the acceptance threshold.
    pub capped: bool,
}

impl GrowthTrace {
    pub fn epochs(&self) -> usize {
        self.stages.iter().map(|s| s.epochs).sum()
    }
}

/// Grows the hidden layer one node per stage. Returns the network trained at its
/// final size. When the cap is hit, the stage with the lowest validation error
/// is returned and the trace is flagged.
pub fn grow(
    train: &Samples,
    valid: &Samples,
    n_inputs: usize,
    cfg: &GrowthConfig,
) -> Result<(NetworkWeights, GrowthTrace)> {
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Logic("growth needs non-empty training and validation sets".into()));
    }
    cfg.validate()?;
    let max_hidden = cfg.max_hidden_for(n_inputs);
    let mut rng = cfg.train.rng();
    let mut net = NetworkWeights::random(
        n_inputs,
        cfg.initial_hidden,
        train.n_classes,
        cfg.train.init_range,
        &mut rng,
    );
    let mut trace = GrowthTrace::default();
    let mut best: Option<(f64, NetworkWeights)> = None;

    loop {
        let (trained, stats) = network::train_to_plateau(&net, train, &cfg.train)?;
        let val_err = network::misclass_rate(&trained, valid);
        debug!(
            "growth stage h={} epochs={} validation misclass={val_err:.4}",
            trained.n_hidden,
            stats.len()
        );
        trace.stages.push(GrowthStage {
            hidden: trained.n_hidden,
            epochs: stats.len(),
            train_sse: stats.last().map_or(0.0, |s| s.sse),
            validation_misclass: val_err,
            sse_curve: stats.iter().map(|s| s.sse).collect(),
        });

        if val_err <= cfg.accept_threshold {
            return Ok((trained, trace));
        }
        if best.as_ref().is_none_or(|(e, _)| val_err < *e) {
            best = Some((val_err, trained.clone()));
        }
        if trained.n_hidden >= max_hidden {
            warn!("growth reached {max_hidden} hidden nodes without acceptable validation error");
            trace.capped = true;
            let (_, net) = best.expect("at least one stage ran");
            return Ok((net, trace));
        }
        net = trained;
        net.add_hidden_node(cfg.train.init_range, &mut rng);
    }
}

/// Outcome of growing on a training split: the accepted architecture after a
/// final retrain on the whole split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthOutcome {
    pub network: NetworkWeights,
    pub trace: GrowthTrace,
    pub retrain_epochs: usize,
}

/// Holds out the tail of `train` for validation, grows, then retrains the
/// accepted network on all of `train`.
pub fn grow_on_split(train: &Samples, n_inputs: usize, cfg: &GrowthConfig) -> Result<GrowthOutcome> {
    let held = ((train.len() as f64) * cfg.validation_fraction).round() as usize;
    let held = held.clamp(1, train.len().saturating_sub(1).max(1));
    if train.len() < 2 {
        return Err(Error::Logic("growth needs at least two training patterns".into()));
    }
    let cut = train.len() - held;
    let (fit, valid) = (train.slice(0..cut), train.slice(cut..train.len()));
    let (net, trace) = grow(&fit, &valid, n_inputs, cfg)?;
    let (network, stats) = network::train_to_plateau(&net, train, &cfg.train)?;
    Ok(GrowthOutcome {
        network,
        trace,
        retrain_epochs: stats.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(rows: &[([f64; 2], usize)]) -> Samples {
        Samples {
            inputs: rows.iter().map(|(x, _)| x.to_vec()).collect(),
            targets: rows.iter().map(|(_, t)| *t).collect(),
            n_classes: 2,
        }
    }

    #[test]
    fn config_validation() {
        let bad = GrowthConfig {
            initial_hidden: 3,
            max_hidden: Some(2),
            ..GrowthConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(GrowthConfig::default().max_hidden_for(9), 9);
    }

    #[test]
    fn stages_increase_by_one() {
        let xor = samples(&[
            ([0.0, 0.0], 0),
            ([0.0, 1.0], 1),
            ([1.0, 0.0], 1),
            ([1.0, 1.0], 0),
        ]);
        let cfg = GrowthConfig {
            accept_threshold: -1.0,
            max_hidden: Some(3),
            train: TrainConfig {
                max_epochs: 30,
                ..TrainConfig::default()
            },
            ..GrowthConfig::default()
        };
        let (_, trace) = grow(&xor, &xor, 2, &cfg).unwrap();
        let hs: Vec<usize> = trace.stages.iter().map(|s| s.hidden).collect();
        assert_eq!(hs, vec![1, 2, 3]);
        assert!(trace.capped);
    }
}
