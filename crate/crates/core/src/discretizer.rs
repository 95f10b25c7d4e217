//! One-pass threshold clustering of hidden-node activations.
//!
//! Each activation joins the nearest existing cluster if it lies within `ε` of
//! that cluster's running mean, otherwise it seeds a new cluster. After the pass
//! every center becomes the mean of its members. `ε` is then searched on the grid
//! `ζ, 2ζ, … < 1` per hidden node, largest first, keeping the largest value that
//! preserves the network's accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{argmax, NetworkWeights, Samples};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub epsilon: f64,
    pub centers: Vec<f64>,
    pub counts: Vec<usize>,
    pub sums: Vec<f64>,
}

impl ClusterModel {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Nearest center as `(index, center)`; ties go to the lower index.
    pub fn discretize(&self, value: f64) -> (usize, f64) {
        let j = nearest(&self.centers, value);
        (j, self.centers[j])
    }
}

fn nearest(centers: &[f64], value: f64) -> usize {
    let mut best = 0;
    let mut best_d = (value - centers[0]).abs();
    for (j, &c) in centers.iter().enumerate().skip(1) {
        let d = (value - c).abs();
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

pub fn discretize(value: f64, model: &ClusterModel) -> (usize, f64) {
    model.discretize(value)
}

/// `max − min ≤ tol`
pub fn is_constant(values: &[f64], tol: f64) -> bool {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= tol
}

/// Single pass over `values` in order. The distance test uses each cluster's
/// running mean.
pub fn cluster_node(values: &[f64], epsilon: f64) -> ClusterModel {
    let mut centers: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for &delta in values {
        if !centers.is_empty() {
            let j = nearest(&centers, delta);
            if (delta - centers[j]).abs() <= epsilon {
                counts[j] += 1;
                sums[j] += delta;
                centers[j] = sums[j] / counts[j] as f64;
                continue;
            }
        }
        centers.push(delta);
        counts.push(1);
        sums.push(delta);
    }
    let centers = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    ClusterModel {
        epsilon,
        centers,
        counts,
        sums,
    }
}

fn single_center(values: &[f64], epsilon: f64) -> ClusterModel {
    let sum: f64 = values.iter().sum();
    ClusterModel {
        epsilon,
        centers: vec![sum / values.len() as f64],
        counts: vec![values.len()],
        sums: vec![sum],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeModel {
    pub hidden: usize,
    /// Activation was nearly constant; the model has one center and no ε search ran.
    pub constant: bool,
    pub model: ClusterModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedNetwork {
    pub base: NetworkWeights,
    /// One entry per live hidden node, in node order.
    pub models: Vec<NodeModel>,
    pub continuous_accuracy: f64,
    pub accuracy_floor: f64,
    pub discrete_accuracy: f64,
}

impl DiscretizedNetwork {
    /// Hidden activations with every modelled node snapped to its nearest center.
    pub fn hidden(&self, x: &[f64]) -> Vec<f64> {
        let mut hidden = self.base.forward_unchecked(x).hidden;
        for nm in &self.models {
            hidden[nm.hidden] = nm.model.discretize(hidden[nm.hidden]).1;
        }
        hidden
    }

    /// Cluster index of every modelled node, in `models` order.
    pub fn cluster_indices(&self, x: &[f64]) -> Vec<usize> {
        let hidden = self.base.forward_unchecked(x).hidden;
        self.models
            .iter()
            .map(|nm| nm.model.discretize(hidden[nm.hidden]).0)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.base.outputs_from_hidden(&self.hidden(x)))
    }

    pub fn accuracy(&self, data: &Samples) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let right = data
            .inputs
            .iter()
            .zip(&data.targets)
            .filter(|(x, &t)| self.predict(x) == t)
            .count();
        right as f64 / data.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscretizeConfig {
    pub zeta: f64,
    pub constant_tol: f64,
    /// Fixed accuracy floor; when absent, continuous accuracy minus `floor_margin`.
    pub accuracy_floor: Option<f64>,
    pub floor_margin: f64,
}

impl Default for DiscretizeConfig {
    fn default() -> Self {
        DiscretizeConfig {
            zeta: 0.1,
            constant_tol: 0.05,
            accuracy_floor: None,
            floor_margin: 0.01,
        }
    }
}

impl DiscretizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::Config(format!("zeta must lie in (0, 1), got {}", self.zeta)));
        }
        if !(self.constant_tol >= 0.0) {
            return Err(Error::Config("constant_tol must be non-negative".into()));
        }
        Ok(())
    }

    /// `ζ, 2ζ, …` strictly below 1, largest first.
    pub fn grid(&self) -> Vec<f64> {
        let mut grid: Vec<f64> = (1..)
            .map(|i| i as f64 * self.zeta)
            .take_while(|&e| e < 1.0 - 1e-12)
            .collect();
        grid.reverse();
        grid
    }
}

/// Picks an ε per live hidden node (largest grid value first) such that the
/// network with discretized activations keeps accuracy ≥ the floor on `data`.
/// Nodes are processed in order; earlier nodes stay discretized while later ones
/// are searched, later nodes stay continuous until their turn.
pub fn search_epsilon(
    net: &NetworkWeights,
    data: &Samples,
    cfg: &DiscretizeConfig,
) -> Result<DiscretizedNetwork> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Logic("cannot discretize on an empty dataset".into()));
    }
    let activations: Vec<Vec<f64>> = data
        .inputs
        .iter()
        .map(|x| net.forward_unchecked(x).hidden)
        .collect();
    let continuous_accuracy = accuracy_with(net, &activations, &data.targets, &[]);
    let floor = cfg
        .accuracy_floor
        .unwrap_or(continuous_accuracy - cfg.floor_margin);

    let mut models: Vec<NodeModel> = Vec::new();
    for m in net.live_hidden() {
        let values: Vec<f64> = activations.iter().map(|a| a[m]).collect();
        if is_constant(&values, cfg.constant_tol) {
            models.push(NodeModel {
                hidden: m,
                constant: true,
                model: single_center(&values, cfg.constant_tol),
            });
            continue;
        }
        let mut accepted = None;
        for eps in cfg.grid().into_iter().chain(std::iter::once(cfg.zeta / 10.0)) {
            let candidate = NodeModel {
                hidden: m,
                constant: false,
                model: cluster_node(&values, eps),
            };
            models.push(candidate);
            let acc = accuracy_with(net, &activations, &data.targets, &models);
            let candidate = models.pop().expect("just pushed");
            if acc >= floor {
                accepted = Some(candidate);
                break;
            }
        }
        match accepted {
            Some(nm) => models.push(nm),
            None => return Err(Error::Discretization { hidden: m, floor }),
        }
    }

    let discrete_accuracy = accuracy_with(net, &activations, &data.targets, &models);
    Ok(DiscretizedNetwork {
        base: net.clone(),
        models,
        continuous_accuracy,
        accuracy_floor: floor,
        discrete_accuracy,
    })
}

fn accuracy_with(
    net: &NetworkWeights,
    activations: &[Vec<f64>],
    targets: &[usize],
    models: &[NodeModel],
) -> f64 {
    let mut hidden = vec![0.0; net.n_hidden];
    let right = activations
        .iter()
        .zip(targets)
        .filter(|(a, &t)| {
            hidden.copy_from_slice(a);
            for nm in models {
                hidden[nm.hidden] = nm.model.discretize(a[nm.hidden]).1;
            }
            argmax(&net.outputs_from_hidden(&hidden)) == t
        })
        .count();
    right as f64 / targets.len() as f64
}

pub const DISCRETIZED_SCHEMA: &str = "reann.discretized/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSnapshot {
    pub schema: String,
    pub discretized: DiscretizedNetwork,
}

impl DiscretizedSnapshot {
    pub fn new(discretized: DiscretizedNetwork) -> Self {
        DiscretizedSnapshot {
            schema: DISCRETIZED_SCHEMA.to_string(),
            discretized,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: DiscretizedSnapshot = serde_json::from_str(text)?;
        if snap.schema != DISCRETIZED_SCHEMA {
            return Err(Error::Config(format!(
                "expected schema {DISCRETIZED_SCHEMA}, found {}",
                snap.schema
            )));
        }
        Ok(snap)
    }
}
