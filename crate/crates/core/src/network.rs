//! Three-layer feedforward classifier: tanh hidden layer, sigmoid outputs,
//! sum-of-squares error with a weight penalty, trained by per-pattern backprop.
//!
//! Weights are stored row-major. `w` is `h × (n + 1)` and `v` is `C × (h + 1)`;
//! the last column of each holds the bias weight attached to a constant input of 1.
//! Every weight has a mask bit, and a masked weight is exactly zero at all times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkWeights {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub mask_w: Vec<bool>,
    pub mask_v: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl NetworkWeights {
    pub fn zeros(n_inputs: usize, n_hidden: usize, n_outputs: usize) -> Self {
        NetworkWeights {
            n_inputs,
            n_hidden,
            n_outputs,
            w: vec![0.0; n_hidden * (n_inputs + 1)],
            v: vec![0.0; n_outputs * (n_hidden + 1)],
            mask_w: vec![true; n_hidden * (n_inputs + 1)],
            mask_v: vec![true; n_outputs * (n_hidden + 1)],
        }
    }

    /// Fully connected network with weights drawn uniformly from `range`.
    pub fn random(
        n_inputs: usize,
        n_hidden: usize,
        n_outputs: usize,
        range: (f64, f64),
        rng: &mut impl Rng,
    ) -> Self {
        let mut net = Self::zeros(n_inputs, n_hidden, n_outputs);
        for u in net.w.iter_mut().chain(net.v.iter_mut()) {
            *u = rng.random_range(range.0..=range.1);
        }
        net
    }

    pub fn w_cols(&self) -> usize {
        self.n_inputs + 1
    }

    pub fn v_cols(&self) -> usize {
        self.n_hidden + 1
    }

    /// Input→hidden weight; `input == n_inputs` addresses the hidden bias.
    pub fn w(&self, hidden: usize, input: usize) -> f64 {
        self.w[hidden * self.w_cols() + input]
    }

    /// Hidden→output weight; `hidden == n_hidden` addresses the output bias.
    pub fn v(&self, output: usize, hidden: usize) -> f64 {
        self.v[output * self.v_cols() + hidden]
    }

    pub fn set_w(&mut self, hidden: usize, input: usize, value: f64) {
        let i = hidden * self.w_cols() + input;
        if self.mask_w[i] {
            self.w[i] = value;
        }
    }

    pub fn set_v(&mut self, output: usize, hidden: usize, value: f64) {
        let i = output * self.v_cols() + hidden;
        if self.mask_v[i] {
            self.v[i] = value;
        }
    }

    pub fn w_live(&self, hidden: usize, input: usize) -> bool {
        self.mask_w[hidden * self.w_cols() + input]
    }

    pub fn v_live(&self, output: usize, hidden: usize) -> bool {
        self.mask_v[output * self.v_cols() + hidden]
    }

    pub fn remove_w(&mut self, hidden: usize, input: usize) {
        let i = hidden * self.w_cols() + input;
        self.mask_w[i] = false;
        self.w[i] = 0.0;
    }

    pub fn remove_v(&mut self, output: usize, hidden: usize) {
        let i = output * self.v_cols() + hidden;
        self.mask_v[i] = false;
        self.v[i] = 0.0;
    }

    /// Appends a hidden node with fresh random weights; existing weights are kept.
    pub fn add_hidden_node(&mut self, range: (f64, f64), rng: &mut impl Rng) {
        let old_cols = self.v_cols();
        for _ in 0..self.w_cols() {
            self.w.push(rng.random_range(range.0..=range.1));
            self.mask_w.push(true);
        }
        let mut v = Vec::with_capacity(self.n_outputs * (old_cols + 1));
        let mut mask_v = Vec::with_capacity(v.capacity());
        for p in 0..self.n_outputs {
            let row = &self.v[p * old_cols..(p + 1) * old_cols];
            let mrow = &self.mask_v[p * old_cols..(p + 1) * old_cols];
            v.extend_from_slice(&row[..self.n_hidden]);
            mask_v.extend_from_slice(&mrow[..self.n_hidden]);
            v.push(rng.random_range(range.0..=range.1));
            mask_v.push(true);
            v.push(row[self.n_hidden]);
            mask_v.push(mrow[self.n_hidden]);
        }
        self.v = v;
        self.mask_v = mask_v;
        self.n_hidden += 1;
    }

    /// Live connections, bias weights excluded.
    pub fn live_connections(&self) -> usize {
        let w = (0..self.n_hidden)
            .flat_map(|m| (0..self.n_inputs).map(move |l| (m, l)))
            .filter(|&(m, l)| self.w_live(m, l))
            .count();
        let v = (0..self.n_outputs)
            .flat_map(|p| (0..self.n_hidden).map(move |m| (p, m)))
            .filter(|&(p, m)| self.v_live(p, m))
            .count();
        w + v
    }

    /// Hidden nodes with at least one live input connection and one live output connection.
    pub fn live_hidden(&self) -> Vec<usize> {
        (0..self.n_hidden)
            .filter(|&m| {
                (0..self.n_inputs).any(|l| self.w_live(m, l))
                    && (0..self.n_outputs).any(|p| self.v_live(p, m))
            })
            .collect()
    }

    /// Inputs feeding at least one live hidden node.
    pub fn live_inputs(&self) -> Vec<usize> {
        let hidden = self.live_hidden();
        (0..self.n_inputs)
            .filter(|&l| hidden.iter().any(|&m| self.w_live(m, l)))
            .collect()
    }

    /// Node count as reported in architecture tables: live inputs + live hidden + outputs.
    pub fn node_count(&self) -> usize {
        self.live_inputs().len() + self.live_hidden().len() + self.n_outputs
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_hidden == 0 {
            return Err(Error::Logic("network needs at least one hidden node".into()));
        }
        let w_len = self.n_hidden * self.w_cols();
        let v_len = self.n_outputs * self.v_cols();
        if self.w.len() != w_len
            || self.mask_w.len() != w_len
            || self.v.len() != v_len
            || self.mask_v.len() != v_len
        {
            return Err(Error::Logic("weight matrix shapes are inconsistent".into()));
        }
        let masked_nonzero = self
            .w
            .iter()
            .zip(&self.mask_w)
            .chain(self.v.iter().zip(&self.mask_v))
            .any(|(&u, &live)| !live && u != 0.0);
        if masked_nonzero {
            return Err(Error::Logic("a masked weight is non-zero".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Activations> {
        if x.len() != self.n_inputs {
            return Err(Error::Logic(format!(
                "network expects {} inputs, pattern has {}",
                self.n_inputs,
                x.len()
            )));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Activations {
        let cols = self.w_cols();
        let hidden: Vec<f64> = (0..self.n_hidden)
            .map(|m| {
                let row = &self.w[m * cols..(m + 1) * cols];
                let net: f64 = row[..self.n_inputs]
                    .iter()
                    .zip(x)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
                    + row[self.n_inputs];
                net.tanh()
            })
            .collect();
        let outputs = self.outputs_from_hidden(&hidden);
        Activations { hidden, outputs }
    }

    /// Output layer evaluated on given hidden activations (used with discretized values).
    pub fn outputs_from_hidden(&self, hidden: &[f64]) -> Vec<f64> {
        let cols = self.v_cols();
        (0..self.n_outputs)
            .map(|p| {
                let row = &self.v[p * cols..(p + 1) * cols];
                let net: f64 = row[..self.n_hidden]
                    .iter()
                    .zip(hidden)
                    .map(|(v, a)| v * a)
                    .sum::<f64>()
                    + row[self.n_hidden];
                sigmoid(net)
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.forward_unchecked(x).outputs)
    }
}

pub fn sigmoid(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A dataset encoded for the network: input vectors and class targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
    pub n_classes: usize,
}

impl Samples {
    pub fn from_dataset(data: &Dataset) -> Self {
        Samples {
            inputs: data.patterns.iter().map(|p| data.encode_inputs(p)).collect(),
            targets: data.targets(),
            n_classes: data.n_classes(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Samples {
        Samples {
            inputs: self.inputs[range.clone()].to_vec(),
            targets: self.targets[range].to_vec(),
            n_classes: self.n_classes,
        }
    }
}

/// Half the summed squared difference between outputs and one-of-C targets.
pub fn sse(net: &NetworkWeights, data: &Samples) -> f64 {
    data.inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, &t)| pattern_sse(&net.forward_unchecked(x).outputs, t))
        .sum()
}

fn pattern_sse(outputs: &[f64], target: usize) -> f64 {
    0.5 * outputs
        .iter()
        .enumerate()
        .map(|(p, &s)| {
            let d = s - f64::from(p == target);
            d * d
        })
        .sum::<f64>()
}

/// `eps1 · Σ βu²/(1+βu²) + eps2 · Σ u²` over every live weight, biases included.
pub fn penalty(net: &NetworkWeights, eps1: f64, eps2: f64, beta: f64) -> f64 {
    net.w
        .iter()
        .zip(&net.mask_w)
        .chain(net.v.iter().zip(&net.mask_v))
        .filter(|(_, &live)| live)
        .map(|(&u, _)| {
            let bu2 = beta * u * u;
            eps1 * bu2 / (1.0 + bu2) + eps2 * u * u
        })
        .sum()
}

fn penalty_derivative(u: f64, eps1: f64, eps2: f64, beta: f64) -> f64 {
    let denom = 1.0 + beta * u * u;
    eps1 * 2.0 * beta * u / (denom * denom) + 2.0 * eps2 * u
}

pub fn predict(net: &NetworkWeights, x: &[f64]) -> usize {
    net.predict(x)
}

pub fn misclass_rate(net: &NetworkWeights, data: &Samples) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let wrong = data
        .inputs
        .iter()
        .zip(&data.targets)
        .filter(|(x, &t)| net.predict(x) != t)
        .count();
    wrong as f64 / data.len() as f64
}

pub fn accuracy(net: &NetworkWeights, data: &Samples) -> f64 {
    1.0 - misclass_rate(net, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Plateau window in epochs.
    pub tau: usize,
    pub plateau_rel_tol: f64,
    pub max_epochs: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub beta: f64,
    pub seed: u64,
    pub init_range: (f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.3,
            tau: 10,
            plateau_rel_tol: 1e-3,
            max_epochs: 500,
            eps1: 0.1,
            eps2: 1e-4,
            beta: 10.0,
            seed: 0,
            init_range: (-1.0, 1.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if !(self.eps1 >= 0.0 && self.eps2 >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Config("penalty coefficients must be non-negative".into()));
        }
        if !(self.init_range.0 <= self.init_range.1) {
            return Err(Error::Config("init range is empty".into()));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

/// Gradient of `E_p + penalty_share · P` for one pattern, where `E_p` is the
/// pattern's squared error and `P` the weight penalty. Masked entries are zero.
pub fn gradient(
    net: &NetworkWeights,
    x: &[f64],
    target: usize,
    cfg: &TrainConfig,
    penalty_share: f64,
) -> Gradients {
    let act = net.forward_unchecked(x);
    let w_cols = net.w_cols();
    let v_cols = net.v_cols();

    let delta_out: Vec<f64> = act
        .outputs
        .iter()
        .enumerate()
        .map(|(p, &s)| (s - f64::from(p == target)) * s * (1.0 - s))
        .collect();

    let mut gv = vec![0.0; net.v.len()];
    for p in 0..net.n_outputs {
        for m in 0..v_cols {
            let a = if m == net.n_hidden { 1.0 } else { act.hidden[m] };
            gv[p * v_cols + m] = delta_out[p] * a;
        }
    }

    let mut gw = vec![0.0; net.w.len()];
    for m in 0..net.n_hidden {
        let back: f64 = (0..net.n_outputs)
            .map(|p| delta_out[p] * net.v(p, m))
            .sum::<f64>()
            * (1.0 - act.hidden[m] * act.hidden[m]);
        for l in 0..w_cols {
            let xl = if l == net.n_inputs { 1.0 } else { x[l] };
            gw[m * w_cols + l] = back * xl;
        }
    }

    for ((g, &u), &live) in gw
        .iter_mut()
        .zip(&net.w)
        .zip(&net.mask_w)
        .chain(gv.iter_mut().zip(&net.v).zip(&net.mask_v))
    {
        if live {
            *g += penalty_share * penalty_derivative(u, cfg.eps1, cfg.eps2, cfg.beta);
        } else {
            *g = 0.0;
        }
    }
    Gradients { w: gw, v: gv }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub sse: f64,
    pub penalty: f64,
    pub train_misclass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_sse: Option<f64>,
}

/// Per-pattern gradient descent in dataset order until the training SSE stops
/// improving by more than `plateau_rel_tol` (relative) over `tau` epochs, or
/// `max_epochs` is reached. Works on a copy; the input network is untouched.
pub fn train_to_plateau(
    net: &NetworkWeights,
    train: &Samples,
    cfg: &TrainConfig,
) -> Result<(NetworkWeights, Vec<EpochStats>)> {
    train_with_validation(net, train, None, cfg)
}

pub fn train_with_validation(
    net: &NetworkWeights,
    train: &Samples,
    validation: Option<&Samples>,
    cfg: &TrainConfig,
) -> Result<(NetworkWeights, Vec<EpochStats>)> {
    if train.is_empty() {
        return Err(Error::Logic("training set is empty".into()));
    }
    cfg.validate()?;
    let mut net = net.clone();
    let share = 1.0 / train.len() as f64;
    let mut stats: Vec<EpochStats> = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        for (x, &t) in train.inputs.iter().zip(&train.targets) {
            let g = gradient(&net, x, t, cfg, share);
            for ((u, gu), &live) in net.w.iter_mut().zip(&g.w).zip(&net.mask_w) {
                if live {
                    *u -= cfg.learning_rate * gu;
                }
            }
            for ((u, gu), &live) in net.v.iter_mut().zip(&g.v).zip(&net.mask_v) {
                if live {
                    *u -= cfg.learning_rate * gu;
                }
            }
        }

        let e = sse(&net, train);
        if !e.is_finite() || net.w.iter().chain(&net.v).any(|u| !u.is_finite()) {
            return Err(Error::Diverged { epoch, loss: e });
        }
        stats.push(EpochStats {
            epoch,
            sse: e,
            penalty: penalty(&net, cfg.eps1, cfg.eps2, cfg.beta),
            train_misclass: misclass_rate(&net, train),
            validation_sse: validation.map(|v| sse(&net, v)),
        });

        if e == 0.0 {
            break;
        }
        if stats.len() > cfg.tau {
            let before = stats[stats.len() - 1 - cfg.tau].sse;
            if (before - e) / before < cfg.plateau_rel_tol {
                break;
            }
        }
    }
    Ok((net, stats))
}

pub const NETWORK_SCHEMA: &str = "reann.network/v1";

/// Serialized network together with the configuration that trained it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub schema: String,
    pub network: NetworkWeights,
    pub train_config: TrainConfig,
}

impl NetworkSnapshot {
    pub fn new(network: NetworkWeights, train_config: TrainConfig) -> Self {
        NetworkSnapshot {
            schema: NETWORK_SCHEMA.to_string(),
            network,
            train_config,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: NetworkSnapshot = serde_json::from_str(text)?;
        if snap.schema != NETWORK_SCHEMA {
            return Err(Error::Config(format!(
                "expected schema {NETWORK_SCHEMA}, found {}",
                snap.schema
            )));
        }
        snap.network.validate()?;
        Ok(snap)
    }
}
