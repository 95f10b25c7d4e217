//! Independent oracles shared by the integration tests. Nothing here calls the
//! code under test except to read network weights.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use reann_core::dataset::SchemaId;
use reann_core::network::{NetworkWeights, TrainConfig};
use reann_core::pipeline::RunConfig;
use reann_core::rules::DiscreteTable;

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn config(dataset: SchemaId) -> RunConfig {
    let mut cfg = RunConfig::for_dataset(dataset);
    cfg.data_path = Some(data_file(dataset.default_file_name()));
    cfg
}

/// Per-pattern objective `½ Σ (S_p − t_p)² + share · penalty`, written out
/// directly from the layer equations.
pub fn objective(net: &NetworkWeights, x: &[f64], target: usize, cfg: &TrainConfig, share: f64) -> f64 {
    let n = net.n_inputs;
    let h = net.n_hidden;
    let mut hidden = vec![0.0; h];
    for (m, slot) in hidden.iter_mut().enumerate() {
        let mut y = net.w[m * (n + 1) + n];
        for l in 0..n {
            y += net.w[m * (n + 1) + l] * x[l];
        }
        *slot = y.tanh();
    }
    let mut err = 0.0;
    for p in 0..net.n_outputs {
        let mut y = net.v[p * (h + 1) + h];
        for m in 0..h {
            y += net.v[p * (h + 1) + m] * hidden[m];
        }
        let s = 1.0 / (1.0 + (-y).exp());
        let t = if p == target { 1.0 } else { 0.0 };
        err += 0.5 * (s - t) * (s - t);
    }
    let mut pen = 0.0;
    for (u, live) in net.w.iter().zip(&net.mask_w).chain(net.v.iter().zip(&net.mask_v)) {
        if *live {
            let bu2 = cfg.beta * u * u;
            pen += cfg.eps1 * bu2 / (1.0 + bu2) + cfg.eps2 * u * u;
        }
    }
    err + share * pen
}

/// Central differences of [`objective`] for every live weight; masked weights get 0.
pub fn numeric_gradient(
    net: &NetworkWeights,
    x: &[f64],
    target: usize,
    cfg: &TrainConfig,
    share: f64,
    step: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut gw = vec![0.0; net.w.len()];
    let mut gv = vec![0.0; net.v.len()];
    for i in 0..net.w.len() {
        if net.mask_w[i] {
            let (mut a, mut b) = (net.clone(), net.clone());
            a.w[i] += step;
            b.w[i] -= step;
            gw[i] = (objective(&a, x, target, cfg, share) - objective(&b, x, target, cfg, share)) / (2.0 * step);
        }
    }
    for i in 0..net.v.len() {
        if net.mask_v[i] {
            let (mut a, mut b) = (net.clone(), net.clone());
            a.v[i] += step;
            b.v[i] -= step;
            gv[i] = (objective(&a, x, target, cfg, share) - objective(&b, x, target, cfg, share)) / (2.0 * step);
        }
    }
    (gw, gv)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Random network with some masked weights, plus one input pattern and target.
pub fn random_case(rng: &mut impl Rng) -> (NetworkWeights, Vec<f64>, usize) {
    let n = rng.random_range(1..=6);
    let h = rng.random_range(1..=4);
    let c = rng.random_range(1..=3);
    let mut net = NetworkWeights::random(n, h, c, (-2.0, 2.0), rng);
    for i in 0..net.w.len() {
        if rng.random_bool(0.15) {
            net.w[i] = 0.0;
            net.mask_w[i] = false;
        }
    }
    for i in 0..net.v.len() {
        if rng.random_bool(0.15) {
            net.v[i] = 0.0;
            net.mask_v[i] = false;
        }
    }
    let x = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    (net, x, rng.random_range(0..c))
}

/// Straight transcription of the flow chart: H, count and sum arrays; each
/// value joins the first nearest cluster if within ε of its running center,
/// otherwise opens cluster D + 1; finally H(j) := sum(j) / count(j).
pub fn fig5(values: &[f64], eps: f64) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let mut h: Vec<f64> = vec![values[0]];
    let mut count: Vec<usize> = vec![1];
    let mut sum: Vec<f64> = vec![values[0]];
    for &delta in &values[1..] {
        let mut jbar = 0;
        for j in 1..h.len() {
            if (delta - h[j]).abs() < (delta - h[jbar]).abs() {
                jbar = j;
            }
        }
        if (delta - h[jbar]).abs() <= eps {
            count[jbar] += 1;
            sum[jbar] += delta;
            h[jbar] = sum[jbar] / count[jbar] as f64;
        } else {
            h.push(delta);
            count.push(1);
            sum.push(delta);
        }
    }
    for j in 0..h.len() {
        h[j] = sum[j] / count[j] as f64;
    }
    (h, count, sum)
}

/// `Σ (group size − majority count) / N` over groups of identical rows, by
/// pairwise comparison.
pub fn brute_inconsistency(rows: &[Vec<usize>], labels: &[usize]) -> f64 {
    let n = rows.len();
    let mut seen = vec![false; n];
    let mut minority = 0;
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let members: Vec<usize> = (i..n).filter(|&j| rows[j] == rows[i]).collect();
        let mut best = 0;
        for &a in &members {
            seen[a] = true;
            best = best.max(members.iter().filter(|&&b| labels[b] == labels[a]).count());
        }
        minority += members.len() - best;
    }
    minority as f64 / n as f64
}

/// Exhaustive search over every subset of boundary midpoints with fewer than
/// `max_intervals` cuts: fewest majority errors, then fewest intervals, then
/// lexicographically earliest cut positions.
pub fn brute_cutpoints(values: &[f64], labels: &[usize], max_intervals: usize) -> Vec<f64> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mids: Vec<f64> = distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    let n_labels = labels.iter().max().map_or(1, |m| m + 1);
    let errors = |cuts: &[f64]| -> usize {
        let mut hist = vec![vec![0usize; n_labels]; cuts.len() + 1];
        for (&x, &l) in values.iter().zip(labels) {
            let k = cuts.iter().filter(|&&c| x > c).count();
            hist[k][l] += 1;
        }
        hist.iter()
            .map(|h| h.iter().sum::<usize>() - h.iter().max().copied().unwrap_or(0))
            .sum()
    };
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    for mask in 0u64..(1u64 << mids.len()) {
        let idx: Vec<usize> = (0..mids.len()).filter(|&i| mask >> i & 1 == 1).collect();
        if idx.len() + 1 > max_intervals.max(1) {
            continue;
        }
        let cuts: Vec<f64> = idx.iter().map(|&i| mids[i]).collect();
        let key = (errors(&cuts), idx.len(), idx);
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    best.map(|(_, _, idx)| idx.iter().map(|&i| mids[i]).collect()).unwrap_or_default()
}

/// Random table with up to 5 attributes of up to 4 values, up to 3 labels and
/// up to 50 rows; about half the tables mark some columns ordinal.
pub fn random_table(rng: &mut impl Rng) -> DiscreteTable {
    let width = rng.random_range(1..=5);
    let arity: Vec<usize> = (0..width).map(|_| rng.random_range(1..=4)).collect();
    let n_labels = rng.random_range(1..=3);
    let n = rng.random_range(1..=50);
    DiscreteTable {
        attribute_names: (0..width).map(|a| format!("a{a}")).collect(),
        values: arity.iter().map(|&k| (0..k).map(|v| v.to_string()).collect()).collect(),
        rows: (0..n)
            .map(|_| arity.iter().map(|&k| rng.random_range(0..k)).collect())
            .collect(),
        labels: (0..n).map(|_| rng.random_range(0..n_labels)).collect(),
        label_names: (0..n_labels).map(|l| l.to_string()).collect(),
        ordinal: if rng.random_bool(0.5) {
            (0..width).map(|_| rng.random_bool(0.5)).collect()
        } else {
            Vec::new()
        },
    }
}
