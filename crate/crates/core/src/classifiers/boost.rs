//! LogitBoost with regression stumps, one binary model per class.
//!
//! Each round fits a weighted least-squares stump to the working response
//! `z = (y - p) / (p (1 - p))` (clipped to `±z_max`) with weights
//! `p (1 - p)`, then sets `F += f / 2` and `p = 1 / (1 + exp(-2F))`.

use serde::{Deserialize, Serialize};

use super::{Scores, TrainingSet, N_CLASSES};
use crate::features::row_value;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    /// `None` for a constant update.
    pub feature: Option<u32>,
    pub threshold: f64,
    /// Contribution to F (already halved) when `count < threshold`.
    pub below: f64,
    /// Contribution to F when `count >= threshold`.
    pub above: f64,
}

impl Stump {
    fn eval(&self, row: &[(u32, u32)]) -> f64 {
        match self.feature {
            Some(f) if f64::from(row_value(row, f)) >= self.threshold => self.above,
            _ => self.below,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    /// One additive model per class, in class order.
    pub stumps: Vec<Vec<Stump>>,
}

impl BoostModel {
    /// Per-class probability `1 / (1 + exp(-2F))`.
    pub fn class_probabilities(&self, row: &[(u32, u32)]) -> Scores {
        let mut out = [0.0; N_CLASSES];
        for (c, stumps) in self.stumps.iter().enumerate() {
            let f: f64 = stumps.iter().map(|s| s.eval(row)).sum();
            out[c] = logistic(2.0 * f);
        }
        out
    }

    pub(crate) fn scores(&self, row: &[(u32, u32)]) -> Scores {
        let p = self.class_probabilities(row);
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            p.map(|v| v / sum)
        } else {
            [1.0 / N_CLASSES as f64; N_CLASSES]
        }
    }

    pub(crate) fn check_shape(&self, n_terms: usize) -> bool {
        self.stumps.len() == N_CLASSES
            && self
                .stumps
                .iter()
                .flatten()
                .all(|s| s.feature.is_none_or(|f| (f as usize) < n_terms))
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Column view: per feature, `(row, count)` sorted by descending count.
fn columns(data: &TrainingSet<'_>) -> Vec<Vec<(u32, u32)>> {
    let mut cols = vec![Vec::new(); data.dtm.n_terms];
    for (r, row) in data.dtm.rows.iter().enumerate() {
        for &(f, v) in row {
            cols[f as usize].push((r as u32, v));
        }
    }
    for c in &mut cols {
        c.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    }
    cols
}

pub(crate) fn fit(data: &TrainingSet<'_>, iterations: usize, z_max: f64) -> BoostModel {
    let cols = columns(data);
    let stumps = (0..N_CLASSES)
        .map(|class| fit_binary(data, &cols, class, iterations, z_max))
        .collect();
    BoostModel { stumps }
}

fn fit_binary(
    data: &TrainingSet<'_>,
    cols: &[Vec<(u32, u32)>],
    class: usize,
    iterations: usize,
    z_max: f64,
) -> Vec<Stump> {
    let n = data.y.len();
    let target: Vec<f64> = data
        .y
        .iter()
        .map(|&c| if c == class { 1.0 } else { 0.0 })
        .collect();
    let mut f = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        for i in 0..n {
            let p = logistic(2.0 * f[i]);
            w[i] = (p * (1.0 - p)).max(1e-24);
            z[i] = if target[i] > 0.5 {
                (1.0 / p).min(z_max)
            } else {
                (-1.0 / (1.0 - p)).max(-z_max)
            };
        }
        let stump = fit_stump(cols, &w, &z);
        // Apply: `below` everywhere, then correct rows at or above the threshold.
        for fi in f.iter_mut() {
            *fi += stump.below;
        }
        if let Some(feat) = stump.feature {
            for &(r, v) in &cols[feat as usize] {
                if f64::from(v) < stump.threshold {
                    break;
                }
                f[r as usize] += stump.above - stump.below;
            }
        }
        out.push(stump);
    }
    out
}

/// Weighted least-squares stump, halved for the LogitBoost update.
fn fit_stump(cols: &[Vec<(u32, u32)>], w: &[f64], z: &[f64]) -> Stump {
    let total_w: f64 = w.iter().sum();
    let total_s: f64 = w.iter().zip(z).map(|(a, b)| a * b).sum();
    let base = total_s * total_s / total_w;
    let mut best_score = base;
    let mut best = Stump {
        feature: None,
        threshold: 0.0,
        below: 0.5 * total_s / total_w,
        above: 0.5 * total_s / total_w,
    };
    for (feat, col) in cols.iter().enumerate() {
        let mut above_w = 0.0;
        let mut above_s = 0.0;
        let mut i = 0;
        while i < col.len() {
            let value = col[i].1;
            while i < col.len() && col[i].1 == value {
                let r = col[i].0 as usize;
                above_w += w[r];
                above_s += w[r] * z[r];
                i += 1;
            }
            let next = col.get(i).map_or(0, |e| e.1);
            let below_w = total_w - above_w;
            if below_w <= 1e-12 * total_w {
                continue;
            }
            let below_s = total_s - above_s;
            let score = above_s * above_s / above_w + below_s * below_s / below_w;
            if score > best_score + 1e-12 * best_score.abs().max(1e-12) {
                best_score = score;
                best = Stump {
                    feature: Some(feat as u32),
                    threshold: (f64::from(value) + f64::from(next)) / 2.0,
                    below: 0.5 * below_s / below_w,
                    above: 0.5 * above_s / above_w,
                };
            }
        }
    }
    best
}
