//! Maximum entropy classifier: multinomial logistic regression with an L2
//! penalty, trained by full-batch gradient descent from zero weights.
//!
//! Objective: `mean_i(-log p(y_i | x_i)) + l2/2 * |W|^2` (bias unpenalized).

use serde::{Deserialize, Serialize};

use super::{softmax, Scores, SentimentLabel, TrainingSet, N_CLASSES};
use crate::features::DocumentTermMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntParams {
    pub n_terms: usize,
    /// Class-major weights: `weights[c * n_terms + t]`.
    pub weights: Vec<f64>,
    pub bias: [f64; N_CLASSES],
}

impl MaxEntParams {
    pub fn zeros(n_terms: usize) -> Self {
        MaxEntParams {
            n_terms,
            weights: vec![0.0; N_CLASSES * n_terms],
            bias: [0.0; N_CLASSES],
        }
    }

    fn logits(&self, row: &[(u32, u32)]) -> Scores {
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            let w = &self.weights[c * self.n_terms..(c + 1) * self.n_terms];
            *zc += row
                .iter()
                .map(|&(t, v)| f64::from(v) * w[t as usize])
                .sum::<f64>();
        }
        z
    }

    pub(crate) fn scores(&self, row: &[(u32, u32)]) -> Scores {
        let mut z = self.logits(row);
        softmax(&mut z);
        z
    }

    pub(crate) fn check_shape(&self, n_terms: usize) -> bool {
        self.n_terms == n_terms && self.weights.len() == N_CLASSES * n_terms
    }

    /// Flat view used by finite-difference checks: weights then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.extend_from_slice(&self.bias);
        v
    }

    pub fn from_flat(n_terms: usize, flat: &[f64]) -> Self {
        let split = N_CLASSES * n_terms;
        let mut bias = [0.0; N_CLASSES];
        bias.copy_from_slice(&flat[split..split + N_CLASSES]);
        MaxEntParams {
            n_terms,
            weights: flat[..split].to_vec(),
            bias,
        }
    }
}

/// Objective value and its analytic gradient (same layout as the parameters).
pub fn loss_and_gradient(
    params: &MaxEntParams,
    dtm: &DocumentTermMatrix,
    labels: &[SentimentLabel],
    l2: f64,
) -> (f64, MaxEntParams) {
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    loss_grad(params, dtm, &y, l2)
}

fn loss_grad(
    params: &MaxEntParams,
    dtm: &DocumentTermMatrix,
    y: &[usize],
    l2: f64,
) -> (f64, MaxEntParams) {
    let v = params.n_terms;
    let n = dtm.n_docs.max(1) as f64;
    let mut grad = MaxEntParams::zeros(v);
    let mut loss = 0.0;
    for (row, &yi) in dtm.rows.iter().zip(y) {
        let p = params.scores(row);
        loss -= p[yi].max(f64::MIN_POSITIVE).ln();
        for c in 0..N_CLASSES {
            let d = (p[c] - if c == yi { 1.0 } else { 0.0 }) / n;
            grad.bias[c] += d;
            let g = &mut grad.weights[c * v..(c + 1) * v];
            for &(t, cnt) in row {
                g[t as usize] += d * f64::from(cnt);
            }
        }
    }
    loss /= n;
    let mut penalty = 0.0;
    for (g, w) in grad.weights.iter_mut().zip(&params.weights) {
        penalty += w * w;
        *g += l2 * w;
    }
    (loss + 0.5 * l2 * penalty, grad)
}

/// Trains and returns the objective before each epoch plus after the last one.
pub(crate) fn fit(
    data: &TrainingSet<'_>,
    l2: f64,
    learning_rate: f64,
    epochs: usize,
) -> (MaxEntParams, Vec<f64>) {
    let mut params = MaxEntParams::zeros(data.dtm.n_terms);
    let mut history = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        let (loss, grad) = loss_grad(&params, data.dtm, &data.y, l2);
        history.push(loss);
        for (w, g) in params.weights.iter_mut().zip(&grad.weights) {
            *w -= learning_rate * g;
        }
        for (b, g) in params.bias.iter_mut().zip(grad.bias) {
            *b -= learning_rate * g;
        }
    }
    history.push(loss_grad(&params, data.dtm, &data.y, l2).0);
    (params, history)
}

/// Full training run returning the per-epoch objective values.
pub fn fit_with_history(
    dtm: &DocumentTermMatrix,
    labels: &[SentimentLabel],
    l2: f64,
    learning_rate: f64,
    epochs: usize,
) -> (MaxEntParams, Vec<f64>) {
    let data = TrainingSet {
        dtm,
        y: labels.iter().map(|l| l.index()).collect(),
    };
    fit(&data, l2, learning_rate, epochs)
}
