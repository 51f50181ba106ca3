//! Single-hidden-layer network: tanh hidden units, softmax output,
//! mean cross-entropy, full-batch gradient descent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{softmax, Scores, SentimentLabel, TrainingSet, N_CLASSES};
use crate::features::DocumentTermMatrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNetParams {
    pub n_terms: usize,
    pub hidden: usize,
    /// Input weights, term-major: `input_weights[t * hidden + h]`.
    pub input_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    /// Output weights, class-major: `output_weights[c * hidden + h]`.
    pub output_weights: Vec<f64>,
    pub output_bias: [f64; N_CLASSES],
}

impl NeuralNetParams {
    /// Uniform `[-range, range]` initialization from the model seed.
    pub fn init(n_terms: usize, hidden: usize, range: f64, seed: u64) -> Self {
        let mut r = rng::stream(seed, rng::domain::MODEL_INIT);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if range > 0.0 { r.gen_range(-range..=range) } else { 0.0 })
                .collect()
        };
        let input_weights = draw(n_terms * hidden);
        let hidden_bias = draw(hidden);
        let output_weights = draw(N_CLASSES * hidden);
        let ob = draw(N_CLASSES);
        NeuralNetParams {
            n_terms,
            hidden,
            input_weights,
            hidden_bias,
            output_weights,
            output_bias: [ob[0], ob[1], ob[2]],
        }
    }

    fn zeros_like(&self) -> Self {
        NeuralNetParams {
            n_terms: self.n_terms,
            hidden: self.hidden,
            input_weights: vec![0.0; self.input_weights.len()],
            hidden_bias: vec![0.0; self.hidden],
            output_weights: vec![0.0; self.output_weights.len()],
            output_bias: [0.0; N_CLASSES],
        }
    }

    fn hidden_activations(&self, row: &[(u32, u32)], out: &mut [f64]) {
        let h = self.hidden;
        out.copy_from_slice(&self.hidden_bias);
        for &(t, v) in row {
            let w = &self.input_weights[t as usize * h..(t as usize + 1) * h];
            let v = f64::from(v);
            for (o, wi) in out.iter_mut().zip(w) {
                *o += v * wi;
            }
        }
        for o in out.iter_mut() {
            *o = o.tanh();
        }
    }

    fn output(&self, hidden: &[f64]) -> Scores {
        let mut z = self.output_bias;
        for (c, zc) in z.iter_mut().enumerate() {
            let w = &self.output_weights[c * self.hidden..(c + 1) * self.hidden];
            *zc += w.iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>();
        }
        softmax(&mut z);
        z
    }

    pub(crate) fn scores(&self, row: &[(u32, u32)]) -> Scores {
        let mut hidden = vec![0.0; self.hidden];
        self.hidden_activations(row, &mut hidden);
        self.output(&hidden)
    }

    pub(crate) fn check_shape(&self, n_terms: usize) -> bool {
        self.n_terms == n_terms
            && self.input_weights.len() == n_terms * self.hidden
            && self.hidden_bias.len() == self.hidden
            && self.output_weights.len() == N_CLASSES * self.hidden
    }

    /// Flat view: input weights, hidden bias, output weights, output bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.input_weights.clone();
        v.extend_from_slice(&self.hidden_bias);
        v.extend_from_slice(&self.output_weights);
        v.extend_from_slice(&self.output_bias);
        v
    }

    pub fn from_flat(template: &NeuralNetParams, flat: &[f64]) -> Self {
        let a = template.input_weights.len();
        let b = a + template.hidden;
        let c = b + template.output_weights.len();
        NeuralNetParams {
            n_terms: template.n_terms,
            hidden: template.hidden,
            input_weights: flat[..a].to_vec(),
            hidden_bias: flat[a..b].to_vec(),
            output_weights: flat[b..c].to_vec(),
            output_bias: [flat[c], flat[c + 1], flat[c + 2]],
        }
    }
}

pub fn loss_and_gradient(
    params: &NeuralNetParams,
    dtm: &DocumentTermMatrix,
    labels: &[SentimentLabel],
) -> (f64, NeuralNetParams) {
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    loss_grad(params, dtm, &y)
}

fn loss_grad(params: &NeuralNetParams, dtm: &DocumentTermMatrix, y: &[usize]) -> (f64, NeuralNetParams) {
    let h = params.hidden;
    let n = dtm.n_docs.max(1) as f64;
    let mut grad = params.zeros_like();
    let mut hidden = vec![0.0; h];
    let mut delta_hidden = vec![0.0; h];
    let mut loss = 0.0;
    for (row, &yi) in dtm.rows.iter().zip(y) {
        params.hidden_activations(row, &mut hidden);
        let p = params.output(&hidden);
        loss -= p[yi].max(f64::MIN_POSITIVE).ln();

        delta_hidden.iter_mut().for_each(|d| *d = 0.0);
        for c in 0..N_CLASSES {
            let d = (p[c] - if c == yi { 1.0 } else { 0.0 }) / n;
            grad.output_bias[c] += d;
            let gw = &mut grad.output_weights[c * h..(c + 1) * h];
            let w = &params.output_weights[c * h..(c + 1) * h];
            for j in 0..h {
                gw[j] += d * hidden[j];
                delta_hidden[j] += d * w[j];
            }
        }
        for j in 0..h {
            delta_hidden[j] *= 1.0 - hidden[j] * hidden[j];
            grad.hidden_bias[j] += delta_hidden[j];
        }
        for &(t, v) in row {
            let v = f64::from(v);
            let g = &mut grad.input_weights[t as usize * h..(t as usize + 1) * h];
            for (gj, dj) in g.iter_mut().zip(&delta_hidden) {
                *gj += v * dj;
            }
        }
    }
    (loss / n, grad)
}

fn step(params: &mut NeuralNetParams, grad: &NeuralNetParams, lr: f64) {
    let pairs = [
        (&mut params.input_weights, &grad.input_weights),
        (&mut params.hidden_bias, &grad.hidden_bias),
        (&mut params.output_weights, &grad.output_weights),
    ];
    for (p, g) in pairs {
        for (pi, gi) in p.iter_mut().zip(g) {
            *pi -= lr * gi;
        }
    }
    for (b, g) in params.output_bias.iter_mut().zip(grad.output_bias) {
        *b -= lr * g;
    }
}

pub(crate) fn fit(
    data: &TrainingSet<'_>,
    hidden: usize,
    learning_rate: f64,
    epochs: usize,
    init_range: f64,
    seed: u64,
) -> (NeuralNetParams, Vec<f64>) {
    let mut params = NeuralNetParams::init(data.dtm.n_terms, hidden, init_range, seed);
    let mut history = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        let (loss, grad) = loss_grad(&params, data.dtm, &data.y);
        history.push(loss);
        step(&mut params, &grad, learning_rate);
    }
    history.push(loss_grad(&params, data.dtm, &data.y).0);
    (params, history)
}

/// Full training run returning the per-epoch loss values.
pub fn fit_with_history(
    dtm: &DocumentTermMatrix,
    labels: &[SentimentLabel],
    hidden: usize,
    learning_rate: f64,
    epochs: usize,
    init_range: f64,
    seed: u64,
) -> (NeuralNetParams, Vec<f64>) {
    let data = TrainingSet {
        dtm,
        y: labels.iter().map(|l| l.index()).collect(),
    };
    fit(&data, hidden, learning_rate, epochs, init_range, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = NeuralNetParams::init(5, 4, 0.5, 9);
        let b = NeuralNetParams::init(5, 4, 0.5, 9);
        let c = NeuralNetParams::init(5, 4, 0.5, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.to_flat().iter().all(|w| w.abs() <= 0.5));
        assert_eq!(NeuralNetParams::from_flat(&a, &a.to_flat()), a);
    }

    #[test]
    fn scores_are_probabilities() {
        let p = NeuralNetParams::init(3, 6, 0.5, 1);
        let s = p.scores(&[(0, 2), (2, 1)]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
