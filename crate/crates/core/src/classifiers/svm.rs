//! Linear SVM, one-vs-rest, trained with Pegasos (hinge loss, step size
//! `1 / (lambda t)`, `lambda = 1 / (C n)`) sweeping the rows in order.
//!
//! The bias is an extra always-on feature and is regularized with the rest.

use serde::{Deserialize, Serialize};

use super::{Scores, TrainingSet, N_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub n_terms: usize,
    /// Class-major weights: `weights[c * n_terms + t]`.
    pub weights: Vec<f64>,
    pub bias: [f64; N_CLASSES],
}

impl SvmParams {
    /// Raw margins `w_c · x + b_c`.
    pub(crate) fn scores(&self, row: &[(u32, u32)]) -> Scores {
        let mut out = self.bias;
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.n_terms..(c + 1) * self.n_terms];
            *o += row
                .iter()
                .map(|&(t, v)| f64::from(v) * w[t as usize])
                .sum::<f64>();
        }
        out
    }

    pub(crate) fn check_shape(&self, n_terms: usize) -> bool {
        self.n_terms == n_terms && self.weights.len() == N_CLASSES * n_terms
    }
}

pub(crate) fn fit(data: &TrainingSet<'_>, c: f64, epochs: usize) -> SvmParams {
    let v = data.dtm.n_terms;
    let mut weights = Vec::with_capacity(N_CLASSES * v);
    let mut bias = [0.0; N_CLASSES];
    for (class, b) in bias.iter_mut().enumerate() {
        let (w, wb) = fit_binary(data, class, c, epochs);
        weights.extend(w);
        *b = wb;
    }
    SvmParams {
        n_terms: v,
        weights,
        bias,
    }
}

fn fit_binary(data: &TrainingSet<'_>, class: usize, c: f64, epochs: usize) -> (Vec<f64>, f64) {
    let n = data.dtm.n_docs;
    let lambda = 1.0 / (c * n as f64);
    // w = scale * (v, vb)
    let mut v = vec![0.0; data.dtm.n_terms];
    let mut vb = 0.0;
    let mut scale = 1.0;
    let mut t = 0u64;
    for _ in 0..epochs {
        for (row, &yi) in data.dtm.rows.iter().zip(&data.y) {
            t += 1;
            let y = if yi == class { 1.0 } else { -1.0 };
            let eta = 1.0 / (lambda * t as f64);
            let margin = scale
                * (vb + row
                    .iter()
                    .map(|&(f, cnt)| f64::from(cnt) * v[f as usize])
                    .sum::<f64>());
            let shrink = 1.0 - 1.0 / t as f64;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                vb = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if y * margin < 1.0 {
                let step = eta * y / scale;
                for &(f, cnt) in row {
                    v[f as usize] += step * f64::from(cnt);
                }
                vb += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                vb *= scale;
                scale = 1.0;
            }
        }
    }
    (v.into_iter().map(|x| x * scale).collect(), vb * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DocumentTermMatrix;

    #[test]
    fn separates_two_clusters() {
        let dtm = DocumentTermMatrix::from_dense(&[vec![3, 0], vec![2, 0], vec![0, 2], vec![0, 3]]);
        let data = TrainingSet {
            dtm: &dtm,
            y: vec![0, 0, 1, 1],
        };
        let p = fit(&data, 1.0, 50);
        assert!(p.check_shape(2));
        for (row, &y) in dtm.rows.iter().zip(&data.y) {
            let s = p.scores(row);
            assert_eq!(super::super::argmax(&s[..2]), y);
        }
    }
}
