//! Multinomial naive Bayes over raw term counts with additive smoothing.

use serde::{Deserialize, Serialize};

use super::{softmax, Scores, SentimentLabel, TrainingSet, N_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Classes seen in training; the other classes get probability 0.
    pub classes: Vec<SentimentLabel>,
    pub log_prior: Vec<f64>,
    /// `log P(term | class)`, one row of `n_terms` values per entry of `classes`.
    pub log_likelihood: Vec<Vec<f64>>,
}

pub(crate) fn fit(data: &TrainingSet<'_>, alpha: f64) -> NaiveBayesParams {
    let n_terms = data.dtm.n_terms;
    let mut doc_count = [0usize; N_CLASSES];
    let mut term_count = vec![vec![0.0f64; n_terms]; N_CLASSES];
    for (row, &c) in data.dtm.rows.iter().zip(&data.y) {
        doc_count[c] += 1;
        for &(t, v) in row {
            term_count[c][t as usize] += f64::from(v);
        }
    }
    let n = data.y.len() as f64;
    let mut classes = Vec::new();
    let mut log_prior = Vec::new();
    let mut log_likelihood = Vec::new();
    for c in 0..N_CLASSES {
        if doc_count[c] == 0 {
            continue;
        }
        classes.push(SentimentLabel::from_index(c));
        log_prior.push((doc_count[c] as f64 / n).ln());
        let total: f64 = term_count[c].iter().sum();
        let denom = (total + alpha * n_terms as f64).ln();
        log_likelihood.push(
            term_count[c]
                .iter()
                .map(|&k| (k + alpha).ln() - denom)
                .collect(),
        );
    }
    NaiveBayesParams {
        classes,
        log_prior,
        log_likelihood,
    }
}

impl NaiveBayesParams {
    /// `P(term | label)`, `None` when the class was absent from training.
    pub fn term_probability(&self, label: SentimentLabel, term: usize) -> Option<f64> {
        let k = self.classes.iter().position(|&c| c == label)?;
        self.log_likelihood[k].get(term).map(|lp| lp.exp())
    }

    pub(crate) fn scores(&self, row: &[(u32, u32)]) -> Scores {
        let mut joint: Vec<f64> = self
            .log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(&prior, ll)| {
                prior
                    + row
                        .iter()
                        .map(|&(t, v)| f64::from(v) * ll[t as usize])
                        .sum::<f64>()
            })
            .collect();
        softmax(&mut joint);
        let mut out = [0.0; N_CLASSES];
        for (label, p) in self.classes.iter().zip(joint) {
            out[label.index()] = p;
        }
        out
    }

    pub(crate) fn check_shape(&self, n_terms: usize) -> bool {
        self.classes.len() == self.log_prior.len()
            && self.classes.len() == self.log_likelihood.len()
            && self.log_likelihood.iter().all(|r| r.len() == n_terms)
    }
}
