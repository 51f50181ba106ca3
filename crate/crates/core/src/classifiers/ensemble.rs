//! Bootstrap ensembles of CART trees: bagging (all features per node) and
//! random forests (`mtry` features per node). Prediction is a majority vote.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, Sample, TreeModel, TreeParams};
use super::{argmax, Scores, TrainingSet, N_CLASSES};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub trees: Vec<TreeModel>,
}

impl EnsembleModel {
    /// Vote fractions per class.
    pub(crate) fn scores(&self, row: &[(u32, u32)]) -> Scores {
        let mut votes = [0.0; N_CLASSES];
        for t in &self.trees {
            votes[argmax(t.leaf_for(row))] += 1.0;
        }
        let n = self.trees.len().max(1) as f64;
        votes.map(|v| v / n)
    }
}

/// Bootstrap sample of size `n` as row multiplicities.
fn bootstrap(n: usize, r: &mut rng::StreamRng) -> Vec<Sample> {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(r.gen_range(0..n as u32)).or_default() += 1.0;
    }
    counts.into_iter().collect()
}

pub(crate) fn fit(data: &TrainingSet<'_>, n_trees: usize, params: TreeParams, seed: u64) -> EnsembleModel {
    let n = data.dtm.n_docs;
    let trees = crate::par_map((0..n_trees as u64).collect(), |k| {
        let mut r = rng::stream(seed, rng::domain::ENSEMBLE + k);
        let samples = bootstrap(n, &mut r);
        tree::grow(data.dtm, &data.y, samples, params, Some(&mut r))
    });
    EnsembleModel { trees }
}
