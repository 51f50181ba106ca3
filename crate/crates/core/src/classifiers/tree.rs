//! CART classification trees: Gini impurity, binary splits `count >= threshold`
//! with thresholds at midpoints between observed counts.
//!
//! Trees grow on weighted samples so that bootstrap replicates are just
//! multiplicities, and optionally draw `mtry` candidate features per node.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Scores, TrainingSet, N_CLASSES};
use crate::features::{row_value, DocumentTermMatrix};
use crate::rng::StreamRng;

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        distribution: Scores,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn leaf_for(&self, row: &[(u32, u32)]) -> &Scores {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let v = f64::from(row_value(row, *feature));
                    i = if v >= *threshold { *right } else { *left } as usize;
                }
            }
        }
    }

    pub(crate) fn scores(&self, row: &[(u32, u32)]) -> Scores {
        *self.leaf_for(row)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, *left as usize).max(go(nodes, *right as usize))
                }
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(&self.nodes, 0)
        }
    }

    pub(crate) fn check_shape(&self, n_terms: usize) -> bool {
        let n = self.nodes.len() as u32;
        !self.nodes.is_empty()
            && self.nodes.iter().enumerate().all(|(i, node)| match node {
                Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    (*feature as usize) < n_terms
                        && *left < n
                        && *right < n
                        && *left as usize > i
                        && *right as usize > i
                }
                Node::Leaf { .. } => true,
            })
    }
}

pub(crate) fn fit_single(data: &TrainingSet<'_>, params: TreeParams) -> TreeModel {
    let samples = (0..data.dtm.n_docs as u32).map(|i| (i, 1.0)).collect();
    grow(data.dtm, &data.y, samples, params, None)
}

/// A weighted sample: `(row index, multiplicity)`.
pub(crate) type Sample = (u32, f64);

struct Workspace {
    /// Per-feature `(value, class, weight)` entries of the current node.
    entries: Vec<Vec<(u32, u8, f64)>>,
    touched: Vec<u32>,
    candidate: Vec<bool>,
    perm: Vec<u32>,
}

pub(crate) fn grow(
    dtm: &DocumentTermMatrix,
    y: &[usize],
    samples: Vec<Sample>,
    params: TreeParams,
    mut rng: Option<&mut StreamRng>,
) -> TreeModel {
    let n_terms = dtm.n_terms;
    let mut ws = Workspace {
        entries: vec![Vec::new(); n_terms],
        touched: Vec::new(),
        candidate: vec![params.mtry.is_none(); n_terms],
        perm: (0..n_terms as u32).collect(),
    };
    let mut nodes = vec![Node::Leaf {
        distribution: [0.0; N_CLASSES],
    }];
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((slot, samples, depth)) = stack.pop() {
        let mut totals = [0.0; N_CLASSES];
        for &(r, w) in &samples {
            totals[y[r as usize]] += w;
        }
        let weight: f64 = totals.iter().sum();
        let pure = totals.iter().filter(|&&t| t > 0.0).count() <= 1;
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        let split = if !pure && depth_ok && weight >= params.min_samples_split as f64 {
            if let (Some(m), Some(r)) = (params.mtry, rng.as_deref_mut()) {
                draw_candidates(&mut ws, m, r);
            }
            let s = best_split(dtm, y, &samples, &totals, &mut ws);
            if let Some(m) = params.mtry {
                for &f in &ws.perm[..m.min(n_terms)] {
                    ws.candidate[f as usize] = false;
                }
            }
            s
        } else {
            None
        };
        match split {
            Some((feature, threshold)) => {
                let (left, right): (Vec<Sample>, Vec<Sample>) =
                    samples.into_iter().partition(|&(r, _)| {
                        f64::from(row_value(&dtm.rows[r as usize], feature)) < threshold
                    });
                let l = nodes.len();
                nodes.push(Node::Leaf {
                    distribution: [0.0; N_CLASSES],
                });
                nodes.push(Node::Leaf {
                    distribution: [0.0; N_CLASSES],
                });
                nodes[slot] = Node::Split {
                    feature,
                    threshold,
                    left: l as u32,
                    right: l as u32 + 1,
                };
                stack.push((l + 1, right, depth + 1));
                stack.push((l, left, depth + 1));
            }
            None => {
                let mut distribution = totals;
                if weight > 0.0 {
                    distribution.iter_mut().for_each(|d| *d /= weight);
                }
                nodes[slot] = Node::Leaf { distribution };
            }
        }
    }
    TreeModel { nodes }
}

fn draw_candidates(ws: &mut Workspace, mtry: usize, rng: &mut StreamRng) {
    let n = ws.perm.len();
    let m = mtry.min(n);
    for j in 0..m {
        let k = rng.gen_range(j..n);
        ws.perm.swap(j, k);
        ws.candidate[ws.perm[j] as usize] = true;
    }
}

fn gini_score(counts: &Scores, weight: f64) -> f64 {
    if weight <= 0.0 {
        0.0
    } else {
        counts.iter().map(|c| c * c).sum::<f64>() / weight
    }
}

/// Best `(feature, threshold)` by weighted Gini decrease, `None` if no split
/// improves purity. Ties keep the lowest feature, then the lowest threshold.
fn best_split(
    dtm: &DocumentTermMatrix,
    y: &[usize],
    samples: &[Sample],
    totals: &Scores,
    ws: &mut Workspace,
) -> Option<(u32, f64)> {
    for &(r, w) in samples {
        let class = y[r as usize] as u8;
        for &(f, v) in &dtm.rows[r as usize] {
            if !ws.candidate[f as usize] {
                continue;
            }
            let e = &mut ws.entries[f as usize];
            if e.is_empty() {
                ws.touched.push(f);
            }
            e.push((v, class, w));
        }
    }
    ws.touched.sort_unstable();

    let weight: f64 = totals.iter().sum();
    let parent = gini_score(totals, weight);
    let mut best: Option<(f64, u32, f64)> = None;
    for &f in &ws.touched {
        let e = &mut ws.entries[f as usize];
        e.sort_unstable_by_key(|&(v, c, _)| (v, c));
        // Left side starts with every sample whose count is zero.
        let mut left = *totals;
        for &(_, c, w) in e.iter() {
            left[c as usize] -= w;
        }
        let mut left_w: f64 = left.iter().sum();
        let mut prev_value = 0u32;
        let mut i = 0;
        while i < e.len() {
            let value = e[i].0;
            if left_w > 1e-12 && value > prev_value {
                let right: Scores = std::array::from_fn(|k| totals[k] - left[k]);
                let right_w = weight - left_w;
                let score = gini_score(&left, left_w) + gini_score(&right, right_w);
                if score > parent + MIN_GAIN && best.is_none_or(|(b, _, _)| score > b) {
                    best = Some((score, f, (f64::from(prev_value) + f64::from(value)) / 2.0));
                }
            }
            while i < e.len() && e[i].0 == value {
                left[e[i].1 as usize] += e[i].2;
                left_w += e[i].2;
                i += 1;
            }
            prev_value = value;
        }
        e.clear();
    }
    ws.touched.clear();
    best.map(|(_, f, t)| (f, t))
}
