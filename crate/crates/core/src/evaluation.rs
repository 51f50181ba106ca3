//! Training-set composition, stratified k-fold cross-validation and
//! model-comparison tables.
//!
//! Each fold builds its vocabulary from its own training portion, so test
//! documents never influence the feature space or the model.

use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{self, Algorithm, AlgorithmSpec, ClassifierError, SentimentLabel, TrainedModel};
use crate::corpusgen::ClassMap;
use crate::features::{self, FeatureConfig, FeatureError, Vocabulary};
use crate::ingest::Tweet;
use crate::rng;

/// Marker written for cells that could not be computed.
pub const NOT_AVAILABLE: &str = "N/A";
pub const DEFAULT_FOLDS: usize = 10;
/// Training sizes of the size-comparison table.
pub const TABLE1_SIZES: [usize; 5] = [1000, 2000, 3000, 4000, 5000];

#[derive(Debug, Error, PartialEq)]
pub enum FoldError {
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("not enough {label} tweets: have {have}, need {need}")]
    InsufficientClassData {
        label: SentimentLabel,
        have: usize,
        need: usize,
    },
    #[error("class {label} has {have} members, fewer than k = {k}")]
    TooFewPerClass {
        label: SentimentLabel,
        have: usize,
        k: usize,
    },
    #[error("k must be at least 2 (got {0})")]
    InvalidK(usize),
    #[error("tweets and labels differ in length ({tweets} vs {labels})")]
    LengthMismatch { tweets: usize, labels: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: FoldError,
    },
}

/// 2:2:1 pro/anti/neutral split of `size` (neutral takes the remainder).
pub fn quota_for_size(size: usize) -> ClassMap<usize> {
    let pro = size * 2 / 5;
    ClassMap::new(pro, pro, size - 2 * pro)
}

/// Indices into `labels` with exactly `quota` members per class, drawn
/// without replacement. For a fixed seed, a larger quota always contains a
/// smaller one, so subsets of increasing size are nested.
pub fn compose_training_set(
    labels: &[SentimentLabel],
    quota: &ClassMap<usize>,
    seed: u64,
) -> Result<Vec<usize>, EvaluationError> {
    let mut out = Vec::new();
    for label in SentimentLabel::ALL {
        let need = *quota.get(label);
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if members.len() < need {
            return Err(EvaluationError::InsufficientClassData {
                label,
                have: members.len(),
                need,
            });
        }
        members.shuffle(&mut rng::stream(seed, rng::domain::COMPOSE + label.index() as u64));
        out.extend_from_slice(&members[..need]);
    }
    out.sort_unstable();
    let mut r = rng::stream(seed, rng::domain::COMPOSE + 0x100 + out.len() as u64);
    out.shuffle(&mut r);
    Ok(out)
}

/// `k` disjoint, ascending index folds covering `0..labels.len()`. Each class
/// is shuffled and dealt round-robin, continuing where the previous class
/// stopped, so per-class and total fold sizes differ by at most one.
pub fn stratified_kfold(
    labels: &[SentimentLabel],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvaluationError> {
    if k < 2 {
        return Err(EvaluationError::InvalidK(k));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for label in SentimentLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(EvaluationError::TooFewPerClass {
                label,
                have: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng::stream(seed, rng::domain::FOLDS + label.index() as u64));
        for m in members {
            folds[next].push(m);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn accuracy(predicted: &[SentimentLabel], truth: &[SentimentLabel]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub algorithm: AlgorithmSpec,
    pub feature_config: FeatureConfig,
    pub training_size: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub seed: u64,
}

/// Vocabulary and model trained on `train` only.
pub fn train_fold(
    spec: &AlgorithmSpec,
    tweets: &[Tweet],
    labels: &[SentimentLabel],
    config: &FeatureConfig,
    train: &[usize],
) -> Result<(Vocabulary, TrainedModel), FoldError> {
    let subset: Vec<Tweet> = train.iter().map(|&i| tweets[i].clone()).collect();
    let y: Vec<SentimentLabel> = train.iter().map(|&i| labels[i]).collect();
    let vocab = features::build_vocabulary(&subset, config)?;
    let dtm = features::vectorize_corpus(&subset, &vocab);
    let model = classifiers::train(spec, &dtm, &y)?;
    Ok((vocab, model))
}

pub fn cross_validate(
    spec: &AlgorithmSpec,
    tweets: &[Tweet],
    labels: &[SentimentLabel],
    config: &FeatureConfig,
    k: usize,
    seed: u64,
) -> Result<CVReport, EvaluationError> {
    if tweets.len() != labels.len() {
        return Err(EvaluationError::LengthMismatch {
            tweets: tweets.len(),
            labels: labels.len(),
        });
    }
    config
        .validate()
        .map_err(|e| EvaluationError::Fold { fold: 0, source: e.into() })?;
    let folds = stratified_kfold(labels, k, seed)?;
    let terms: Vec<Vec<String>> = tweets
        .iter()
        .map(|t| features::document_terms(t, config))
        .collect();

    let results = crate::par_map((0..k).collect(), |f| -> Result<f64, FoldError> {
        let test = &folds[f];
        let mut in_test = vec![false; tweets.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..tweets.len()).filter(|&i| !in_test[i]).collect();

        let vocab = features::vocabulary_from_terms(train.iter().map(|&i| terms[i].as_slice()), config)?;
        let dtm = |idx: &[usize]| {
            let rows = idx.iter().map(|&i| features::vectorize_terms(&terms[i], &vocab)).collect();
            features::DocumentTermMatrix::new(vocab.len(), rows).expect("rows come from the vocabulary")
        };
        let y: Vec<SentimentLabel> = train.iter().map(|&i| labels[i]).collect();
        let model = classifiers::train(spec, &dtm(&train), &y)?;
        let predicted = classifiers::predict(&model, &dtm(test))?;
        let truth: Vec<SentimentLabel> = test.iter().map(|&i| labels[i]).collect();
        Ok(accuracy(&predicted, &truth))
    });

    let mut fold_accuracies = Vec::with_capacity(k);
    for (fold, r) in results.into_iter().enumerate() {
        fold_accuracies.push(r.map_err(|source| EvaluationError::Fold { fold, source })?);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CVReport {
        algorithm: spec.clone(),
        feature_config: *config,
        training_size: tweets.len(),
        fold_accuracies,
        mean_accuracy,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    /// Row labels: training sizes or N-gram orders.
    pub rows: Vec<String>,
    /// Column labels: algorithm display names.
    pub columns: Vec<String>,
    /// `None` is rendered as [`NOT_AVAILABLE`].
    pub cells: Vec<Vec<Option<f64>>>,
    /// Why each unavailable cell failed, as `(row, column, message)`.
    #[serde(default)]
    pub errors: Vec<(usize, usize, String)>,
}

impl ComparisonTable {
    pub fn cell(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col]
    }

    fn formatted(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| c.map_or_else(|| NOT_AVAILABLE.to_string(), |v| format!("{v:.4}")))
                    .collect()
            })
            .collect()
    }

    /// JSON `{rows, columns, cells, errors}` with `"N/A"` for missing cells.
    pub fn to_json(&self) -> String {
        let cells: Vec<Vec<serde_json::Value>> = self
            .cells
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| c.map_or_else(|| NOT_AVAILABLE.into(), serde_json::Value::from))
                    .collect()
            })
            .collect();
        let errors: Vec<serde_json::Value> = self
            .errors
            .iter()
            .map(|(r, c, m)| serde_json::json!({"row": r, "column": c, "message": m}))
            .collect();
        let doc = serde_json::json!({
            "rows": self.rows,
            "columns": self.columns,
            "cells": cells,
            "errors": errors,
        });
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.rows.iter().zip(self.formatted()) {
            let mut rec = vec![label.clone()];
            rec.extend(row);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width text table.
    pub fn to_text(&self) -> String {
        let body = self.formatted();
        let first = self.rows.iter().map(String::len).max().unwrap_or(0);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(c, name)| body.iter().map(|r| r[c].len()).chain([name.len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:first$}", "");
        for (name, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {name:>w$}");
        }
        out.push('\n');
        for (label, row) in self.rows.iter().zip(&body) {
            let _ = write!(out, "{label:first$}");
            for (v, w) in row.iter().zip(&widths) {
                let _ = write!(out, "  {v:>w$}");
            }
            out.push('\n');
        }
        out
    }
}

/// How rows of a comparison table are labelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowAxis {
    TrainingSize,
    NgramOrder,
}

/// Grid of mean CV accuracies over `sizes x configs` (rows) and `specs`
/// (columns). Training sets for the sizes are nested subsets of the pool. A
/// cell whose evaluation fails becomes N/A and its error is recorded.
pub fn compare_models(
    specs: &[AlgorithmSpec],
    sizes: &[usize],
    configs: &[FeatureConfig],
    pool: &[Tweet],
    labels: &[SentimentLabel],
    k: usize,
    seed: u64,
) -> Result<ComparisonTable, EvaluationError> {
    let axis = if configs.len() > 1 && sizes.len() <= 1 {
        RowAxis::NgramOrder
    } else {
        RowAxis::TrainingSize
    };
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut errors = Vec::new();
    for &size in sizes {
        let idx = compose_training_set(labels, &quota_for_size(size), seed)?;
        let tweets: Vec<Tweet> = idx.iter().map(|&i| pool[i].clone()).collect();
        let y: Vec<SentimentLabel> = idx.iter().map(|&i| labels[i]).collect();
        for config in configs {
            let r = rows.len();
            rows.push(match axis {
                RowAxis::TrainingSize if configs.len() > 1 => format!("{size} {}", config.order_name()),
                RowAxis::TrainingSize => size.to_string(),
                RowAxis::NgramOrder => config.order_name().to_string(),
            });
            let mut row = Vec::with_capacity(specs.len());
            for (c, spec) in specs.iter().enumerate() {
                match cross_validate(spec, &tweets, &y, config, k, seed) {
                    Ok(report) => row.push(Some(report.mean_accuracy)),
                    Err(e) => {
                        row.push(None);
                        errors.push((r, c, e.to_string()));
                    }
                }
            }
            cells.push(row);
        }
    }
    Ok(ComparisonTable {
        rows,
        columns: specs.iter().map(|s| s.algorithm().display_name().to_string()).collect(),
        cells,
        errors,
    })
}

/// Default specs for every algorithm in table column order.
pub fn table_specs(seed: u64) -> Vec<AlgorithmSpec> {
    Algorithm::TABLE_ORDER
        .iter()
        .map(|&a| AlgorithmSpec::new(a, seed))
        .collect()
}
