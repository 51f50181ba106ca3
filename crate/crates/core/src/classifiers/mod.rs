//! Eight supervised sentiment classifiers behind one train/predict contract.
//!
//! | algorithm     | scores returned by [`predict_scores`]                    |
//! |---------------|----------------------------------------------------------|
//! | NaiveBayes    | posterior probabilities                                  |
//! | MaxEnt        | softmax probabilities                                    |
//! | NeuralNet     | softmax probabilities                                    |
//! | BoostedTree   | one-vs-rest logistic probabilities renormalized to 1     |
//! | Tree          | class fractions of the training weight in the leaf       |
//! | BaggedTree    | fraction of tree votes                                   |
//! | RandomForest  | fraction of tree votes                                   |
//! | Svm           | raw one-vs-rest margins `w·x + b`                        |
//!
//! [`predict`] is the argmax of the scores with ties going to the earliest
//! class in the order ProGun, AntiGun, Neutral.

pub mod boost;
pub mod ensemble;
pub mod maxent;
pub mod naive_bayes;
pub mod neural;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::features::DocumentTermMatrix;
use crate::Provenance;

pub const MODEL_VERSION: u32 = 1;
pub const N_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SentimentLabel {
    ProGun,
    AntiGun,
    Neutral,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::ProGun,
        SentimentLabel::AntiGun,
        SentimentLabel::Neutral,
    ];

    /// Stable integer encoding: 0, 1, 2.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentLabel::ProGun => "pro_gun",
            SentimentLabel::AntiGun => "anti_gun",
            SentimentLabel::Neutral => "neutral",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown sentiment label {0:?}")]
pub struct ParseLabelError(pub String);

impl FromStr for SentimentLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match norm.as_str() {
            "0" | "pro" | "progun" => Ok(SentimentLabel::ProGun),
            "1" | "anti" | "antigun" => Ok(SentimentLabel::AntiGun),
            "2" | "neutral" | "neu" => Ok(SentimentLabel::Neutral),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}

impl Serialize for SentimentLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for SentimentLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        SentimentLabel::from_code(code)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid label code {code}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    NaiveBayes,
    MaxEnt,
    Tree,
    BaggedTree,
    BoostedTree,
    RandomForest,
    Svm,
    NeuralNet,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::NaiveBayes,
        Algorithm::MaxEnt,
        Algorithm::Tree,
        Algorithm::BaggedTree,
        Algorithm::BoostedTree,
        Algorithm::RandomForest,
        Algorithm::Svm,
        Algorithm::NeuralNet,
    ];

    /// Column order used by comparison tables.
    pub const TABLE_ORDER: [Algorithm; 8] = [
        Algorithm::Svm,
        Algorithm::MaxEnt,
        Algorithm::Tree,
        Algorithm::BaggedTree,
        Algorithm::BoostedTree,
        Algorithm::RandomForest,
        Algorithm::NeuralNet,
        Algorithm::NaiveBayes,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "nb",
            Algorithm::MaxEnt => "maxent",
            Algorithm::Tree => "tree",
            Algorithm::BaggedTree => "bagging",
            Algorithm::BoostedTree => "boosting",
            Algorithm::RandomForest => "rf",
            Algorithm::Svm => "svm",
            Algorithm::NeuralNet => "nn",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "NB",
            Algorithm::MaxEnt => "ME",
            Algorithm::Tree => "Tree",
            Algorithm::BaggedTree => "Bagged Tree",
            Algorithm::BoostedTree => "Boosted Tree",
            Algorithm::RandomForest => "RF",
            Algorithm::Svm => "SVM",
            Algorithm::NeuralNet => "NN",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        Ok(match norm.as_str() {
            "nb" | "naivebayes" => Algorithm::NaiveBayes,
            "me" | "maxent" | "maximumentropy" => Algorithm::MaxEnt,
            "tree" | "cart" => Algorithm::Tree,
            "bagging" | "baggedtree" | "bag" => Algorithm::BaggedTree,
            "boosting" | "boostedtree" | "logitboost" | "boost" => Algorithm::BoostedTree,
            "rf" | "randomforest" | "forest" => Algorithm::RandomForest,
            "svm" => Algorithm::Svm,
            "nn" | "neuralnet" | "nnet" => Algorithm::NeuralNet,
            _ => return Err(format!("unknown algorithm {s:?}")),
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Per-algorithm hyperparameters. `None` depth means unlimited; `None`
/// `mtry` means `floor(sqrt(n_terms))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm")]
pub enum Hyperparameters {
    NaiveBayes {
        alpha: f64,
    },
    MaxEnt {
        l2: f64,
        learning_rate: f64,
        epochs: usize,
    },
    Tree {
        max_depth: usize,
        min_samples_split: usize,
    },
    BaggedTree {
        n_trees: usize,
        max_depth: Option<usize>,
        min_samples_split: usize,
    },
    BoostedTree {
        iterations: usize,
        z_max: f64,
    },
    RandomForest {
        n_trees: usize,
        mtry: Option<usize>,
        max_depth: Option<usize>,
        min_samples_split: usize,
    },
    Svm {
        c: f64,
        epochs: usize,
    },
    NeuralNet {
        hidden_units: usize,
        learning_rate: f64,
        epochs: usize,
        init_range: f64,
    },
}

impl Hyperparameters {
    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::NaiveBayes => Hyperparameters::NaiveBayes { alpha: 1.0 },
            Algorithm::MaxEnt => Hyperparameters::MaxEnt {
                l2: 1e-4,
                learning_rate: 0.1,
                epochs: 200,
            },
            Algorithm::Tree => Hyperparameters::Tree {
                max_depth: 30,
                min_samples_split: 2,
            },
            Algorithm::BaggedTree => Hyperparameters::BaggedTree {
                n_trees: 25,
                max_depth: None,
                min_samples_split: 2,
            },
            Algorithm::BoostedTree => Hyperparameters::BoostedTree {
                iterations: 100,
                z_max: 4.0,
            },
            Algorithm::RandomForest => Hyperparameters::RandomForest {
                n_trees: 200,
                mtry: None,
                max_depth: None,
                min_samples_split: 2,
            },
            Algorithm::Svm => Hyperparameters::Svm {
                c: 1.0,
                epochs: 200,
            },
            Algorithm::NeuralNet => Hyperparameters::NeuralNet {
                hidden_units: 50,
                learning_rate: 0.05,
                epochs: 300,
                init_range: 0.5,
            },
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Hyperparameters::NaiveBayes { .. } => Algorithm::NaiveBayes,
            Hyperparameters::MaxEnt { .. } => Algorithm::MaxEnt,
            Hyperparameters::Tree { .. } => Algorithm::Tree,
            Hyperparameters::BaggedTree { .. } => Algorithm::BaggedTree,
            Hyperparameters::BoostedTree { .. } => Algorithm::BoostedTree,
            Hyperparameters::RandomForest { .. } => Algorithm::RandomForest,
            Hyperparameters::Svm { .. } => Algorithm::Svm,
            Hyperparameters::NeuralNet { .. } => Algorithm::NeuralNet,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |msg: &str| Err(ClassifierError::InvalidHyperparameter(msg.to_string()));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Hyperparameters::NaiveBayes { alpha } if !positive(alpha) => bad("alpha must be > 0"),
            Hyperparameters::MaxEnt { l2, learning_rate, .. }
                if !(l2.is_finite() && l2 >= 0.0) || !positive(learning_rate) =>
            {
                bad("MaxEnt needs l2 >= 0 and learning_rate > 0")
            }
            Hyperparameters::Tree { max_depth: 0, .. } => bad("max_depth must be >= 1"),
            Hyperparameters::Tree { min_samples_split, .. }
            | Hyperparameters::BaggedTree { min_samples_split, .. }
            | Hyperparameters::RandomForest { min_samples_split, .. }
                if min_samples_split < 2 =>
            {
                bad("min_samples_split must be >= 2")
            }
            Hyperparameters::BaggedTree { n_trees: 0, .. }
            | Hyperparameters::RandomForest { n_trees: 0, .. } => bad("n_trees must be >= 1"),
            Hyperparameters::BaggedTree { max_depth: Some(0), .. }
            | Hyperparameters::RandomForest { max_depth: Some(0), .. } => {
                bad("max_depth must be >= 1")
            }
            Hyperparameters::RandomForest { mtry: Some(0), .. } => bad("mtry must be >= 1"),
            Hyperparameters::BoostedTree { iterations: 0, .. } => bad("iterations must be >= 1"),
            Hyperparameters::BoostedTree { z_max, .. } if !positive(z_max) => {
                bad("z_max must be > 0")
            }
            Hyperparameters::Svm { c, .. } if !positive(c) => bad("C must be > 0"),
            Hyperparameters::NeuralNet { hidden_units: 0, .. } => {
                bad("hidden_units must be >= 1")
            }
            Hyperparameters::NeuralNet { learning_rate, init_range, .. }
                if !positive(learning_rate) || !(init_range.is_finite() && init_range >= 0.0) =>
            {
                bad("NeuralNet needs learning_rate > 0 and init_range >= 0")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub hyperparameters: Hyperparameters,
    pub rng_seed: u64,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm, rng_seed: u64) -> Self {
        AlgorithmSpec {
            hyperparameters: Hyperparameters::default_for(algorithm),
            rng_seed,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.hyperparameters.algorithm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelParameters {
    Constant { label: SentimentLabel },
    NaiveBayes(naive_bayes::NaiveBayesParams),
    MaxEnt(maxent::MaxEntParams),
    Tree(tree::TreeModel),
    Ensemble(ensemble::EnsembleModel),
    Boosted(boost::BoostModel),
    Svm(svm::SvmParams),
    NeuralNet(neural::NeuralNetParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub spec: AlgorithmSpec,
    pub vocab_size: usize,
    pub class_list: Vec<SentimentLabel>,
    pub parameters: ModelParameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("cannot train on an empty document set")]
    EmptyTrainingSet,
    #[error("unsupported model version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),
}

pub type Scores = [f64; N_CLASSES];

/// Training data as seen by the individual algorithms.
pub(crate) struct TrainingSet<'a> {
    pub dtm: &'a DocumentTermMatrix,
    /// Class index (0..3) per row.
    pub y: Vec<usize>,
}

pub fn train(
    spec: &AlgorithmSpec,
    dtm: &DocumentTermMatrix,
    labels: &[SentimentLabel],
) -> Result<TrainedModel, ClassifierError> {
    spec.hyperparameters.validate()?;
    if labels.len() != dtm.n_docs {
        return Err(ClassifierError::DimensionMismatch {
            expected: dtm.n_docs,
            found: labels.len(),
        });
    }
    if dtm.n_docs == 0 {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let mut class_list: Vec<SentimentLabel> = labels.to_vec();
    class_list.sort_unstable();
    class_list.dedup();

    let parameters = if class_list.len() == 1 {
        ModelParameters::Constant {
            label: class_list[0],
        }
    } else {
        let data = TrainingSet {
            dtm,
            y: labels.iter().map(|l| l.index()).collect(),
        };
        let seed = spec.rng_seed;
        match spec.hyperparameters {
            Hyperparameters::NaiveBayes { alpha } => {
                ModelParameters::NaiveBayes(naive_bayes::fit(&data, alpha))
            }
            Hyperparameters::MaxEnt {
                l2,
                learning_rate,
                epochs,
            } => ModelParameters::MaxEnt(maxent::fit(&data, l2, learning_rate, epochs).0),
            Hyperparameters::Tree {
                max_depth,
                min_samples_split,
            } => ModelParameters::Tree(tree::fit_single(
                &data,
                tree::TreeParams {
                    max_depth: Some(max_depth),
                    min_samples_split,
                    mtry: None,
                },
            )),
            Hyperparameters::BaggedTree {
                n_trees,
                max_depth,
                min_samples_split,
            } => ModelParameters::Ensemble(ensemble::fit(
                &data,
                n_trees,
                tree::TreeParams {
                    max_depth,
                    min_samples_split,
                    mtry: None,
                },
                seed,
            )),
            Hyperparameters::RandomForest {
                n_trees,
                mtry,
                max_depth,
                min_samples_split,
            } => {
                let default_mtry = ((dtm.n_terms as f64).sqrt().floor() as usize).max(1);
                ModelParameters::Ensemble(ensemble::fit(
                    &data,
                    n_trees,
                    tree::TreeParams {
                        max_depth,
                        min_samples_split,
                        mtry: Some(mtry.unwrap_or(default_mtry).min(dtm.n_terms.max(1))),
                    },
                    seed,
                ))
            }
            Hyperparameters::BoostedTree { iterations, z_max } => {
                ModelParameters::Boosted(boost::fit(&data, iterations, z_max))
            }
            Hyperparameters::Svm { c, epochs } => ModelParameters::Svm(svm::fit(&data, c, epochs)),
            Hyperparameters::NeuralNet {
                hidden_units,
                learning_rate,
                epochs,
                init_range,
            } => ModelParameters::NeuralNet(
                neural::fit(&data, hidden_units, learning_rate, epochs, init_range, seed).0,
            ),
        }
    };

    Ok(TrainedModel {
        version: MODEL_VERSION,
        spec: spec.clone(),
        vocab_size: dtm.n_terms,
        class_list,
        parameters,
        provenance: None,
    })
}

pub fn predict_scores(
    model: &TrainedModel,
    dtm: &DocumentTermMatrix,
) -> Result<Vec<Scores>, ClassifierError> {
    if dtm.n_terms != model.vocab_size {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.vocab_size,
            found: dtm.n_terms,
        });
    }
    Ok(dtm
        .rows
        .iter()
        .map(|row| match &model.parameters {
            ModelParameters::Constant { label } => {
                let mut s = [0.0; N_CLASSES];
                s[label.index()] = 1.0;
                s
            }
            ModelParameters::NaiveBayes(p) => p.scores(row),
            ModelParameters::MaxEnt(p) => p.scores(row),
            ModelParameters::Tree(t) => t.scores(row),
            ModelParameters::Ensemble(e) => e.scores(row),
            ModelParameters::Boosted(b) => b.scores(row),
            ModelParameters::Svm(s) => s.scores(row),
            ModelParameters::NeuralNet(n) => n.scores(row),
        })
        .collect())
}

pub fn predict(
    model: &TrainedModel,
    dtm: &DocumentTermMatrix,
) -> Result<Vec<SentimentLabel>, ClassifierError> {
    Ok(predict_scores(model, dtm)?
        .iter()
        .map(|s| SentimentLabel::from_index(argmax(s)))
        .collect())
}

/// Vectorizes raw tweets with `vocab` and predicts their labels.
pub fn classify_tweets(
    model: &TrainedModel,
    vocab: &crate::features::Vocabulary,
    tweets: &[crate::ingest::Tweet],
) -> Result<Vec<SentimentLabel>, ClassifierError> {
    predict(model, &crate::features::vectorize_corpus(tweets, vocab))
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn serialize_model(model: &TrainedModel) -> Vec<u8> {
    serde_json::to_vec(model).expect("model serializes")
}

pub fn deserialize_model(bytes: &[u8]) -> Result<TrainedModel, ClassifierError> {
    let corrupt = |e: &dyn fmt::Display| ClassifierError::CorruptPayload(e.to_string());
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| corrupt(&e))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| ClassifierError::CorruptPayload("missing version".into()))?;
    if version != u64::from(MODEL_VERSION) {
        return Err(ClassifierError::VersionMismatch {
            found: version as u32,
            expected: MODEL_VERSION,
        });
    }
    let model: TrainedModel = serde_json::from_value(value).map_err(|e| corrupt(&e))?;
    model.check_shapes()?;
    Ok(model)
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm()
    }

    fn check_shapes(&self) -> Result<(), ClassifierError> {
        let v = self.vocab_size;
        let ok = match &self.parameters {
            ModelParameters::Constant { .. } => true,
            ModelParameters::NaiveBayes(p) => p.check_shape(v),
            ModelParameters::MaxEnt(p) => p.check_shape(v),
            ModelParameters::Tree(t) => t.check_shape(v),
            ModelParameters::Ensemble(e) => e.trees.iter().all(|t| t.check_shape(v)),
            ModelParameters::Boosted(b) => b.check_shape(v),
            ModelParameters::Svm(s) => s.check_shape(v),
            ModelParameters::NeuralNet(n) => n.check_shape(v),
        };
        if ok {
            Ok(())
        } else {
            Err(ClassifierError::CorruptPayload(
                "parameter shapes do not match vocab_size".into(),
            ))
        }
    }
}

/// Numerically stable softmax in place.
pub(crate) fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}
