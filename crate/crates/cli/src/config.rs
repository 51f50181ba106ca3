//! Pipeline configuration: one JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use gunsent_core::classifiers::{Algorithm, AlgorithmSpec, Hyperparameters};
use gunsent_core::corpusgen::GeneratorSpec;
use gunsent_core::{CorpusWindow, FeatureConfig, FilterRules, Provenance};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub seed: u64,
    pub generator: GeneratorSpec,
    /// `None` keeps every parsed tweet.
    pub filter: Option<FilterRules>,
    pub features: FeatureConfig,
    #[serde(with = "algorithm_name")]
    pub algorithm: Algorithm,
    /// Overrides the algorithm's default hyperparameters.
    pub hyperparameters: Option<Hyperparameters>,
    pub folds: usize,
    /// Training-set size drawn 2:2:1 from the labeled pool; `None` uses every row.
    pub training_size: Option<usize>,
    /// GeoJSON state fixture; `None` uses the bundled simplified one.
    pub geo: Option<PathBuf>,
    /// CSV overriding state population and gun ownership.
    pub population: Option<PathBuf>,
    pub window: Option<CorpusWindow>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            seed: 42,
            generator: GeneratorSpec::default(),
            filter: None,
            features: FeatureConfig::default(),
            algorithm: Algorithm::RandomForest,
            hyperparameters: None,
            folds: 10,
            training_size: None,
            geo: None,
            population: None,
            window: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        if config.version != CONFIG_VERSION {
            return Err(CliError::usage(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                config.version
            )));
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.features
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        if self.folds < 2 {
            return Err(CliError::usage("folds must be at least 2"));
        }
        if let Some(h) = &self.hyperparameters {
            if h.algorithm() != self.algorithm {
                return Err(CliError::usage(format!(
                    "hyperparameters are for {} but the algorithm is {}",
                    h.algorithm().short_name(),
                    self.algorithm.short_name()
                )));
            }
            h.validate().map_err(|e| CliError::usage(e.to_string()))?;
        }
        if let Some(rules) = &self.filter {
            rules.validate().map_err(|e| CliError::usage(e.to_string()))?;
        }
        Ok(())
    }

    pub fn algorithm_spec(&self) -> AlgorithmSpec {
        AlgorithmSpec {
            hyperparameters: self
                .hyperparameters
                .clone()
                .unwrap_or_else(|| Hyperparameters::default_for(self.algorithm)),
            rng_seed: self.seed,
        }
    }

    /// Generator spec carrying the pipeline seed.
    pub fn generator_spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            seed: self.seed,
            ..self.generator.clone()
        }
    }

    /// Hex SHA-256 of the canonical JSON form of the effective config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new(self.seed, self.hash())
    }
}

/// Algorithms are written by short name and read by any accepted alias.
mod algorithm_name {
    use gunsent_core::classifiers::Algorithm;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Algorithm, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(a.short_name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Algorithm, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}
