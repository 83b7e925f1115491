use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{NegativeSpec, StrataWeights, TestSize};
use crate::error::{Error, Result};
use crate::model::{MaxLens, ModelDims, TrainConfig, ZoningWeight};
use crate::ndnet::AdamConfig;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "CITEAZ_SEED";

/// Flat key/value experiment settings. Every key is optional in the file.
///
/// ```
/// use citeaz::harness::ExperimentConfig;
///
/// let cfg: ExperimentConfig = toml::from_str("seed = 3\nalpha_sweep = [0.1]\nembed = 16").unwrap();
/// assert_eq!(cfg.seed, 3);
/// assert_eq!(cfg.train_config(Some(0.1)).dims.embed, 16);
/// assert_eq!(cfg.negative_spec().ratio, 5);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Corpus JSONL written by `ingest` or `synth`.
    pub corpus: Option<PathBuf>,
    /// Optional `query_id<TAB>category` file applied over the corpus labels.
    pub labels: Option<PathBuf>,
    /// Root of every artifact the run writes.
    pub out: PathBuf,
    pub seed: u64,

    pub ratio: usize,
    pub strata_high: usize,
    pub strata_low: usize,
    pub strata_median: usize,
    /// Hold out this many queries; takes precedence over `test_examples`.
    pub test_queries: Option<usize>,
    /// Hold out whole queries until this many examples are reached.
    pub test_examples: usize,

    pub alpha_sweep: Vec<f64>,
    pub include_baseline: bool,

    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub zoning_weight: ZoningWeight,
    /// Vocabulary keeps tokens seen at least this often in the training split.
    pub min_frequency: usize,

    pub embed: usize,
    pub hidden: usize,
    pub attention: usize,
    pub sentence: usize,
    pub l1: usize,
    pub l2: usize,
    pub az_hidden: usize,
    pub max_query: usize,
    pub max_title: usize,
    pub max_abstract: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let neg = NegativeSpec::default();
        let train = TrainConfig::default();
        let d = ModelDims::default();
        let lens = MaxLens::default();
        ExperimentConfig {
            corpus: None,
            labels: None,
            out: PathBuf::from("runs/experiment"),
            seed: 0,
            ratio: neg.ratio,
            strata_high: neg.strata.high,
            strata_low: neg.strata.low,
            strata_median: neg.strata.median,
            test_queries: None,
            test_examples: 5000,
            alpha_sweep: vec![0.1, 0.2, 0.3],
            include_baseline: true,
            learning_rate: train.adam.learning_rate,
            batch_size: train.batch_size,
            max_epochs: train.max_epochs,
            patience: train.patience,
            validation_fraction: train.validation_fraction,
            zoning_weight: train.zoning_weight,
            min_frequency: 2,
            embed: d.embed,
            hidden: d.hidden,
            attention: d.attention,
            sentence: d.sentence,
            l1: d.l1,
            l2: d.l2,
            az_hidden: d.az_hidden,
            max_query: lens.query,
            max_title: lens.title,
            max_abstract: lens.abstract_text,
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file, then applies the seed environment override.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_sweep.is_empty() && !self.include_baseline {
            return Err(Error::Config("nothing to train: empty alpha_sweep and no baseline".into()));
        }
        if let Some(a) = self.alpha_sweep.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Config(format!("alpha {a} must be a positive number")));
        }
        self.negative_spec().validate()?;
        self.train_config(None).validate()
    }

    pub fn negative_spec(&self) -> NegativeSpec {
        NegativeSpec {
            ratio: self.ratio,
            strata: StrataWeights {
                high: self.strata_high,
                low: self.strata_low,
                median: self.strata_median,
            },
            seed: self.seed,
        }
    }

    pub fn test_size(&self) -> TestSize {
        match self.test_queries {
            Some(n) => TestSize::Queries(n),
            None => TestSize::Examples(self.test_examples),
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            embed: self.embed,
            hidden: self.hidden,
            attention: self.attention,
            sentence: self.sentence,
            l1: self.l1,
            l2: self.l2,
            az_hidden: self.az_hidden,
        }
    }

    pub fn max_lens(&self) -> MaxLens {
        MaxLens {
            query: self.max_query,
            title: self.max_title,
            abstract_text: self.max_abstract,
        }
    }

    /// Training settings for one run; `None` is the single-task baseline.
    pub fn train_config(&self, alpha: Option<f64>) -> TrainConfig {
        TrainConfig {
            alpha: alpha.unwrap_or(0.0),
            single_task: alpha.is_none(),
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            validation_fraction: self.validation_fraction,
            seed: self.seed,
            zoning_weight: self.zoning_weight,
            dims: self.dims(),
            max_lens: self.max_lens(),
        }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.out.join("dataset")
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.out.join("checkpoints")
    }

    pub fn prediction_dir(&self) -> PathBuf {
        self.out.join("predictions")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out.join("reports")
    }
}
