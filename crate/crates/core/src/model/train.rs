use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{InputCache, MaxLens, Model, ModelConfig, ModelDims};
use crate::dataset::{DatasetSplit, Example};
use crate::error::{Error, Result};
use crate::ingest::{Corpus, Vocabulary};
use crate::ndnet::{AdamConfig, AdamState, GradBuffer, Init, ParamSet, Tape};

/// Examples per parallel work unit. Gradients are summed inside a chunk and
/// chunks are merged in order, so results do not depend on the thread count.
const CHUNK: usize = 8;

/// How the zoning loss of a query is spread over its examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoningWeight {
    /// Every example contributes its query's zoning loss once.
    #[default]
    PerExample,
    /// Each example's zoning loss is divided by its query's example count.
    PerQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub single_task: bool,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Fraction of training queries held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    pub seed: u64,
    pub zoning_weight: ZoningWeight,
    pub dims: ModelDims,
    pub max_lens: MaxLens,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.1,
            single_task: false,
            adam: AdamConfig::default(),
            batch_size: 64,
            max_epochs: 50,
            patience: 3,
            validation_fraction: 0.1,
            seed: 0,
            zoning_weight: ZoningWeight::PerExample,
            dims: ModelDims::default(),
            max_lens: MaxLens::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation fraction must be in [0, 1)".into()));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::Config("alpha must be a non-negative number".into()));
        }
        Ok(())
    }

    /// Zoning weight used in the loss; `None` for the single-task network.
    pub fn zoning_alpha(&self) -> Option<f64> {
        (!self.single_task).then_some(self.alpha)
    }
}

/// Mean losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub cite_loss: f64,
    /// Unweighted zoning loss; 0 when the zoning term is not trained.
    pub az_loss: f64,
    /// `α · az_loss`, the zoning share of `loss`.
    pub weighted_az_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Parameters returned by [`train`].
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: Model,
    pub params: ParamSet,
    pub history: History,
}

#[derive(Default)]
struct Sums {
    total: f64,
    cite: f64,
    az: f64,
}

impl Sums {
    fn add(&mut self, other: &Sums) {
        self.total += other.total;
        self.cite += other.cite;
        self.az += other.az;
    }
}

/// Loss weights for each example's zoning term.
fn zoning_scales(examples: &[&Example], mode: ZoningWeight) -> Vec<f64> {
    match mode {
        ZoningWeight::PerExample => vec![1.0; examples.len()],
        ZoningWeight::PerQuery => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for e in examples {
                *counts.entry(e.query_id.as_str()).or_default() += 1;
            }
            examples.iter().map(|e| 1.0 / counts[e.query_id.as_str()] as f64).collect()
        }
    }
}

/// Forward and, when `grads` is given, backward over `batch`.
fn run_batch(
    model: &Model,
    params: &ParamSet,
    cache: &InputCache,
    batch: &[(&Example, f64)],
    alpha: Option<f64>,
    grads: Option<&mut GradBuffer>,
) -> Result<Sums> {
    let results: Vec<Result<(Sums, Option<GradBuffer>)>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sums = Sums::default();
            let mut local = grads.as_ref().map(|_| GradBuffer::new(params));
            for &(e, az_scale) in chunk {
                let inputs = cache.example(e)?;
                let mut tape = Tape::new(params);
                let a = alpha.map(|a| a * az_scale);
                let nodes = model.loss(&mut tape, &inputs, e.cite_label, e.az_label, a)?;
                sums.total += tape.scalar(nodes.total);
                sums.cite += tape.scalar(nodes.cite);
                if let Some(az) = nodes.az {
                    sums.az += tape.scalar(az) * az_scale;
                }
                if let Some(buf) = local.as_mut() {
                    tape.backward(nodes.total, 1.0, buf)?;
                }
            }
            Ok((sums, local))
        })
        .collect();
    let mut total = Sums::default();
    let mut grads = grads;
    for r in results {
        let (sums, local) = r?;
        total.add(&sums);
        if let (Some(g), Some(l)) = (grads.as_deref_mut(), local) {
            g.merge(&l);
        }
    }
    Ok(total)
}

/// Mean joint loss over `examples` without updating anything.
pub fn evaluate_loss(
    model: &Model,
    params: &ParamSet,
    cache: &InputCache,
    examples: &[&Example],
    config: &TrainConfig,
) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Empty("loss over no examples"));
    }
    let scales = zoning_scales(examples, config.zoning_weight);
    let batch: Vec<(&Example, f64)> = examples.iter().copied().zip(scales).collect();
    let sums = run_batch(model, params, cache, &batch, config.zoning_alpha(), None)?;
    Ok(sums.total / examples.len() as f64)
}

/// Splits training examples into fitting and validation sets by query.
fn hold_out<'e>(examples: &'e [Example], fraction: f64, seed: u64) -> (Vec<&'e Example>, Vec<&'e Example>) {
    let queries: BTreeSet<&str> = examples.iter().map(|e| e.query_id.as_str()).collect();
    let n_val = (fraction * queries.len() as f64).round() as usize;
    if fraction <= 0.0 || n_val == 0 || n_val >= queries.len() {
        return (examples.iter().collect(), Vec::new());
    }
    let mut order: Vec<&str> = queries.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    order.shuffle(&mut rng);
    let val: BTreeSet<&str> = order[..n_val].iter().copied().collect();
    examples.iter().partition(|e| !val.contains(e.query_id.as_str()))
}

/// Initial parameters for `config`, seeded by `config.seed`.
pub fn initialise(vocab_size: usize, config: &TrainConfig) -> (Model, ParamSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model_config = ModelConfig {
        vocab_size,
        dims: config.dims,
        max_lens: config.max_lens,
    };
    Model::new(model_config, &mut Init::Random(&mut rng))
}

/// Mini-batch Adam from the given starting parameters.
///
/// Each epoch shuffles the fitting examples with a seeded generator that is
/// independent of the initialisation stream. With a validation fraction the
/// parameters of the best validation epoch are returned.
pub fn fit(
    model: &Model,
    mut params: ParamSet,
    cache: &InputCache,
    examples: &[Example],
    config: &TrainConfig,
) -> Result<(ParamSet, History)> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let (fit_set, val_set) = hold_out(examples, config.validation_fraction, config.seed);
    let scales = zoning_scales(&fit_set, config.zoning_weight);
    let mut order: Vec<(&Example, f64)> = fit_set.iter().copied().zip(scales).collect();
    let alpha = config.zoning_alpha();

    let mut adam = AdamState::new(config.adam, &params);
    let mut shuffle = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle.set_stream(1);
    let mut history = History::default();
    let mut best: Option<(f64, ParamSet)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle);
        let mut sums = Sums::default();
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grads = GradBuffer::new(&params);
            let diverged = |loss| Error::Diverged {
                epoch,
                batch: b + 1,
                loss,
            };
            let s = match run_batch(model, &params, cache, batch, alpha, Some(&mut grads)) {
                Err(Error::NonFinite(_)) => return Err(diverged(f64::NAN)),
                r => r?,
            };
            if !s.total.is_finite() {
                return Err(diverged(s.total));
            }
            grads.scale(1.0 / batch.len() as f64);
            let dense = grads.to_tensors(&params);
            adam.update(&mut params, &dense)?;
            sums.add(&s);
        }
        let n = order.len() as f64;
        let az_loss = sums.az / n;
        let validation_loss = if val_set.is_empty() {
            None
        } else {
            Some(evaluate_loss(model, &params, cache, &val_set, config)?)
        };
        history.epochs.push(EpochStats {
            epoch,
            loss: sums.total / n,
            cite_loss: sums.cite / n,
            az_loss,
            weighted_az_loss: alpha.unwrap_or(0.0) * az_loss,
            validation_loss,
        });
        match validation_loss {
            None => history.best_epoch = epoch,
            Some(v) => {
                if best.as_ref().map_or(true, |(b, _)| v < *b) {
                    best = Some((v, params.clone()));
                    history.best_epoch = epoch;
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= config.patience {
                        history.stopped_early = true;
                        break;
                    }
                }
            }
        }
    }
    if let Some((_, kept)) = best {
        params = kept;
    }
    Ok((params, history))
}

/// Builds the model for `vocab`, encodes inputs and fits on `split.train`.
pub fn train(split: &DatasetSplit, corpus: &Corpus, vocab: &Vocabulary, config: &TrainConfig) -> Result<Trained> {
    config.validate()?;
    let cache = InputCache::build(corpus, vocab, config.max_lens, &split.train)?;
    let (model, params) = initialise(vocab.len(), config);
    let (params, history) = fit(&model, params, &cache, &split.train, config)?;
    Ok(Trained {
        model,
        params,
        history,
    })
}
