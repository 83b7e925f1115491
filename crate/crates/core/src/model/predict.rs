use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{classify_az, decide, InputCache, Model, ModelConfig};
use super::train::TrainConfig;
use crate::dataset::{CiteLabel, Example};
use crate::error::{Error, Result};
use crate::ingest::{AzCategory, Vocabulary};
use crate::ndnet::{Checkpoint, ParamSet};

/// One scored (query, candidate) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub query_id: String,
    pub candidate_id: String,
    pub p_cite: [f64; 2],
    pub decision: CiteLabel,
    /// Absent for the single-task network.
    pub p_az: Option<[f64; 5]>,
    pub az_pred: Option<AzCategory>,
    pub cite_label: CiteLabel,
    pub az_label: AzCategory,
}

/// Scores every example in input order. The zoning head runs only when
/// `with_zoning`.
pub fn predict(
    model: &Model,
    params: &ParamSet,
    cache: &InputCache,
    examples: &[Example],
    with_zoning: bool,
) -> Result<Vec<Prediction>> {
    examples
        .par_iter()
        .map(|e| {
            let inputs = cache.example(e)?;
            let out = if with_zoning {
                model.forward_multitask(params, &inputs)?
            } else {
                model.forward_single(params, &inputs)?
            };
            Ok(Prediction {
                query_id: e.query_id.clone(),
                candidate_id: e.candidate_id.clone(),
                p_cite: out.p_cite,
                decision: decide(out.p_cite),
                p_az: out.p_az,
                az_pred: out.p_az.as_ref().map(classify_az),
                cite_label: e.cite_label,
                az_label: e.az_label,
            })
        })
        .collect()
}

/// Decision and rank of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub candidate_id: String,
    pub p_cite: f64,
    pub decision: CiteLabel,
}

/// Candidates ordered by citing probability, highest first; equal
/// probabilities fall back to ascending id.
///
/// ```
/// use citeaz::dataset::CiteLabel;
/// use citeaz::model::recommend;
///
/// let ranked = recommend(&[("b", [0.4219, 0.5781]), ("a", [0.6754, 0.3246])]);
/// assert_eq!(ranked[0].candidate_id, "a");
/// assert_eq!(ranked[0].decision, CiteLabel::Cite);
/// assert_eq!(ranked[1].decision, CiteLabel::NotCite);
/// ```
pub fn recommend<S: AsRef<str>>(scored: &[(S, [f64; 2])]) -> Vec<Recommendation> {
    let mut out: Vec<Recommendation> = scored
        .iter()
        .map(|(id, p)| Recommendation {
            candidate_id: id.as_ref().to_string(),
            p_cite: p[0],
            decision: decide(*p),
        })
        .collect();
    out.sort_by(|a, b| {
        b.p_cite
            .total_cmp(&a.p_cite)
            .then_with(|| a.candidate_id.cmp(&b.candidate_id))
    });
    out
}

/// Scores `candidates` for one query and ranks them.
pub fn recommend_for_query(
    model: &Model,
    params: &ParamSet,
    cache: &InputCache,
    query_id: &str,
    candidates: &[String],
) -> Result<Vec<Recommendation>> {
    let scored: Vec<(&String, [f64; 2])> = candidates
        .par_iter()
        .map(|c| {
            let inputs = cache.pair(query_id, c)?;
            Ok((c, model.forward_single(params, &inputs)?.p_cite))
        })
        .collect::<Result<_>>()?;
    Ok(recommend(&scored))
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in predictions {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Everything needed to rebuild and score a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub alpha: f64,
    pub single_task: bool,
    pub model: ModelConfig,
    pub vocab_hash: String,
    pub seed: u64,
    pub train: TrainConfig,
}

impl ModelManifest {
    pub fn new(model: &Model, train: &TrainConfig, vocab: &Vocabulary) -> Self {
        ModelManifest {
            alpha: train.alpha,
            single_task: train.single_task,
            model: model.config,
            vocab_hash: vocab.hash(),
            seed: train.seed,
            train: *train,
        }
    }

    /// Fails unless `vocab` is the vocabulary the model was trained with.
    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        let hash = vocab.hash();
        if hash != self.vocab_hash {
            return Err(Error::Checkpoint(format!(
                "vocabulary hash {hash} does not match the model's {}",
                self.vocab_hash
            )));
        }
        Ok(())
    }
}

pub type ModelCheckpoint = Checkpoint<ModelManifest>;

pub fn save_model(path: &Path, manifest: ModelManifest, params: ParamSet) -> Result<()> {
    Checkpoint::new(manifest.seed, manifest, params).save(path)
}

/// Loads a checkpoint and checks it against the layout its manifest implies.
pub fn load_model(path: &Path) -> Result<(Model, ParamSet, ModelManifest)> {
    let ckpt = ModelCheckpoint::load(path)?;
    let (model, layout) = Model::layout(ckpt.config.model);
    ckpt.validate_against(&layout)?;
    Ok((model, ckpt.params, ckpt.config))
}
