use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::evaluate::{compare_predictions, evaluate_predictions, Evaluation, NEGATIVE, POSITIVE};
use crate::dataset::{
    assemble_dataset, read_examples, split_train_test, write_examples, DatasetManifest, DatasetSplit, Example,
};
use crate::error::{Error, Result};
use crate::ingest::{read_labels, resolve_abstract, Corpus, Vocabulary};
use crate::metrics::report::{
    model_label, recall_delta_table, recommendation_class_table, recommendation_macro_table, zoning_class_table,
    zoning_macro_table, Table,
};
use crate::metrics::{Prf, RecallDelta};
use crate::model::{
    fit, initialise, load_model, predict, save_model, write_predictions, History, InputCache, ModelManifest,
    Prediction, TrainConfig,
};

/// Results of one trained model on the shared test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub label: String,
    /// `None` for the single-task baseline.
    pub alpha: Option<f64>,
    pub seed: u64,
    pub train: TrainConfig,
    pub evaluation: Evaluation,
    /// Against the baseline, `(only this model, only baseline)` per category.
    pub recall_delta: Option<RecallDelta>,
    pub history: History,
    /// Relative to the experiment output directory.
    pub predictions: PathBuf,
}

/// Rendered comparison tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTables {
    pub recommendation_macro: Table,
    pub recommendation_classes: Table,
    pub zoning_macro: Table,
    pub zoning_classes: Table,
    /// One per multi-task run, keyed by run id.
    pub recall_deltas: Vec<(String, Table)>,
}

impl ReportTables {
    /// Baseline first, then the sweep in configured order. Zoning tables
    /// list multi-task runs only.
    pub fn from_reports(reports: &[RunReport]) -> Result<Self> {
        let mut rec_macro = Vec::new();
        let mut rec_class = Vec::new();
        let mut az_macro = Vec::new();
        let mut az_class = Vec::new();
        let mut deltas = Vec::new();
        for r in reports {
            let rec = &r.evaluation.recommendation;
            let class = |name: &str| {
                rec.class(name)
                    .ok_or_else(|| Error::Lookup(format!("class `{name}` in run `{}`", r.run_id)))
            };
            rec_macro.push((r.label.clone(), rec.macro_avg));
            rec_class.push((r.label.clone(), class(POSITIVE)?, class(NEGATIVE)?));
            if let Some(z) = &r.evaluation.zoning {
                az_macro.push((r.label.clone(), z.macro_avg));
                let per: [Prf; 4] = z
                    .per_class
                    .clone()
                    .try_into()
                    .map_err(|_| Error::Shape(format!("run `{}` zoning report is not four-way", r.run_id)))?;
                az_class.push((r.label.clone(), per));
            }
            if let Some(d) = &r.recall_delta {
                deltas.push((r.run_id.clone(), recall_delta_table(&r.label, d)));
            }
        }
        Ok(ReportTables {
            recommendation_macro: recommendation_macro_table(&rec_macro),
            recommendation_classes: recommendation_class_table(&rec_class),
            zoning_macro: zoning_macro_table(&az_macro),
            zoning_classes: zoning_class_table(&az_class),
            recall_deltas: deltas,
        })
    }

    /// File stem and table, in rendering order.
    pub fn named(&self) -> Vec<(String, &Table)> {
        let mut out = vec![
            ("recommendation_macro".to_string(), &self.recommendation_macro),
            ("recommendation_classes".to_string(), &self.recommendation_classes),
            ("zoning_macro".to_string(), &self.zoning_macro),
            ("zoning_classes".to_string(), &self.zoning_classes),
        ];
        for (id, t) in &self.recall_deltas {
            out.push((format!("recall_delta_{id}"), t));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        self.named()
            .iter()
            .map(|(_, t)| t.to_markdown())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// `<stem>.tsv` and `<stem>.md` per table plus `summary.md`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (stem, t) in self.named() {
            write_file(&dir.join(format!("{stem}.tsv")), &t.to_tsv())?;
            write_file(&dir.join(format!("{stem}.md")), &t.to_markdown())?;
        }
        write_file(&dir.join("summary.md"), &self.to_markdown())
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reports: Vec<RunReport>,
    pub tables: ReportTables,
    pub dataset: DatasetManifest,
    /// Runs trained by this invocation; the rest were resumed from checkpoints.
    pub trained: Vec<String>,
}

/// `baseline` or `alpha-<α>`.
pub fn run_id(alpha: Option<f64>) -> String {
    match alpha {
        None => "baseline".into(),
        Some(a) => format!("alpha-{a}"),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Option<String> {
    fs::read_to_string(path).ok()
}

fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    format!("{:x}", h.finalize())
}

fn corpus_digest(corpus: &Corpus) -> Result<String> {
    let mut h = Sha256::new();
    for p in corpus.papers.values() {
        h.update(serde_json::to_vec(p)?);
        h.update(b"\n");
    }
    for q in &corpus.queries {
        h.update(serde_json::to_vec(q)?);
        h.update(b"\n");
    }
    Ok(format!("{:x}", h.finalize()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Samples and splits the dataset, or reloads it when the stored
/// fingerprint matches the corpus and settings.
fn prepare_dataset(corpus: &Corpus, config: &ExperimentConfig) -> Result<(DatasetSplit, DatasetManifest, String)> {
    let spec = config.negative_spec();
    let size = config.test_size();
    let fp = digest(&[
        corpus_digest(corpus)?.as_bytes(),
        &serde_json::to_vec(&spec)?,
        &serde_json::to_vec(&size)?,
    ]);
    let dir = config.dataset_dir();
    let (train_path, test_path, manifest_path, fp_path) = (
        dir.join("train.jsonl"),
        dir.join("test.jsonl"),
        dir.join("manifest.json"),
        dir.join("fingerprint"),
    );
    if read_file(&fp_path).as_deref() == Some(fp.as_str()) {
        let split = DatasetSplit {
            train: read_examples(&train_path)?,
            test: read_examples(&test_path)?,
            test_size: Some(size),
        };
        return Ok((split, DatasetManifest::load(&manifest_path)?, fp));
    }
    let assembled = assemble_dataset(&corpus.queries, corpus, &spec)?;
    let split = split_train_test(&assembled.examples, size, config.seed)?;
    let manifest = DatasetManifest::new(&spec, &assembled).with_split(&split);
    ensure_dir(&dir)?;
    write_examples(&train_path, &split.train)?;
    write_examples(&test_path, &split.test)?;
    manifest.save(&manifest_path)?;
    write_file(&fp_path, &fp)?;
    Ok((split, manifest, fp))
}

/// Vocabulary over the training queries and the titles and abstracts of
/// their candidates.
pub fn build_vocabulary(train: &[Example], corpus: &Corpus, min_frequency: usize) -> Result<Vocabulary> {
    let query_text: BTreeMap<&str, &str> = corpus
        .queries
        .iter()
        .map(|q| (q.query_id.as_str(), q.text.as_str()))
        .rev()
        .collect();
    let mut texts: BTreeMap<String, &str> = BTreeMap::new();
    for e in train {
        let q = query_text
            .get(e.query_id.as_str())
            .ok_or_else(|| Error::Lookup(format!("query `{}`", e.query_id)))?;
        texts.entry(format!("q:{}", e.query_id)).or_insert(q);
        let p = corpus.paper(&e.candidate_id)?;
        texts.entry(format!("t:{}", p.paper_id)).or_insert(p.title.as_str());
        texts.entry(format!("a:{}", p.paper_id)).or_insert(resolve_abstract(p)?);
    }
    Ok(Vocabulary::build(texts.values().copied(), min_frequency))
}

struct Prepared {
    split: DatasetSplit,
    vocab: Vocabulary,
    cache: InputCache,
    fingerprint: String,
}

/// Trains one model or resumes it from a matching checkpoint, then scores
/// the test split and archives the predictions.
fn run_one(
    prep: &Prepared,
    config: &ExperimentConfig,
    alpha: Option<f64>,
    trained: &mut Vec<String>,
) -> Result<(RunReport, Vec<Prediction>)> {
    let id = run_id(alpha);
    let tc = config.train_config(alpha);
    let fp = digest(&[
        prep.fingerprint.as_bytes(),
        &serde_json::to_vec(&tc)?,
        prep.vocab.hash().as_bytes(),
    ]);
    let ckpt_dir = config.checkpoint_dir();
    let (ckpt, hist, fp_path) = (
        ckpt_dir.join(format!("{id}.json")),
        ckpt_dir.join(format!("{id}.history.json")),
        ckpt_dir.join(format!("{id}.fingerprint")),
    );

    let resumed = if read_file(&fp_path).as_deref() == Some(fp.as_str()) {
        let history = read_file(&hist).ok_or_else(|| Error::Checkpoint(format!("{} is missing", hist.display())))?;
        let (model, params, _) = load_model(&ckpt)?;
        Some((model, params, serde_json::from_str::<History>(&history)?))
    } else {
        None
    };
    let (model, params, history) = match resumed {
        Some(r) => r,
        None => {
            let (model, init) = initialise(prep.vocab.len(), &tc);
            let (params, history) =
                fit(&model, init, &prep.cache, &prep.split.train, &tc).map_err(|e| e.in_stage("train"))?;
            ensure_dir(&ckpt_dir)?;
            save_model(&ckpt, ModelManifest::new(&model, &tc, &prep.vocab), params.clone())?;
            write_file(&hist, &serde_json::to_string_pretty(&history)?)?;
            write_file(&fp_path, &fp)?;
            trained.push(id.clone());
            (model, params, history)
        }
    };

    let evaluate = || -> Result<(Vec<Prediction>, Evaluation, PathBuf)> {
        let preds = predict(&model, &params, &prep.cache, &prep.split.test, alpha.is_some())?;
        let rel = PathBuf::from("predictions").join(format!("{id}.jsonl"));
        ensure_dir(&config.prediction_dir())?;
        write_predictions(&config.out.join(&rel), &preds)?;
        let evaluation = evaluate_predictions(&preds)?;
        Ok((preds, evaluation, rel))
    };
    let (preds, evaluation, rel) = evaluate().map_err(|e| e.in_stage("evaluate"))?;
    let report = RunReport {
        run_id: id,
        label: model_label(alpha),
        alpha,
        seed: config.seed,
        train: tc,
        evaluation,
        recall_delta: None,
        history,
        predictions: rel,
    };
    Ok((report, preds))
}

/// Baseline (when requested) plus one multi-task model per α, all on the
/// same split, vocabulary and seed.
///
/// Each stage leaves files under `config.out`; a rerun reuses the dataset
/// and any checkpoint whose fingerprint still matches.
pub fn run_on_corpus(corpus: &Corpus, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    ensure_dir(&config.out)?;
    write_file(&config.out.join("config.toml"), &config.to_toml()?)?;

    let (split, dataset, fingerprint) = prepare_dataset(corpus, config).map_err(|e| e.in_stage("dataset"))?;
    let vocab_stage = || -> Result<(Vocabulary, InputCache)> {
        let vocab = build_vocabulary(&split.train, corpus, config.min_frequency)?;
        vocab.save(&config.out.join("vocab.json"))?;
        let all: Vec<Example> = split.train.iter().chain(&split.test).cloned().collect();
        let cache = InputCache::build(corpus, &vocab, config.max_lens(), &all)?;
        Ok((vocab, cache))
    };
    let (vocab, cache) = vocab_stage().map_err(|e| e.in_stage("vocabulary"))?;
    let prep = Prepared {
        split,
        vocab,
        cache,
        fingerprint,
    };

    let mut runs: Vec<Option<f64>> = Vec::new();
    if config.include_baseline {
        runs.push(None);
    }
    runs.extend(config.alpha_sweep.iter().copied().map(Some));

    let mut trained = Vec::new();
    let mut results = Vec::new();
    for alpha in runs {
        results.push(run_one(&prep, config, alpha, &mut trained)?);
    }

    let report_stage = || -> Result<(Vec<RunReport>, ReportTables)> {
        let baseline = results.iter().find(|(r, _)| r.alpha.is_none()).map(|(_, p)| p.clone());
        let mut reports = Vec::new();
        for (mut report, preds) in results {
            if let (Some(base), Some(_)) = (&baseline, report.alpha) {
                report.recall_delta = Some(compare_predictions(&preds, base)?);
            }
            reports.push(report);
        }
        let dir = config.report_dir();
        ensure_dir(&dir)?;
        for r in &reports {
            write_file(&dir.join(format!("{}.json", r.run_id)), &serde_json::to_string_pretty(r)?)?;
        }
        let tables = ReportTables::from_reports(&reports)?;
        tables.write(&dir)?;
        Ok((reports, tables))
    };
    let (reports, tables) = report_stage().map_err(|e| e.in_stage("report"))?;
    Ok(ExperimentOutcome {
        reports,
        tables,
        dataset,
        trained,
    })
}

/// Loads the configured corpus and labels, then runs [`run_on_corpus`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let load = || -> Result<Corpus> {
        let path = config
            .corpus
            .as_ref()
            .ok_or_else(|| Error::Config("no corpus path configured".into()))?;
        let mut corpus = Corpus::read_jsonl(path)?;
        if let Some(labels) = &config.labels {
            corpus.apply_labels(&read_labels(labels)?);
        }
        Ok(corpus)
    };
    let corpus = load().map_err(|e| e.in_stage("load"))?;
    run_on_corpus(&corpus, config)
}
