//! Experiment orchestration: dataset, α sweep against the single-task
//! baseline, archived predictions and rendered reports.
//!
//! Output layout under `out`:
//!
//! ```text
//! config.toml  vocab.json
//! dataset/      train.jsonl test.jsonl manifest.json fingerprint
//! checkpoints/  <run>.json <run>.history.json <run>.fingerprint
//! predictions/  <run>.jsonl
//! reports/      <run>.json <table>.tsv <table>.md summary.md
//! ```

mod config;
mod evaluate;
mod run;

pub use config::{ExperimentConfig, SEED_ENV};
pub use evaluate::{
    compare_predictions, decision_map, evaluate_predictions, query_labels, truth_set, Evaluation, NEGATIVE, POSITIVE,
};
pub use run::{build_vocabulary, run_experiment, run_id, run_on_corpus, ExperimentOutcome, ReportTables, RunReport};

#[cfg(test)]
mod tests;
