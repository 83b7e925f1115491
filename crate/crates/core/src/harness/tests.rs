use super::*;
use crate::error::Error;
use crate::synth::SynthConfig;

fn small_config(out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        out: out.to_path_buf(),
        seed: 4,
        test_queries: Some(10),
        alpha_sweep: vec![0.1],
        max_epochs: 2,
        batch_size: 16,
        validation_fraction: 0.0,
        embed: 4,
        hidden: 4,
        attention: 4,
        sentence: 4,
        l1: 8,
        l2: 8,
        az_hidden: 8,
        max_query: 8,
        max_title: 4,
        max_abstract: 10,
        ..Default::default()
    }
}

fn corpus() -> crate::ingest::Corpus {
    SynthConfig {
        queries: 40,
        ..Default::default()
    }
    .generate()
    .unwrap()
}

#[test]
fn one_alpha_with_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let corpus = corpus();
    let out = run_on_corpus(&corpus, &cfg).unwrap();
    assert_eq!(out.reports.len(), 2);
    assert_eq!(out.trained, ["baseline", "alpha-0.1"]);
    assert_eq!(out.tables.recall_deltas.len(), 1);
    assert_eq!(out.tables.recommendation_macro.rows.len(), 2);
    assert_eq!(out.tables.zoning_macro.rows.len(), 1);
    for id in ["baseline", "alpha-0.1"] {
        assert!(dir.path().join(format!("checkpoints/{id}.json")).exists());
        assert!(dir.path().join(format!("predictions/{id}.jsonl")).exists());
    }
    assert_eq!(out.dataset.test_examples, out.reports[0].evaluation.pairs);
    assert!(out.reports[0].recall_delta.is_none());
    assert!(out.reports[1].recall_delta.is_some());

    let preds = |d: &std::path::Path| std::fs::read(d.join("predictions/alpha-0.1.jsonl")).unwrap();
    let first = preds(dir.path());
    let again = run_on_corpus(&corpus, &cfg).unwrap();
    assert!(again.trained.is_empty());
    assert_eq!(preds(dir.path()), first);
    assert_eq!(again.reports, out.reports);

    let fresh = tempfile::tempdir().unwrap();
    let other = run_on_corpus(&corpus, &small_config(fresh.path())).unwrap();
    assert_eq!(other.trained.len(), 2);
    assert_eq!(preds(fresh.path()), first);
}

#[test]
fn changed_settings_retrain_only_affected_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus();
    run_on_corpus(&corpus, &small_config(dir.path())).unwrap();
    let mut cfg = small_config(dir.path());
    cfg.alpha_sweep = vec![0.1, 0.3];
    let out = run_on_corpus(&corpus, &cfg).unwrap();
    assert_eq!(out.trained, ["alpha-0.3"]);
    assert_eq!(out.tables.recall_deltas.len(), 2);
}

#[test]
fn stage_failures_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.test_queries = Some(10_000);
    match run_on_corpus(&corpus(), &cfg) {
        Err(Error::Stage { stage, source }) => {
            assert_eq!(stage, "dataset");
            assert!(matches!(*source, Error::InsufficientQueries { .. }));
        }
        other => panic!("{other:?}"),
    }
    let cfg = small_config(dir.path());
    assert!(matches!(run_experiment(&cfg), Err(Error::Stage { stage: "load", .. })));
}
