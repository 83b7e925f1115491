use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use citeaz::dataset::CiteLabel;
use citeaz::harness::{evaluate_predictions, Evaluation};
use citeaz::ingest::{AzCategory, Corpus, Paper, Query};
use citeaz::metrics::confusion;
use citeaz::model::read_predictions;

fn citeaz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citeaz"))
        .args(args)
        .env_remove("CITEAZ_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = citeaz(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &str = "\
seed = 4
max_epochs = 2
learning_rate = 0.01
batch_size = 16
validation_fraction = 0.0
test_queries = 10
alpha_sweep = [0.1]
embed = 4
hidden = 4
attention = 4
sentence = 4
l1 = 8
l2 = 8
az_hidden = 8
max_query = 10
max_title = 4
max_abstract = 10
";

#[test]
fn kappa_on_the_published_agreement_table() {
    // rows annotator 2, columns annotator 1
    let counts = [[347, 35, 7, 23], [13, 285, 6, 52], [7, 11, 16, 1], [16, 40, 1, 140]];
    let mut text = String::from("annotator1\tannotator2\n");
    for (i, row) in counts.iter().enumerate() {
        for (j, &n) in row.iter().enumerate() {
            for _ in 0..n {
                text.push_str(&format!("{}\t{}\n", AzCategory::SPECIFIC[j].name(), AzCategory::SPECIFIC[i].name()));
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.tsv");
    fs::write(&path, text).unwrap();
    let out = ok(&["kappa", "--input", p(&path)]);
    assert!(out.contains("kappa: 0.6819"), "{out}");
    assert!(out.contains("items: 1000"), "{out}");
    assert!(out.contains("| Method | 347 | 35 | 7 | 23 |"), "{out}");
}

#[test]
fn build_dataset_on_one_citation() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = Corpus::default();
    for i in 0..8 {
        let mut paper = Paper::new(format!("P{i}"));
        paper.title = format!("paper {i}");
        paper.abstract_text = format!("abstract about subject {i} and valves");
        corpus.insert_paper(paper);
    }
    corpus.queries.push(Query {
        query_id: "q".into(),
        citing_id: Some("P7".into()),
        cited_id: "P0".into(),
        text: "valves were studied [CITE].".into(),
        context: String::new(),
        az_label: AzCategory::Method,
    });
    let path = dir.path().join("corpus.jsonl");
    corpus.write_jsonl(&path).unwrap();
    let out_dir = dir.path().join("ds");
    ok(&["build-dataset", "--corpus", p(&path), "--out", p(&out_dir), "--ratio", "5"]);
    let lines = fs::read_to_string(out_dir.join("dataset.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 6);
    assert_eq!(lines.lines().filter(|l| l.contains("\"cite\"")).count(), 1);
    assert!(!lines.contains("\"P7\""), "the citing paper is never a candidate");
}

#[test]
fn evaluate_agrees_with_the_metrics_module() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let corpus = d.join("corpus.jsonl");
    ok(&["synth", "--out", p(&corpus), "--queries", "60", "--seed", "2"]);
    let ds = d.join("ds");
    ok(&["build-dataset", "--config", p(&cfg), "--corpus", p(&corpus), "--out", p(&ds)]);
    let ckpt = d.join("model");
    let out = ok(&[
        "train", "--config", p(&cfg), "--corpus", p(&corpus), "--train", p(&ds.join("train.jsonl")), "--out",
        p(&ckpt), "--alpha", "0.2",
    ]);
    assert!(out.contains("alpha = 0.2"), "{out}");
    let eval_dir = d.join("eval");
    ok(&[
        "evaluate", "--checkpoint", p(&ckpt), "--corpus", p(&corpus), "--split", p(&ds.join("test.jsonl")), "--out",
        p(&eval_dir),
    ]);

    let from_cli: Evaluation = serde_json::from_str(&fs::read_to_string(eval_dir.join("metrics.json")).unwrap()).unwrap();
    let preds = read_predictions(&eval_dir.join("predictions.jsonl")).unwrap();
    assert_eq!(from_cli, evaluate_predictions(&preds).unwrap());
    let truth: Vec<CiteLabel> = preds.iter().map(|p| p.cite_label).collect();
    let decided: Vec<CiteLabel> = preds.iter().map(|p| p.decision).collect();
    let direct = confusion(&truth, &decided, &[CiteLabel::Cite, CiteLabel::NotCite])
        .unwrap()
        .report(|l| format!("{l:?}"))
        .unwrap();
    assert_eq!(from_cli.recommendation.per_class, direct.per_class);
    assert_eq!(from_cli.recommendation.macro_avg, direct.macro_avg);
    assert!(from_cli.zoning.is_some());
}

#[test]
fn experiment_report_and_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let corpus = d.join("corpus.jsonl");
    ok(&["synth", "--out", p(&corpus), "--queries", "40"]);
    let run = d.join("run");
    let first = ok(&["experiment", "--config", p(&cfg), "--corpus", p(&corpus), "--out", p(&run)]);
    assert!(first.contains("trained: 2  resumed: 0"), "{first}");
    let summary = fs::read_to_string(run.join("reports/summary.md")).unwrap();

    let again = ok(&["experiment", "--config", p(&cfg), "--corpus", p(&corpus), "--out", p(&run)]);
    assert!(again.contains("trained: 0  resumed: 2"), "{again}");

    let rendered = d.join("rendered");
    ok(&["report", "--run", p(&run), "--out", p(&rendered)]);
    assert_eq!(fs::read_to_string(rendered.join("summary.md")).unwrap(), summary);

    let out = ok(&[
        "compare", "--multi", p(&run.join("predictions/alpha-0.1.jsonl")), "--single",
        p(&run.join("predictions/baseline.jsonl")), "--out", p(&d.join("cmp")),
    ]);
    assert!(out.contains("Only_multi_task"), "{out}");
    let table = fs::read_to_string(d.join("cmp/recall_delta.tsv")).unwrap();
    let stored = fs::read_to_string(run.join("reports/recall_delta_alpha-0.1.tsv")).unwrap();
    assert_eq!(table, stored);
}

#[test]
fn seed_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    ok(&["synth", "--out", p(&a), "--queries", "20", "--seed", "9"]);
    let out = Command::new(env!("CARGO_BIN_EXE_citeaz"))
        .args(["synth", "--out", p(&b), "--queries", "20"])
        .env("CITEAZ_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = citeaz(&["no-such-command"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(!citeaz(&["kappa"]).status.success());
    assert!(!citeaz(&["train", "--alpha", "0.1", "--single-task"]).status.success());
    let missing = citeaz(&["kappa", "--input", "/nonexistent/pairs.tsv"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}
