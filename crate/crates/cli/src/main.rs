use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use citeaz::dataset::{assemble_dataset, read_examples, split_train_test, write_examples, DatasetManifest, TestSize};
use citeaz::harness::{
    build_vocabulary, compare_predictions, evaluate_predictions, run_experiment, ExperimentConfig, ReportTables,
    RunReport, SEED_ENV,
};
use citeaz::ingest::{filter_source_papers, read_labels, AzCategory, Corpus, Vocabulary};
use citeaz::metrics::report::{model_label, recall_delta_table, Table};
use citeaz::metrics::{cohen_kappa, AgreementTable, MetricsReport};
use citeaz::model::{
    fit, initialise, load_model, predict, read_predictions, save_model, write_predictions, InputCache, ModelManifest,
};
use citeaz::synth::{LabelRule, SynthConfig};

#[derive(Parser)]
#[command(name = "citeaz", version, about = "Citation recommendation with argumentative zoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a directory of JATS XML articles into a corpus file.
    Ingest(IngestArgs),
    /// Sample negatives for every query and optionally split train/test.
    BuildDataset(BuildDatasetArgs),
    /// Fit one model on a training split.
    Train(TrainArgs),
    /// Score a checkpoint on a split and report its metrics.
    Evaluate(EvaluateArgs),
    /// Agreement table and Cohen's kappa for a two-annotator label file.
    Kappa(KappaArgs),
    /// Recall-delta table between a multi-task and a single-task prediction file.
    Compare(CompareArgs),
    /// Re-render report tables of an experiment from its archived predictions.
    Report(ReportArgs),
    /// Run the baseline and the alpha sweep end to end.
    Experiment(ExperimentArgs),
    /// Write a synthetic corpus with planted topic and zoning signals.
    Synth(SynthArgs),
}

/// Settings shared by the commands that read an experiment configuration.
/// Precedence: defaults, then the file, then the environment, then flags.
#[derive(Args)]
struct Common {
    /// Flat TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let mut cfg = ExperimentConfig::default();
                cfg.apply_env()?;
                cfg
            }
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Directory searched recursively for .xml and .nxml files.
    #[arg(long)]
    input: PathBuf,
    /// Corpus JSONL to write.
    #[arg(long)]
    out: PathBuf,
    /// `query_id<TAB>category` file applied over the parsed labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Keep only queries from citing papers with more than 30 references
    /// spread over more than 5 time slices.
    #[arg(long)]
    source_filter: bool,
}

#[derive(Args)]
struct BuildDatasetArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for dataset.jsonl, manifest.json and the split.
    #[arg(long)]
    out: PathBuf,
    /// Negatives per positive.
    #[arg(long)]
    ratio: Option<usize>,
    /// Hold out this many whole queries as the test split.
    #[arg(long, conflicts_with = "test_examples")]
    test_queries: Option<usize>,
    /// Hold out whole queries until this many examples are reached.
    #[arg(long)]
    test_examples: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    /// Training examples (JSONL).
    #[arg(long)]
    train: PathBuf,
    /// Output directory for model.json, vocab.json and history.json.
    #[arg(long)]
    out: PathBuf,
    /// Zoning loss weight of the multi-task model.
    #[arg(long, conflicts_with = "single_task")]
    alpha: Option<f64>,
    /// Train the recommendation-only baseline.
    #[arg(long)]
    single_task: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Examples to score (JSONL).
    #[arg(long)]
    split: PathBuf,
    /// Output directory for predictions.jsonl and metrics.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KappaArgs {
    /// Tab-separated `annotator1<TAB>annotator2` category names, one item per line.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Predictions of the multi-task model.
    #[arg(long)]
    multi: PathBuf,
    /// Predictions of the single-task model.
    #[arg(long)]
    single: PathBuf,
    /// Directory for recall_delta.tsv and recall_delta.md.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment output directory.
    #[arg(long)]
    run: PathBuf,
    /// Where to write the tables; defaults to `<run>/reports`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Replace the sweep with this single alpha.
    #[arg(long, conflicts_with = "single_task")]
    alpha: Option<f64>,
    /// Train only the baseline.
    #[arg(long)]
    single_task: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Topic,
    TopicAndCategory,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    queries: usize,
    #[arg(long, default_value_t = 10)]
    topics: usize,
    #[arg(long, value_enum, default_value_t = Rule::Topic)]
    rule: Rule,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let files = Corpus::xml_files(&args.input)?;
    if files.is_empty() {
        bail!("no .xml or .nxml files under {}", args.input.display());
    }
    let (mut corpus, stats) = Corpus::ingest_files(&files)?;
    if let Some(path) = &args.labels {
        let applied = corpus.apply_labels(&read_labels(path)?);
        println!("labels applied: {applied}");
    }
    if args.source_filter {
        let papers: Vec<_> = corpus.papers.values().cloned().collect();
        let kept: BTreeSet<String> = filter_source_papers(&papers).into_iter().map(|p| p.paper_id).collect();
        corpus
            .queries
            .retain(|q| q.citing_id.as_ref().is_some_and(|c| kept.contains(c)));
        println!("source papers kept: {}", kept.len());
    }
    corpus.write_jsonl(&args.out)?;
    println!(
        "articles: {}  queries: {}  papers: {}  markers without rid: {}",
        stats.articles,
        corpus.queries.len(),
        corpus.papers.len(),
        stats.skipped_markers
    );
    Ok(())
}

fn build_dataset(args: BuildDatasetArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(r) = args.ratio {
        cfg.ratio = r;
    }
    let corpus = Corpus::read_jsonl(&args.corpus)?;
    let spec = cfg.negative_spec();
    let assembled = assemble_dataset(&corpus.queries, &corpus, &spec)?;
    ensure_dir(&args.out)?;
    write_examples(&args.out.join("dataset.jsonl"), &assembled.examples)?;
    let mut manifest = DatasetManifest::new(&spec, &assembled);

    let size = match (args.test_queries, args.test_examples) {
        (Some(n), _) => Some(TestSize::Queries(n)),
        (_, Some(n)) => Some(TestSize::Examples(n)),
        _ if args.common.config.is_some() => Some(cfg.test_size()),
        _ => None,
    };
    if let Some(size) = size {
        let split = split_train_test(&assembled.examples, size, cfg.seed)?;
        write_examples(&args.out.join("train.jsonl"), &split.train)?;
        write_examples(&args.out.join("test.jsonl"), &split.test)?;
        manifest = manifest.with_split(&split);
    }
    manifest.save(&args.out.join("manifest.json"))?;
    println!(
        "queries: {}  examples: {} ({} positive, {} negative)  skipped citations: {}",
        manifest.queries, manifest.examples, manifest.positives, manifest.negatives, manifest.skipped_citations
    );
    if size.is_some() {
        println!("train: {}  test: {}", manifest.train_examples, manifest.test_examples);
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let alpha = match (args.alpha, args.single_task) {
        (_, true) => None,
        (Some(a), false) => Some(a),
        (None, false) => Some(*cfg.alpha_sweep.first().context("no --alpha and an empty alpha_sweep")?),
    };
    let tc = cfg.train_config(alpha);
    tc.validate()?;
    let corpus = Corpus::read_jsonl(&args.corpus)?;
    let examples = read_examples(&args.train)?;
    let vocab = build_vocabulary(&examples, &corpus, cfg.min_frequency)?;
    let cache = InputCache::build(&corpus, &vocab, tc.max_lens, &examples)?;
    let (model, init) = initialise(vocab.len(), &tc);
    let (params, history) = fit(&model, init, &cache, &examples, &tc)?;
    ensure_dir(&args.out)?;
    vocab.save(&args.out.join("vocab.json"))?;
    save_model(&args.out.join("model.json"), ModelManifest::new(&model, &tc, &vocab), params)?;
    write(&args.out.join("history.json"), &serde_json::to_string_pretty(&history)?)?;
    for e in &history.epochs {
        println!("epoch {:>3}  loss {:.6}", e.epoch, e.loss);
    }
    println!("{} trained; best epoch {}", model_label(alpha), history.best_epoch);
    Ok(())
}

fn print_report(title: &str, report: &MetricsReport) {
    let mut t = Table::new(title, &["Class", "P", "R", "F1"]);
    for (c, m) in report.classes.iter().zip(&report.per_class) {
        t.push_values(c.clone(), m.as_array());
    }
    t.push_values("Macro", report.macro_avg.as_array());
    println!("{}", t.to_markdown());
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (model, params, manifest) = load_model(&args.checkpoint.join("model.json"))?;
    let vocab = Vocabulary::load(&args.checkpoint.join("vocab.json"))?;
    manifest.check_vocab(&vocab)?;
    let corpus = Corpus::read_jsonl(&args.corpus)?;
    let examples = read_examples(&args.split)?;
    let cache = InputCache::build(&corpus, &vocab, manifest.train.max_lens, &examples)?;
    let preds = predict(&model, &params, &cache, &examples, !manifest.single_task)?;
    let evaluation = evaluate_predictions(&preds)?;
    ensure_dir(&args.out)?;
    write_predictions(&args.out.join("predictions.jsonl"), &preds)?;
    write(&args.out.join("metrics.json"), &serde_json::to_string_pretty(&evaluation)?)?;
    print_report("Citation recommendation", &evaluation.recommendation);
    if let (Some(z), Some(acc)) = (&evaluation.zoning, evaluation.zoning_accuracy) {
        print_report("Argumentative zoning", z);
        println!("zoning accuracy {acc:.4} over {} queries", evaluation.zoning_queries);
    }
    Ok(())
}

fn kappa(args: KappaArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let (mut a1, mut a2) = (Vec::new(), Vec::new());
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            bail!("{}:{}: expected annotator1<TAB>annotator2", args.input.display(), n + 1);
        }
        match (fields[0].parse::<AzCategory>(), fields[1].parse::<AzCategory>()) {
            (Ok(x), Ok(y)) => {
                a1.push(x);
                a2.push(y);
            }
            _ if n == 0 => {}
            (Err(e), _) | (_, Err(e)) => bail!("{}:{}: {e}", args.input.display(), n + 1),
        }
    }
    let classes: &[AzCategory] = if a1.iter().chain(&a2).all(|c| c.is_specific()) {
        &AzCategory::SPECIFIC
    } else {
        &AzCategory::ALL
    };
    let table = AgreementTable::from_pairs(&a1, &a2, classes)?;
    let mut header = vec!["Annotator 2 \\ Annotator 1"];
    header.extend(classes.iter().map(|c| c.name()));
    let mut t = Table::new("Agreement between annotators", &header);
    for (c, row) in classes.iter().zip(table.counts()) {
        t.push_counts(c.name(), row.iter().copied());
    }
    println!("{}", t.to_markdown());
    println!("items: {}  observed agreement: {:.4}", table.n(), table.observed());
    println!("kappa: {:.4}", cohen_kappa(&table)?);
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let multi = read_predictions(&args.multi)?;
    let single = read_predictions(&args.single)?;
    let delta = compare_predictions(&multi, &single)?;
    let label = args.multi.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let t = recall_delta_table(&label, &delta);
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write(&dir.join("recall_delta.tsv"), &t.to_tsv())?;
        write(&dir.join("recall_delta.md"), &t.to_markdown())?;
    }
    println!("{}", t.to_markdown());
    Ok(())
}

/// Order of the runs as configured: baseline first, then the sweep.
fn run_order(run: &Path) -> Result<Vec<String>> {
    let cfg_path = run.join("config.toml");
    let cfg: ExperimentConfig = toml::from_str(&fs::read_to_string(&cfg_path).with_context(|| {
        format!("reading {}", cfg_path.display())
    })?)?;
    let mut ids = Vec::new();
    if cfg.include_baseline {
        ids.push(citeaz::harness::run_id(None));
    }
    ids.extend(cfg.alpha_sweep.iter().map(|a| citeaz::harness::run_id(Some(*a))));
    Ok(ids)
}

fn report(args: ReportArgs) -> Result<()> {
    let reports_dir = args.run.join("reports");
    let mut reports: BTreeMap<String, RunReport> = BTreeMap::new();
    for id in run_order(&args.run)? {
        let path = reports_dir.join(format!("{id}.json"));
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        reports.insert(id, serde_json::from_str(&text)?);
    }
    let baseline = match reports.get("baseline") {
        Some(r) => Some(read_predictions(&args.run.join(&r.predictions))?),
        None => None,
    };
    let mut ordered = Vec::new();
    for id in run_order(&args.run)? {
        let mut r = reports.remove(&id).context("duplicate run id")?;
        let preds = read_predictions(&args.run.join(&r.predictions))?;
        r.evaluation = evaluate_predictions(&preds)?;
        r.recall_delta = match (&baseline, r.alpha) {
            (Some(base), Some(_)) => Some(compare_predictions(&preds, base)?),
            _ => None,
        };
        ordered.push(r);
    }
    let tables = ReportTables::from_reports(&ordered)?;
    tables.write(&args.out.unwrap_or(reports_dir))?;
    println!("{}", tables.to_markdown());
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(c) = args.corpus {
        cfg.corpus = Some(c);
    }
    if let Some(a) = args.alpha {
        cfg.alpha_sweep = vec![a];
    }
    if args.single_task {
        cfg.alpha_sweep.clear();
        cfg.include_baseline = true;
    }
    let outcome = run_experiment(&cfg)?;
    println!("{}", outcome.tables.to_markdown());
    println!(
        "trained: {}  resumed: {}  output: {}",
        outcome.trained.len(),
        outcome.reports.len() - outcome.trained.len(),
        cfg.out.display()
    );
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let corpus = SynthConfig {
        queries: args.queries,
        topics: args.topics,
        rule: match args.rule {
            Rule::Topic => LabelRule::Topic,
            Rule::TopicAndCategory => LabelRule::TopicAndCategory,
        },
        seed: args.seed,
        ..Default::default()
    }
    .generate()?;
    corpus.write_jsonl(&args.out)?;
    println!("papers: {}  queries: {}", corpus.papers.len(), corpus.queries.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::BuildDataset(a) => build_dataset(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Kappa(a) => kappa(a),
        Command::Compare(a) => compare(a),
        Command::Report(a) => report(a),
        Command::Experiment(a) => experiment(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
