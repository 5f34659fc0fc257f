//! Command-line interface: one subcommand per pipeline stage plus an
//! end-to-end `pipeline` command.
//!
//! Exit codes: 0 success, 1 partial or operational failure, 2 invalid
//! invocation. Logs go to standard error as `key=value` lines; `--quiet`
//! silences everything below error level.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataio;
use crate::grammar::{self, GrammarConfig};
use crate::hocr::{self, Word};
use crate::metrics::{self, EvalReport};
use crate::model::{to_canonical_json, DocumentGraph, DocumentTree};
use crate::query;
use crate::relhead::{self, ModelDims, RelationModel, TrainConfig};

#[derive(Parser)]
#[command(name = "docstruct", version, about = "Hierarchical document structure toolkit")]
struct Cli {
    /// Suppress non-error logging.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the relation classifier on gold annotation pages.
    Train(TrainArgs),
    /// Refine categories and predict relations for one page.
    Infer(InferArgs),
    /// Repair a predicted graph into a valid tree.
    Postprocess(PostprocessArgs),
    /// Convert a tree plus words into hOCR.
    Convert(ConvertArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Run a structure query against an hOCR file.
    Query(QueryArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// End-to-end: infer, repair, and convert a directory of pages.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of training pages (interchange JSON).
    #[arg(long = "train")]
    train_dir: PathBuf,
    /// Directory of validation pages.
    #[arg(long = "val")]
    val_dir: Option<PathBuf>,
    /// Training configuration JSON; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PostprocessArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the repair trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Use classifier scores for parent completion.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Forbid sequences among children of unordered groups.
    #[arg(long)]
    strict_grammar: bool,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Word file: JSON list of {text, bbox}.
    #[arg(long)]
    words: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Prediction page or directory.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth page or directory.
    #[arg(long)]
    gt: PathBuf,
    /// IoU threshold.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    doc: PathBuf,
    #[arg(long)]
    expr: String,
    /// Direct (non-transitive) followedby semantics.
    #[arg(long)]
    direct: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    splits: PathBuf,
    /// Stats file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// Pipeline configuration JSON; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Input directory of pages.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Directory of ground-truth pages (enables the summary report).
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Directory of `<id>.words.json` files.
    #[arg(long)]
    words: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relation acceptance threshold override.
    #[arg(long)]
    tau: Option<f64>,
    /// Comma-separated IoU thresholds for the summary report.
    #[arg(long, value_delimiter = ',')]
    iou_thresholds: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strict_grammar: bool,
    /// Worker threads for per-page processing.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Pipeline settings file; command-line flags override these.
#[derive(Debug, Default, Deserialize)]
struct PipelineFile {
    model: Option<PathBuf>,
    input: Option<PathBuf>,
    gt: Option<PathBuf>,
    words: Option<PathBuf>,
    out: Option<PathBuf>,
    tau: Option<f64>,
    iou_thresholds: Option<Vec<f64>>,
    seed: Option<u64>,
    strict_grammar: Option<bool>,
    jobs: Option<usize>,
}

/// Training settings file; flags override.
#[derive(Debug, Default, Deserialize)]
struct TrainFile {
    learning_rate: Option<f64>,
    max_iterations: Option<usize>,
    batch_size: Option<usize>,
    pair_sample_size: Option<usize>,
    seed: Option<u64>,
    early_stopping_patience: Option<usize>,
    embed_dim: Option<usize>,
    fusion_dim: Option<usize>,
    tau: Option<f64>,
}

struct Logger {
    quiet: bool,
}

impl Logger {
    fn info(&self, line: &str) {
        if !self.quiet {
            eprintln!("level=info {line}");
        }
    }

    fn error(&self, line: &str) {
        eprintln!("level=error {line}");
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_with_args(std::env::args().collect())
}

/// Runs the CLI against explicit arguments (first element is the program
/// name); used directly by the integration tests.
pub fn run_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    let log = Logger { quiet: cli.quiet };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, &log),
        Command::Infer(a) => cmd_infer(a, &log),
        Command::Postprocess(a) => cmd_postprocess(a, &log),
        Command::Convert(a) => cmd_convert(a, &log),
        Command::Evaluate(a) => cmd_evaluate(a, &log),
        Command::Query(a) => cmd_query(a, &log),
        Command::Stats(a) => cmd_stats(a, &log),
        Command::Pipeline(a) => cmd_pipeline(a, &log),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            log.error(&format!("error={:?}", e.to_string()));
            1
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Message(String),
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|source| CliError::Io { path: parent.into(), source })?;
        }
    }
    std::fs::write(path, content).map_err(|source| CliError::Io { path: path.into(), source })
}

fn msg(e: impl std::fmt::Display) -> CliError {
    CliError::Message(e.to_string())
}

/// Interchange pages of a directory, sorted by id.
fn load_pages(dir: &Path) -> Result<Vec<(String, DocumentGraph)>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| CliError::Io { path: dir.into(), source })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.ends_with(".json") && !name.ends_with(".words.json")
        })
        .collect();
    files.sort();
    let mut out = Vec::with_capacity(files.len());
    for path in files {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let graph = DocumentGraph::from_json_str(&read_file(&path)?)
            .map_err(|e| CliError::Message(format!("{}: {e}", path.display())))?;
        out.push((id, graph));
    }
    Ok(out)
}

fn cmd_train(a: TrainArgs, log: &Logger) -> Result<i32, CliError> {
    let file: TrainFile = match &a.config {
        Some(path) => serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Message(format!("{}: {e}", path.display())))?,
        None => TrainFile::default(),
    };
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: file.learning_rate.unwrap_or(defaults.learning_rate),
        max_iterations: a
            .max_iterations
            .or(file.max_iterations)
            .unwrap_or(defaults.max_iterations),
        batch_size: file.batch_size.unwrap_or(defaults.batch_size),
        pair_sample_size: file.pair_sample_size.unwrap_or(defaults.pair_sample_size),
        seed: a.seed.or(file.seed).unwrap_or(defaults.seed),
        early_stopping_patience: file
            .early_stopping_patience
            .unwrap_or(defaults.early_stopping_patience),
    };
    let dims = ModelDims {
        embed: file.embed_dim.unwrap_or(ModelDims::default().embed),
        fusion: file.fusion_dim.unwrap_or(ModelDims::default().fusion),
    };

    let train_pages: Vec<DocumentGraph> =
        load_pages(&a.train_dir)?.into_iter().map(|(_, g)| g).collect();
    let val_pages: Vec<DocumentGraph> = match &a.val_dir {
        Some(dir) => load_pages(dir)?.into_iter().map(|(_, g)| g).collect(),
        None => Vec::new(),
    };
    log.info(&format!(
        "event=train_start docs={} val={} iterations={}",
        train_pages.len(),
        val_pages.len(),
        cfg.max_iterations
    ));

    let categories = crate::model::CategorySet::full();
    let (mut model, report) =
        relhead::train(&train_pages, &val_pages, &categories, dims, &cfg).map_err(msg)?;
    if let Some(tau) = a.tau.or(file.tau) {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(CliError::Message(format!("tau {tau} outside (0, 1)")));
        }
        model.tau = tau;
    }
    write_file(&a.out, &model.save_json())?;
    log.info(&format!(
        "event=train_done iterations={} best_val_f1={}",
        report.iterations_run, report.best_val_f1
    ));
    Ok(0)
}

fn cmd_infer(a: InferArgs, log: &Logger) -> Result<i32, CliError> {
    let model = RelationModel::load_json(&read_file(&a.model)?).map_err(msg)?;
    let graph = DocumentGraph::from_json_str(&read_file(&a.input)?).map_err(msg)?;
    let pred = relhead::infer_graph(&graph, &model);
    write_file(&a.out, &pred.to_canonical_json())?;
    log.info(&format!(
        "event=infer_done in={} relations={}",
        a.input.display(),
        pred.relations.len()
    ));
    Ok(0)
}

fn cmd_postprocess(a: PostprocessArgs, log: &Logger) -> Result<i32, CliError> {
    let graph = DocumentGraph::from_json_str(&read_file(&a.input)?).map_err(msg)?;
    let scores = match &a.model {
        Some(path) => {
            let model = RelationModel::load_json(&read_file(path)?).map_err(msg)?;
            Some(relhead::pair_score_table(&graph, &model))
        }
        None => None,
    };
    let config = GrammarConfig { strict_unordered_group: a.strict_grammar };
    let (tree, trace) = grammar::postprocess(&graph, scores.as_ref(), config);
    write_file(&a.out, &tree.to_canonical_json())?;
    if let Some(trace_path) = &a.trace {
        write_file(trace_path, &trace.to_canonical_json())?;
    }
    log.info(&format!("event=postprocess_done repairs={}", trace.len()));
    Ok(0)
}

fn read_words(path: &Path) -> Result<Vec<Word>, CliError> {
    let words: Vec<Word> = serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::Message(format!("{}: {e}", path.display())))?;
    if words.iter().any(|w| w.text.is_empty()) {
        return Err(CliError::Message(format!("{}: word with empty text", path.display())));
    }
    Ok(words)
}

fn cmd_convert(a: ConvertArgs, log: &Logger) -> Result<i32, CliError> {
    let tree = DocumentTree::from_json_str(&read_file(&a.tree)?).map_err(msg)?;
    let words = match &a.words {
        Some(path) => read_words(path)?,
        None => Vec::new(),
    };
    let xml = hocr::to_hocr(&tree, &words).map_err(msg)?;
    write_file(&a.out, &xml)?;
    log.info(&format!("event=convert_done out={}", a.out.display()));
    Ok(0)
}

fn collect_pairs(
    pred: &Path,
    gt: &Path,
) -> Result<Vec<(DocumentGraph, DocumentGraph)>, CliError> {
    if pred.is_dir() != gt.is_dir() {
        return Err(CliError::Message(
            "pred and gt must both be files or both be directories".into(),
        ));
    }
    if !pred.is_dir() {
        let p = DocumentGraph::from_json_str(&read_file(pred)?).map_err(msg)?;
        let g = DocumentGraph::from_json_str(&read_file(gt)?).map_err(msg)?;
        return Ok(vec![(p, g)]);
    }
    let preds: BTreeMap<String, DocumentGraph> = load_pages(pred)?.into_iter().collect();
    let gts = load_pages(gt)?;
    let mut pairs = Vec::with_capacity(gts.len());
    for (id, g) in gts {
        let p = preds
            .get(&id)
            .ok_or_else(|| CliError::Message(format!("no prediction for document `{id}`")))?;
        pairs.push((p.clone(), g));
    }
    Ok(pairs)
}

fn cmd_evaluate(a: EvaluateArgs, log: &Logger) -> Result<i32, CliError> {
    if !(a.iou > 0.0 && a.iou <= 1.0) {
        log.error(&format!("event=bad_flag iou={}", a.iou));
        return Ok(2);
    }
    let pairs = collect_pairs(&a.pred, &a.gt)?;
    let refs: Vec<(&DocumentGraph, &DocumentGraph)> =
        pairs.iter().map(|(p, g)| (p, g)).collect();
    let report = metrics::evaluate_corpus(&refs, a.iou);
    let json = to_canonical_json(&report);
    match &a.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    log.info(&format!("event=evaluate_done map={} f1={}", report.map, report.relation.f1));
    Ok(0)
}

fn cmd_query(a: QueryArgs, log: &Logger) -> Result<i32, CliError> {
    let doc = hocr::HocrDocument::parse(&read_file(&a.doc)?).map_err(msg)?;
    let hits = query::evaluate(&doc, &a.expr, a.direct).map_err(msg)?;
    let matches: Vec<query::QueryMatch> =
        hits.iter().map(|&i| query::QueryMatch::from_node(&doc, i)).collect();
    print!("{}", to_canonical_json(&matches));
    log.info(&format!("event=query_done matches={}", matches.len()));
    Ok(0)
}

fn cmd_stats(a: StatsArgs, log: &Logger) -> Result<i32, CliError> {
    let corpus = dataio::load_corpus(&a.corpus, &a.splits).map_err(msg)?;
    let stats = dataio::compute_stats(&corpus);
    let json = stats.to_canonical_json();
    match &a.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    log.info(&format!(
        "event=stats_done documents={} entities={}",
        stats.document_count, stats.entity_count
    ));
    Ok(0)
}

/// Per-page pipeline result.
struct PageOutcome {
    id: String,
    error: Option<String>,
    pred: Option<DocumentGraph>,
}

#[derive(Serialize)]
struct PipelineSummary {
    pages: usize,
    seed: u64,
    failures: Vec<PipelineFailure>,
    reports: Vec<EvalReport>,
}

#[derive(Serialize)]
struct PipelineFailure {
    id: String,
    error: String,
}

fn cmd_pipeline(a: PipelineArgs, log: &Logger) -> Result<i32, CliError> {
    let file: PipelineFile = match &a.config {
        Some(path) => serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Message(format!("{}: {e}", path.display())))?,
        None => PipelineFile::default(),
    };
    let model_path = a
        .model
        .or(file.model)
        .ok_or_else(|| CliError::Message("pipeline needs --model".into()))?;
    let input = a
        .input
        .or(file.input)
        .ok_or_else(|| CliError::Message("pipeline needs --in".into()))?;
    let out_dir = a
        .out
        .or(file.out)
        .ok_or_else(|| CliError::Message("pipeline needs --out".into()))?;
    let gt_dir = a.gt.or(file.gt);
    let words_dir = a.words.or(file.words);
    let tau = a.tau.or(file.tau);
    let thresholds = a.iou_thresholds.or(file.iou_thresholds).unwrap_or(vec![0.5, 0.75]);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let strict = a.strict_grammar || file.strict_grammar.unwrap_or(false);
    let jobs = a.jobs.or(file.jobs).unwrap_or(1).max(1);

    for t in &thresholds {
        if !(*t > 0.0 && *t <= 1.0) {
            log.error(&format!("event=bad_flag iou_threshold={t}"));
            return Ok(2);
        }
    }
    if let Some(t) = tau {
        if !(t > 0.0 && t < 1.0) {
            log.error(&format!("event=bad_flag tau={t}"));
            return Ok(2);
        }
    }

    let mut model = RelationModel::load_json(&read_file(&model_path)?).map_err(msg)?;
    if let Some(t) = tau {
        model.tau = t;
    }
    std::fs::create_dir_all(&out_dir)
        .map_err(|source| CliError::Io { path: out_dir.clone(), source })?;

    // Page ids come from the input directory listing; files that fail later
    // stages are reported but do not stop the run.
    let mut page_files: Vec<PathBuf> = std::fs::read_dir(&input)
        .map_err(|source| CliError::Io { path: input.clone(), source })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.ends_with(".json") && !name.ends_with(".words.json")
        })
        .collect();
    page_files.sort();

    let config = GrammarConfig { strict_unordered_group: strict };
    let process = |path: &PathBuf| -> PageOutcome {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let run = || -> Result<DocumentGraph, CliError> {
            let graph = DocumentGraph::from_json_str(&read_file(path)?)
                .map_err(|e| CliError::Message(format!("{}: {e}", path.display())))?;
            let refined = relhead::refine_entities(&graph, &model);
            let pred = relhead::predict_relations(&refined, &model);
            write_file(&out_dir.join(format!("{id}.pred.json")), &pred.to_canonical_json())?;
            let scores = relhead::pair_score_table(&refined, &model);
            let (tree, trace) = grammar::postprocess(&pred, Some(&scores), config);
            write_file(&out_dir.join(format!("{id}.tree.json")), &tree.to_canonical_json())?;
            write_file(&out_dir.join(format!("{id}.trace.json")), &trace.to_canonical_json())?;
            let words = match &words_dir {
                Some(dir) => {
                    let wpath = dir.join(format!("{id}.words.json"));
                    if wpath.exists() {
                        read_words(&wpath)?
                    } else {
                        Vec::new()
                    }
                }
                None => Vec::new(),
            };
            let xml = hocr::to_hocr(&tree, &words).map_err(msg)?;
            write_file(&out_dir.join(format!("{id}.hocr")), &xml)?;
            Ok(pred)
        };
        match run() {
            Ok(pred) => PageOutcome { id, error: None, pred: Some(pred) },
            Err(e) => PageOutcome { id, error: Some(e.to_string()), pred: None },
        }
    };

    let outcomes: Vec<PageOutcome> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Message(e.to_string()))?;
        pool.install(|| {
            use rayon::prelude::*;
            page_files.par_iter().map(process).collect()
        })
    } else {
        page_files.iter().map(process).collect()
    };

    let mut failures = Vec::new();
    for o in &outcomes {
        match &o.error {
            None => log.info(&format!("event=page_done id={}", o.id)),
            Some(err) => {
                log.error(&format!("event=page_failed id={} error={:?}", o.id, err));
                failures.push(PipelineFailure { id: o.id.clone(), error: err.clone() });
            }
        }
    }

    // Summary report against ground truth, per threshold, in id order.
    let mut reports = Vec::new();
    if let Some(gt) = &gt_dir {
        let mut pairs: Vec<(DocumentGraph, DocumentGraph)> = Vec::new();
        for o in &outcomes {
            let Some(pred) = &o.pred else { continue };
            let gt_path = gt.join(format!("{}.json", o.id));
            match read_file(&gt_path).and_then(|s| DocumentGraph::from_json_str(&s).map_err(msg)) {
                Ok(gt_graph) => pairs.push((pred.clone(), gt_graph)),
                Err(e) => {
                    log.error(&format!("event=gt_missing id={} error={:?}", o.id, e.to_string()));
                    failures.push(PipelineFailure { id: o.id.clone(), error: e.to_string() });
                }
            }
        }
        let refs: Vec<(&DocumentGraph, &DocumentGraph)> =
            pairs.iter().map(|(p, g)| (p, g)).collect();
        for t in &thresholds {
            reports.push(metrics::evaluate_corpus(&refs, *t));
        }
    }

    let exit = if failures.is_empty() { 0 } else { 1 };
    let summary = PipelineSummary { pages: outcomes.len(), seed, failures, reports };
    write_file(&out_dir.join("summary.json"), &to_canonical_json(&summary))?;
    log.info(&format!("event=pipeline_done pages={} exit={exit}", outcomes.len()));
    Ok(exit)
}
