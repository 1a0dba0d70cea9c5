//! `hierclass` command line: train, predict, evaluate, bench, synth.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::corpus::{Corpus, FeatureMode, FeatureTransform};
use crate::eval::{self, REPORT_CSV_HEADER};
use crate::exec::{self, Execution};
use crate::experiment::{self, ExperimentError, Strategy};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::linear::{LinearError, TrainConfig};
use crate::model::{Model, ModelFormatError};
use crate::strategies::{self, NodeReport, StrategyError};
use crate::synth::SynthConfig;

#[derive(Debug, Parser)]
#[command(name = "hierclass", version, about = "Hierarchical text classification: flat, cascade and path-product strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a flat or hierarchical model and write it to --model.
    Train(TrainArgs),
    /// Predict a leaf (and optionally a ranked top-K) for each test document.
    Predict(PredictArgs),
    /// Score a predictions file against the test corpus' gold labels.
    Evaluate(EvaluateArgs),
    /// Train all three strategies and compare them on a test set.
    Bench(BenchArgs),
    /// Generate a synthetic hierarchy with train and test corpora.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainingOptions {
    /// Inverse regularization strength.
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Feature weighting: tf or tfidf.
    #[arg(long = "features", default_value = "tfidf")]
    pub features: FeatureMode,
}

impl TrainingOptions {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            c: self.c,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// flat trains per-leaf one-vs-all classifiers; cascade and ppath share
    /// one per-node hierarchical model.
    #[arg(long, default_value = "ppath")]
    pub strategy: Strategy,
    #[command(flatten)]
    pub training: TrainingOptions,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to ppath for hierarchical models and flat for flat models.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Ranked leaves per line (flat and ppath only).
    #[arg(long, default_value_t = 1)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Labeled test corpus providing gold leaves.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the report as a CSV header and row instead of key=value lines.
    #[arg(long)]
    pub csv: bool,
    /// Also compute recall@K for K = 1..k-max from the ranked columns.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Where to write the recall curve CSV.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Output directory for table.txt, report.csv and recall curves.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[command(flatten)]
    pub training: TrainingOptions,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for hierarchy.txt, train.txt and test.txt.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 4)]
    pub branching: usize,
    #[arg(long, default_value_t = 50)]
    pub docs_per_leaf: usize,
    #[arg(long, default_value_t = 20)]
    pub test_docs_per_leaf: usize,
    #[arg(long, default_value_t = 20)]
    pub features_per_node: usize,
    #[arg(long, default_value_t = 6)]
    pub doc_length: usize,
    #[arg(long, default_value_t = 0.8)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Linear(LinearError::NonFiniteLoss(_)) => CliError::Numeric(e.to_string()),
            StrategyError::Linear(LinearError::InvalidConfig(_)) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Strategy(s) => s.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelFormatError> for CliError {
    fn from(e: ModelFormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn read_hierarchy(path: &Path) -> Result<Hierarchy, CliError> {
    Hierarchy::parse(read_lines(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    Corpus::parse(read_lines(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    run(cli.command)
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn training_summary(reports: &[NodeReport]) -> String {
    let mut out = String::from("node\tpositives\tnegatives\titerations\twarning\n");
    for r in reports {
        let warning = r.warning.map(|w| format!("{w:?}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.node, r.positives, r.negatives, r.iterations, warning
        );
    }
    out
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let cfg = a.training.config();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let h = read_hierarchy(&a.hierarchy)?;
    let raw = read_corpus(&a.train)?;
    let transform = FeatureTransform::fit(a.training.features, &raw)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.train.display())))?;
    let train = transform.apply_corpus(&raw);
    let execution = Execution::default();
    let (model, reports) = match a.strategy {
        Strategy::Flat => {
            let (m, r) = strategies::train_flat_with(&h, &train, &cfg, execution)?;
            (Model::Flat(m.with_transform(transform)), r)
        }
        Strategy::Cascade | Strategy::PPath => {
            let (m, r) = strategies::train_hierarchical_with(&h, &train, &cfg, execution)?;
            (Model::Hierarchical(m.with_transform(transform)), r)
        }
    };
    for r in &reports {
        if let Some(w) = r.warning {
            eprintln!("warning: node {}: {w:?}", r.node);
        }
    }
    write_file(&a.model, &model.to_text())?;
    print!("{}", training_summary(&reports));
    Ok(())
}

/// Formats one prediction line: the predicted leaf, then ranks 2..=k as
/// `leaf:log_score`.
fn prediction_line(ranked: &[strategies::ScoredLeaf]) -> String {
    let mut line = ranked[0].leaf.to_string();
    for s in &ranked[1..] {
        let _ = write!(line, " {}:{:.16e}", s.leaf, s.log_score);
    }
    line
}

pub fn predict_lines(model: &Model, strategy: Strategy, test: &Corpus, k_max: usize) -> Result<Vec<String>, CliError> {
    if k_max == 0 {
        return Err(CliError::Usage("--k-max must be at least 1".into()));
    }
    match (model, strategy) {
        (Model::Hierarchical(_), Strategy::Flat) | (Model::Flat(_), Strategy::Cascade | Strategy::PPath) => {
            return Err(CliError::Usage(format!(
                "model strategy mismatch: a {} model cannot predict with {}",
                model.kind(),
                strategy.as_str()
            )))
        }
        (_, Strategy::Cascade) if k_max > 1 => {
            return Err(CliError::Usage(
                "model strategy mismatch: cascade has no ranking beyond its greedy path; use --k-max 1".into(),
            ))
        }
        _ => {}
    }
    let transform = model.transform();
    Ok(exec::map(Execution::default(), &test.documents, |d| {
        let x = transform.apply(d).features;
        match (model, strategy) {
            (Model::Hierarchical(m), Strategy::Cascade) => m.cascade_predict(&x).to_string(),
            (Model::Hierarchical(m), _) => prediction_line(&strategies::top_k(&m.ppath_scores(&x), k_max)),
            (Model::Flat(m), _) => prediction_line(&strategies::top_k(&m.scores(&x), k_max)),
        }
    }))
}

pub fn cmd_predict(a: &PredictArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.model)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.model.display())))?;
    let model = Model::from_text(&text)?;
    let strategy = a.strategy.unwrap_or(match model {
        Model::Hierarchical(_) => Strategy::PPath,
        Model::Flat(_) => Strategy::Flat,
    });
    let test = read_corpus(&a.test)?;
    let mut out = String::new();
    for line in predict_lines(&model, strategy, &test, a.k_max)? {
        out.push_str(&line);
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)
}

/// Reads a predictions file: each line's leaves in rank order.
pub fn parse_predictions(lines: &[String]) -> Result<Vec<Vec<NodeId>>, CliError> {
    lines
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|tok| {
                    let id = tok.split_once(':').map_or(tok, |(id, _)| id);
                    id.parse::<NodeId>()
                        .map_err(|_| CliError::Data(format!("predictions line {}: bad leaf {tok:?}", i + 1)))
                })
                .collect()
        })
        .collect()
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let h = read_hierarchy(&a.hierarchy)?;
    let test = read_corpus(&a.test)?;
    let ranked = parse_predictions(&read_lines(&a.predictions)?)?;
    let gold: Vec<NodeId> = test
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| d.label.ok_or_else(|| CliError::Data(format!("test document {} has no label", i + 1))))
        .collect::<Result<_, _>>()?;
    let predicted: Vec<NodeId> = ranked.iter().map(|r| r[0]).collect();
    let report = eval::evaluate(&h, &gold, &predicted).map_err(|e| CliError::Data(e.to_string()))?;
    let text = if a.csv {
        format!("{REPORT_CSV_HEADER}\n{}\n", report.to_csv_row("predictions"))
    } else {
        report.to_key_values()
    };
    emit(a.out.as_deref(), &text)?;
    if let Some(k) = a.k_max.or(a.curve_out.as_ref().map(|_| 1)) {
        let curve = eval::recall_at_k(&gold, &ranked, k).map_err(|e| CliError::Usage(e.to_string()))?;
        match &a.curve_out {
            Some(p) => write_file(p, &curve.to_csv())?,
            None => print!("{}", curve.to_csv()),
        }
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let cfg = a.training.config();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if a.k_max == 0 {
        return Err(CliError::Usage("--k-max must be at least 1".into()));
    }
    let h = read_hierarchy(&a.hierarchy)?;
    let train = read_corpus(&a.train)?;
    let test = read_corpus(&a.test)?;
    let cmp = experiment::run(&h, &train, &test, &cfg, a.training.features, a.k_max, Execution::default())?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::Data(format!("{}: {e}", a.out.display())))?;
    let table = cmp.table();
    write_file(&a.out.join("table.txt"), &table)?;
    let mut csv = format!("{REPORT_CSV_HEADER}\n");
    for s in Strategy::ALL {
        csv.push_str(&cmp.report(s).to_csv_row(s.as_str()));
        csv.push('\n');
    }
    write_file(&a.out.join("report.csv"), &csv)?;
    write_file(&a.out.join("recall_flat.csv"), &cmp.flat_curve.to_csv())?;
    write_file(&a.out.join("recall_ppath.csv"), &cmp.ppath_curve.to_csv())?;
    print!("{table}");
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        depth: a.depth,
        branching: a.branching,
        docs_per_leaf: a.docs_per_leaf,
        test_docs_per_leaf: a.test_docs_per_leaf,
        features_per_node: a.features_per_node,
        doc_length: a.doc_length,
        noise: a.noise,
        seed: a.seed,
    };
    let data = cfg.generate().map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::Data(format!("{}: {e}", a.out.display())))?;
    let join = |lines: Vec<String>| {
        let mut s = lines.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    };
    let docs = |c: &Corpus| join(c.documents.iter().map(|d| d.to_string()).collect());
    write_file(&a.out.join("hierarchy.txt"), &join(data.hierarchy.to_lines()))?;
    write_file(&a.out.join("train.txt"), &docs(&data.train))?;
    write_file(&a.out.join("test.txt"), &docs(&data.test))?;
    println!(
        "{} nodes, {} leaves, {} train and {} test documents written to {}",
        data.hierarchy.len(),
        data.hierarchy.num_leaves(),
        data.train.len(),
        data.test.len(),
        a.out.display()
    );
    Ok(())
}
