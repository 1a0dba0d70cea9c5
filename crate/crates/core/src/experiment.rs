//! Train-and-evaluate comparison of the three strategies on one split.

use crate::corpus::{Corpus, FeatureMode, FeatureTransform};
use crate::eval::{self, EvalError, EvalReport, RecallCurve};
use crate::exec::{self, Execution};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::linear::TrainConfig;
use crate::strategies::{self, FlatModel, HierModel, StrategyError};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("test document {0} has no gold label")]
    UnlabeledTest(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Flat,
    Cascade,
    PPath,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Flat, Strategy::Cascade, Strategy::PPath];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Flat => "flat",
            Strategy::Cascade => "cascade",
            Strategy::PPath => "ppath",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Strategy::Flat => "Flat",
            Strategy::Cascade => "Cascade",
            Strategy::PPath => "P_path",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat" => Ok(Strategy::Flat),
            "cascade" => Ok(Strategy::Cascade),
            "ppath" => Ok(Strategy::PPath),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// Predictions and rankings of every strategy on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub gold: Vec<NodeId>,
    pub flat: Vec<NodeId>,
    pub cascade: Vec<NodeId>,
    pub ppath: Vec<NodeId>,
    pub flat_report: EvalReport,
    pub cascade_report: EvalReport,
    pub ppath_report: EvalReport,
    pub flat_curve: RecallCurve,
    pub ppath_curve: RecallCurve,
}

impl Comparison {
    pub fn report(&self, s: Strategy) -> &EvalReport {
        match s {
            Strategy::Flat => &self.flat_report,
            Strategy::Cascade => &self.cascade_report,
            Strategy::PPath => &self.ppath_report,
        }
    }

    pub fn predictions(&self, s: Strategy) -> &[NodeId] {
        match s {
            Strategy::Flat => &self.flat,
            Strategy::Cascade => &self.cascade,
            Strategy::PPath => &self.ppath,
        }
    }

    /// Measures as rows, strategies as columns, `*` on the best value of
    /// each row (highest, or lowest for tree-induced error).
    pub fn table(&self) -> String {
        type Getter = fn(&EvalReport) -> f64;
        let rows: [(&str, Getter, bool); 5] = [
            ("Accuracy", |r| r.accuracy, true),
            ("Macro F-measure", |r| r.macro_f1, true),
            ("Macro Precision", |r| r.macro_precision, true),
            ("Macro Recall", |r| r.macro_recall, true),
            ("Tree Induced Error", |r| r.tree_induced_error, false),
        ];
        let mut out = format!(
            "{:<20}{:>12}{:>12}{:>12}\n",
            "Evaluation Measure", "Flat", "Cascade", "P_path"
        );
        for (name, get, higher_better) in rows {
            let vals: Vec<f64> = Strategy::ALL.iter().map(|&s| get(self.report(s))).collect();
            let best = if higher_better {
                vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            out.push_str(&format!("{name:<20}"));
            for v in vals {
                let mark = if v == best { "*" } else { " " };
                out.push_str(&format!("{:>11.3}{mark}", v));
            }
            out.push('\n');
        }
        out
    }
}

/// Trained models for one comparison.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub hierarchical: HierModel,
    pub flat: FlatModel,
}

/// Fits the feature transform on `train` and trains both models.
pub fn train_models(
    h: &Hierarchy,
    train: &Corpus,
    cfg: &TrainConfig,
    mode: FeatureMode,
    execution: Execution,
) -> Result<TrainedModels, ExperimentError> {
    let transform = FeatureTransform::fit(mode, train).map_err(StrategyError::from)?;
    let weighted = transform.apply_corpus(train);
    let (hier, _) = strategies::train_hierarchical_with(h, &weighted, cfg, execution)?;
    let (flat, _) = strategies::train_flat_with(h, &weighted, cfg, execution)?;
    Ok(TrainedModels {
        hierarchical: hier.with_transform(transform.clone()),
        flat: flat.with_transform(transform),
    })
}

/// Predicts and evaluates every strategy on a labeled test corpus.
pub fn compare(
    models: &TrainedModels,
    test: &Corpus,
    k_max: usize,
    execution: Execution,
) -> Result<Comparison, ExperimentError> {
    let h = models.hierarchical.hierarchy();
    let gold: Vec<NodeId> = test
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| d.label.ok_or(ExperimentError::UnlabeledTest(i)))
        .collect::<Result<_, _>>()?;
    let transform = models.hierarchical.transform();
    let per_doc = exec::map(execution, &test.documents, |d| {
        let x = transform.apply(d).features;
        let ppath = models.hierarchical.ppath_scores(&x);
        let flat = models.flat.scores(&x);
        let rank = |s: &[strategies::ScoredLeaf]| -> Vec<NodeId> {
            strategies::top_k(s, k_max).iter().map(|s| s.leaf).collect()
        };
        (
            strategies::argmax(&flat).expect("leaves"),
            models.hierarchical.cascade_predict(&x),
            strategies::argmax(&ppath).expect("leaves"),
            rank(&flat),
            rank(&ppath),
        )
    });
    let mut flat = Vec::with_capacity(per_doc.len());
    let mut cascade = Vec::with_capacity(per_doc.len());
    let mut ppath = Vec::with_capacity(per_doc.len());
    let mut flat_ranked = Vec::with_capacity(per_doc.len());
    let mut ppath_ranked = Vec::with_capacity(per_doc.len());
    for (f, c, p, fr, pr) in per_doc {
        flat.push(f);
        cascade.push(c);
        ppath.push(p);
        flat_ranked.push(fr);
        ppath_ranked.push(pr);
    }
    Ok(Comparison {
        flat_report: eval::evaluate(h, &gold, &flat)?,
        cascade_report: eval::evaluate(h, &gold, &cascade)?,
        ppath_report: eval::evaluate(h, &gold, &ppath)?,
        flat_curve: eval::recall_at_k(&gold, &flat_ranked, k_max)?,
        ppath_curve: eval::recall_at_k(&gold, &ppath_ranked, k_max)?,
        gold,
        flat,
        cascade,
        ppath,
    })
}

/// [`train_models`] followed by [`compare`].
pub fn run(
    h: &Hierarchy,
    train: &Corpus,
    test: &Corpus,
    cfg: &TrainConfig,
    mode: FeatureMode,
    k_max: usize,
    execution: Execution,
) -> Result<Comparison, ExperimentError> {
    let models = train_models(h, train, cfg, mode, execution)?;
    compare(&models, test, k_max, execution)
}
