//! Accuracy, macro precision/recall/F1, tree-induced error and recall@K.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::hierarchy::{Hierarchy, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{gold} gold labels but {predicted} predictions")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("{0} is not a leaf of the hierarchy")]
    NonLeafLabel(NodeId),
    #[error("k_max must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Mean edge distance between gold and predicted leaves.
    pub tree_induced_error: f64,
    pub n_test: usize,
}

/// Per-class counts behind the macro measures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts for every leaf appearing in `gold` or `predicted`.
pub fn class_counts(gold: &[NodeId], predicted: &[NodeId]) -> BTreeMap<NodeId, ClassCounts> {
    let mut counts: BTreeMap<NodeId, ClassCounts> = BTreeMap::new();
    for (&g, &p) in gold.iter().zip(predicted) {
        if g == p {
            counts.entry(g).or_default().true_positives += 1;
        } else {
            counts.entry(g).or_default().false_negatives += 1;
            counts.entry(p).or_default().false_positives += 1;
        }
    }
    counts
}

/// Scores single-label predictions against gold leaves.
///
/// Macro averages run over the leaves that occur in gold or predicted
/// labels, with 0/0 taken as 0.
pub fn evaluate(h: &Hierarchy, gold: &[NodeId], predicted: &[NodeId]) -> Result<EvalReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut distance = 0usize;
    for (&g, &p) in gold.iter().zip(predicted) {
        for n in [g, p] {
            if !h.is_leaf(n) {
                return Err(EvalError::NonLeafLabel(n));
            }
        }
        distance += h.tree_distance(g, p).expect("leaves belong to the hierarchy");
    }
    let n = gold.len() as f64;
    let correct = gold.iter().zip(predicted).filter(|(g, p)| g == p).count();
    let counts = class_counts(gold, predicted);
    let k = counts.len() as f64;
    let mean = |f: fn(&ClassCounts) -> f64| counts.values().map(f).sum::<f64>() / k;
    Ok(EvalReport {
        accuracy: correct as f64 / n,
        macro_precision: mean(ClassCounts::precision),
        macro_recall: mean(ClassCounts::recall),
        macro_f1: mean(ClassCounts::f1),
        tree_induced_error: distance as f64 / n,
        n_test: gold.len(),
    })
}

/// Recall of the first `k` ranked leaves for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallCurve {
    pub points: Vec<(usize, f64)>,
}

impl RecallCurve {
    pub fn at(&self, k: usize) -> Option<f64> {
        self.points.iter().find(|(kk, _)| *kk == k).map(|(_, r)| *r)
    }

    /// Two-column CSV with header `k,recall`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,recall\n");
        for (k, r) in &self.points {
            let _ = writeln!(out, "{k},{r}");
        }
        out
    }
}

/// Fraction of instances whose gold leaf is among the first `k` entries of
/// its ranking, for each `k` in `1..=k_max`.
pub fn recall_at_k<L: AsRef<[NodeId]>>(
    gold: &[NodeId],
    ranked: &[L],
    k_max: usize,
) -> Result<RecallCurve, EvalError> {
    if gold.len() != ranked.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            predicted: ranked.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    if k_max == 0 {
        return Err(EvalError::InvalidK);
    }
    // hits[k] = instances whose gold first appears at rank k (0-based)
    let mut hits = vec![0usize; k_max];
    for (g, list) in gold.iter().zip(ranked) {
        if let Some(pos) = list.as_ref().iter().take(k_max).position(|n| n == g) {
            hits[pos] += 1;
        }
    }
    let n = gold.len() as f64;
    let mut cumulative = 0;
    let points = hits
        .iter()
        .enumerate()
        .map(|(i, h)| {
            cumulative += h;
            (i + 1, cumulative as f64 / n)
        })
        .collect();
    Ok(RecallCurve { points })
}

pub const REPORT_CSV_HEADER: &str =
    "strategy,accuracy,macro_f1,macro_precision,macro_recall,tree_induced_error,n_test";

impl EvalReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "accuracy={}\nmacro_f1={}\nmacro_precision={}\nmacro_recall={}\ntree_induced_error={}\nn_test={}\n",
            self.accuracy,
            self.macro_f1,
            self.macro_precision,
            self.macro_recall,
            self.tree_induced_error,
            self.n_test
        )
    }

    /// One CSV row matching [`REPORT_CSV_HEADER`].
    pub fn to_csv_row(&self, strategy: &str) -> String {
        format!(
            "{strategy},{},{},{},{},{},{}",
            self.accuracy,
            self.macro_f1,
            self.macro_precision,
            self.macro_recall,
            self.tree_induced_error,
            self.n_test
        )
    }
}
