//! Per-node training, the three prediction strategies and ranked output.
//!
//! A [`HierModel`] holds one binary classifier per non-root node, trained on
//! the node's leaf-descendant documents against its siblings' documents. It
//! backs both cascade prediction (greedy descent) and path-product
//! prediction, which scores every leaf by the product of the conditional
//! probabilities on its root-to-leaf path and returns the best leaf. Path
//! scores are accumulated in log space.
//!
//! A [`FlatModel`] holds one one-vs-all classifier per leaf.

use std::cmp::Ordering;

use log::warn;
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, FeatureTransform, SparseVec};
use crate::exec::{self, Execution};
use crate::hierarchy::{Hierarchy, HierarchyError, NodeId};
use crate::linear::{
    self, LabeledSet, LinearError, NodeClassifier, Sign, TrainConfig, TrainWarning,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error("the root node has no training set")]
    RootHasNoTrainingSet,
    #[error("document {0} has no label")]
    UnlabeledDocument(usize),
    #[error("document {doc} is labeled {label}, which is not a leaf of the hierarchy")]
    LabelNotLeaf { doc: usize, label: NodeId },
    #[error("model has no classifier for node {0}")]
    MissingClassifier(NodeId),
}

/// Leaf with its log score under some strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredLeaf {
    pub leaf: NodeId,
    pub log_score: f64,
}

/// Training statistics for one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeReport {
    pub node: NodeId,
    pub positives: usize,
    pub negatives: usize,
    pub iterations: usize,
    pub warning: Option<TrainWarning>,
}

#[derive(Debug, Clone)]
pub struct HierModel {
    hierarchy: Hierarchy,
    /// Indexed by hierarchy slot; `None` only at the root.
    classifiers: Vec<Option<NodeClassifier>>,
    transform: FeatureTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatModel {
    hierarchy: Hierarchy,
    /// Sorted by leaf id, one per leaf.
    leaf_classifiers: Vec<(NodeId, NodeClassifier)>,
    transform: FeatureTransform,
}

/// Checks that every document is labeled with a leaf and returns the label
/// slots in document order.
fn label_slots(h: &Hierarchy, c: &Corpus) -> Result<Vec<usize>, StrategyError> {
    if c.is_empty() {
        return Err(CorpusError::EmptyCorpus.into());
    }
    c.documents
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let label = d.label.ok_or(StrategyError::UnlabeledDocument(i))?;
            match h.slot(label) {
                Ok(s) if h.child_slots(s).is_empty() => Ok(s),
                _ => Err(StrategyError::LabelNotLeaf { doc: i, label }),
            }
        })
        .collect()
}

/// For every slot, the sorted indices of documents labeled inside its subtree.
fn documents_under(h: &Hierarchy, labels: &[usize]) -> Vec<Vec<usize>> {
    let mut under = vec![Vec::new(); h.len()];
    for (doc, &leaf) in labels.iter().enumerate() {
        under[leaf].push(doc);
    }
    for &s in h.preorder_slots().iter().rev() {
        if let Some(p) = h.parent_slot(s) {
            let mine = std::mem::take(&mut under[s]);
            under[p].extend_from_slice(&mine);
            under[s] = mine;
        }
    }
    for docs in &mut under {
        docs.sort_unstable();
    }
    under
}

/// Examples for slot `s`: its documents positive, the rest of its parent's
/// documents negative, in document order.
fn sibling_set<'a>(c: &'a Corpus, under: &[Vec<usize>], parent: usize, s: usize) -> LabeledSet<'a> {
    let mine = &under[s];
    let mut set = LabeledSet::new();
    let mut k = 0;
    for &doc in &under[parent] {
        let positive = k < mine.len() && mine[k] == doc;
        if positive {
            k += 1;
        }
        let sign = if positive { Sign::Positive } else { Sign::Negative };
        set.push(&c.documents[doc].features, sign);
    }
    set
}

/// Binary training set for node `n`: documents under `n` are positive,
/// documents under its siblings negative, everything else excluded.
pub fn node_training_set<'a>(
    h: &Hierarchy,
    c: &'a Corpus,
    n: NodeId,
) -> Result<LabeledSet<'a>, StrategyError> {
    let s = h.slot(n)?;
    let parent = h.parent_slot(s).ok_or(StrategyError::RootHasNoTrainingSet)?;
    let labels = label_slots(h, c)?;
    let under = documents_under(h, &labels);
    Ok(sibling_set(c, &under, parent, s))
}

fn fit(set: &LabeledSet<'_>, node: NodeId, cfg: &TrainConfig) -> Result<(NodeClassifier, NodeReport), StrategyError> {
    let mut report = NodeReport {
        node,
        positives: set.count(Sign::Positive),
        negatives: set.count(Sign::Negative),
        iterations: 0,
        warning: None,
    };
    if set.is_empty() {
        report.warning = Some(TrainWarning::EmptyTrainingSet);
        return Ok((NodeClassifier::zero(), report));
    }
    let out = linear::train_logistic(set, cfg)?;
    report.iterations = out.iterations;
    report.warning = out.warning;
    Ok((out.classifier, report))
}

fn log_warnings(reports: &[NodeReport]) {
    for r in reports {
        if let Some(w) = r.warning {
            warn!(
                "node {}: {:?} ({} positives, {} negatives)",
                r.node, w, r.positives, r.negatives
            );
        }
    }
}

impl HierModel {
    pub fn new(
        hierarchy: Hierarchy,
        classifiers: impl IntoIterator<Item = (NodeId, NodeClassifier)>,
        transform: FeatureTransform,
    ) -> Result<Self, StrategyError> {
        let mut slots = vec![None; hierarchy.len()];
        for (node, clf) in classifiers {
            slots[hierarchy.slot(node)?] = Some(clf);
        }
        slots[hierarchy.root_slot()] = None;
        for s in hierarchy.preorder_slots().iter().skip(1) {
            if slots[*s].is_none() {
                return Err(StrategyError::MissingClassifier(hierarchy.id_at(*s)));
            }
        }
        Ok(HierModel {
            hierarchy,
            classifiers: slots,
            transform,
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn transform(&self) -> &FeatureTransform {
        &self.transform
    }

    pub fn classifier(&self, n: NodeId) -> Option<&NodeClassifier> {
        self.hierarchy
            .slot(n)
            .ok()
            .and_then(|s| self.classifiers[s].as_ref())
    }

    /// `(node, classifier)` for every non-root node in preorder.
    pub fn classifiers(&self) -> impl Iterator<Item = (NodeId, &NodeClassifier)> + '_ {
        self.hierarchy
            .preorder_slots()
            .iter()
            .filter_map(|&s| self.classifiers[s].as_ref().map(|c| (self.hierarchy.id_at(s), c)))
    }

    pub fn num_classifiers(&self) -> usize {
        self.classifiers.iter().flatten().count()
    }

    fn log_prob(&self, slot: usize, x: &SparseVec) -> f64 {
        self.classifiers[slot]
            .as_ref()
            .expect("non-root node has a classifier")
            .log_predict_proba(x)
    }

    /// Greedy descent from the root; see [`cascade_with`].
    pub fn cascade_predict(&self, x: &SparseVec) -> NodeId {
        cascade_with(&self.hierarchy, |n| self.log_prob(self.hierarchy.slot(n).unwrap(), x))
    }

    /// Nodes visited by the greedy descent, root excluded, ending at the leaf.
    pub fn cascade_path(&self, x: &SparseVec) -> Vec<NodeId> {
        cascade_path_with(&self.hierarchy, |n| self.log_prob(self.hierarchy.slot(n).unwrap(), x))
    }

    /// Path-product log score of every leaf, ascending leaf id.
    pub fn ppath_scores(&self, x: &SparseVec) -> Vec<ScoredLeaf> {
        path_scores_slots(&self.hierarchy, |s| self.log_prob(s, x))
    }

    pub fn ppath_predict(&self, x: &SparseVec) -> NodeId {
        argmax(&self.ppath_scores(x)).expect("hierarchy has leaves")
    }

    pub fn with_transform(mut self, transform: FeatureTransform) -> Self {
        self.transform = transform;
        self
    }
}

impl PartialEq for HierModel {
    /// Same tree, same transform and the same classifier at every node id.
    fn eq(&self, other: &Self) -> bool {
        self.hierarchy == other.hierarchy
            && self.transform == other.transform
            && self
                .classifiers()
                .all(|(n, c)| other.classifier(n) == Some(c))
    }
}

impl FlatModel {
    pub fn new(
        hierarchy: Hierarchy,
        classifiers: impl IntoIterator<Item = (NodeId, NodeClassifier)>,
        transform: FeatureTransform,
    ) -> Result<Self, StrategyError> {
        let mut leaf_classifiers: Vec<(NodeId, NodeClassifier)> = classifiers.into_iter().collect();
        leaf_classifiers.sort_by_key(|(n, _)| *n);
        leaf_classifiers.dedup_by_key(|(n, _)| *n);
        for (n, _) in &leaf_classifiers {
            if !hierarchy.is_leaf(*n) {
                return Err(HierarchyError::UnknownNode(*n).into());
            }
        }
        if let Some(missing) = hierarchy
            .leaves()
            .find(|l| leaf_classifiers.binary_search_by_key(l, |(n, _)| *n).is_err())
        {
            return Err(StrategyError::MissingClassifier(missing));
        }
        Ok(FlatModel {
            hierarchy,
            leaf_classifiers,
            transform,
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn transform(&self) -> &FeatureTransform {
        &self.transform
    }

    pub fn classifiers(&self) -> impl Iterator<Item = (NodeId, &NodeClassifier)> + '_ {
        self.leaf_classifiers.iter().map(|(n, c)| (*n, c))
    }

    pub fn num_classifiers(&self) -> usize {
        self.leaf_classifiers.len()
    }

    /// Each leaf's own log probability, ascending leaf id.
    pub fn scores(&self, x: &SparseVec) -> Vec<ScoredLeaf> {
        self.leaf_classifiers
            .iter()
            .map(|(leaf, c)| ScoredLeaf {
                leaf: *leaf,
                log_score: c.log_predict_proba(x),
            })
            .collect()
    }

    /// Leaf with the highest probability, ties to the smaller id.
    pub fn flat_predict(&self, x: &SparseVec) -> NodeId {
        argmax(&self.scores(x)).expect("hierarchy has leaves")
    }

    pub fn with_transform(mut self, transform: FeatureTransform) -> Self {
        self.transform = transform;
        self
    }
}

/// Trains one classifier per non-root node on its sibling-contrast set.
pub fn train_hierarchical(h: &Hierarchy, c: &Corpus, cfg: &TrainConfig) -> Result<HierModel, StrategyError> {
    let (model, reports) = train_hierarchical_with(h, c, cfg, Execution::default())?;
    log_warnings(&reports);
    Ok(model)
}

/// [`train_hierarchical`] with explicit scheduling, also returning per-node
/// statistics in preorder.
pub fn train_hierarchical_with(
    h: &Hierarchy,
    c: &Corpus,
    cfg: &TrainConfig,
    execution: Execution,
) -> Result<(HierModel, Vec<NodeReport>), StrategyError> {
    cfg.validate()?;
    let labels = label_slots(h, c)?;
    let under = documents_under(h, &labels);
    let nodes: Vec<usize> = h.preorder_slots().iter().copied().skip(1).collect();
    let fitted = exec::map(execution, &nodes, |&s| {
        let parent = h.parent_slot(s).expect("non-root");
        let set = sibling_set(c, &under, parent, s);
        fit(&set, h.id_at(s), cfg)
    });
    let mut classifiers = vec![None; h.len()];
    let mut reports = Vec::with_capacity(nodes.len());
    for (&s, result) in nodes.iter().zip(fitted) {
        let (clf, report) = result?;
        classifiers[s] = Some(clf);
        reports.push(report);
    }
    Ok((
        HierModel {
            hierarchy: h.clone(),
            classifiers,
            transform: FeatureTransform::Tf,
        },
        reports,
    ))
}

/// Trains one one-vs-all classifier per leaf.
pub fn train_flat(h: &Hierarchy, c: &Corpus, cfg: &TrainConfig) -> Result<FlatModel, StrategyError> {
    let (model, reports) = train_flat_with(h, c, cfg, Execution::default())?;
    log_warnings(&reports);
    Ok(model)
}

pub fn train_flat_with(
    h: &Hierarchy,
    c: &Corpus,
    cfg: &TrainConfig,
    execution: Execution,
) -> Result<(FlatModel, Vec<NodeReport>), StrategyError> {
    cfg.validate()?;
    let labels = label_slots(h, c)?;
    let leaves: Vec<NodeId> = h.leaves().collect();
    let fitted = exec::map(execution, &leaves, |&leaf| {
        let target = h.slot(leaf).expect("leaf in hierarchy");
        let mut set = LabeledSet::new();
        for (d, &l) in c.documents.iter().zip(&labels) {
            let sign = if l == target { Sign::Positive } else { Sign::Negative };
            set.push(&d.features, sign);
        }
        fit(&set, leaf, cfg)
    });
    let mut leaf_classifiers = Vec::with_capacity(leaves.len());
    let mut reports = Vec::with_capacity(leaves.len());
    for (&leaf, result) in leaves.iter().zip(fitted) {
        let (clf, report) = result?;
        leaf_classifiers.push((leaf, clf));
        reports.push(report);
    }
    Ok((
        FlatModel {
            hierarchy: h.clone(),
            leaf_classifiers,
            transform: FeatureTransform::Tf,
        },
        reports,
    ))
}

/// Greedy descent: from the root, repeatedly move to the child with the
/// highest `score`, first child in stored order on ties, until a leaf.
///
/// `score` maps a non-root node to its conditional log probability (any
/// strictly increasing function of the probability works).
pub fn cascade_with(h: &Hierarchy, score: impl FnMut(NodeId) -> f64) -> NodeId {
    *cascade_path_with(h, score)
        .last()
        .unwrap_or(&h.root())
}

pub fn cascade_path_with(h: &Hierarchy, mut score: impl FnMut(NodeId) -> f64) -> Vec<NodeId> {
    let mut path = Vec::new();
    let mut cur = h.root_slot();
    loop {
        let children = h.child_slots(cur);
        let mut best: Option<(usize, f64)> = None;
        for &c in children {
            let s = score(h.id_at(c));
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        match best {
            Some((c, _)) => {
                path.push(h.id_at(c));
                cur = c;
            }
            None => return path,
        }
    }
}

/// Path-product log score of every leaf from per-node conditional log
/// probabilities, ascending leaf id.
///
/// One preorder traversal; `log_prob` is called exactly once per non-root
/// node.
pub fn path_scores_with(h: &Hierarchy, mut log_prob: impl FnMut(NodeId) -> f64) -> Vec<ScoredLeaf> {
    path_scores_slots(h, |s| log_prob(h.id_at(s)))
}

fn path_scores_slots(h: &Hierarchy, mut log_prob: impl FnMut(usize) -> f64) -> Vec<ScoredLeaf> {
    let mut out = Vec::with_capacity(h.num_leaves());
    let mut stack = vec![(h.root_slot(), 0.0f64)];
    while let Some((s, acc)) = stack.pop() {
        let children = h.child_slots(s);
        if children.is_empty() {
            out.push(ScoredLeaf {
                leaf: h.id_at(s),
                log_score: acc,
            });
        }
        for &c in children.iter().rev() {
            stack.push((c, acc + log_prob(c)));
        }
    }
    out.sort_by_key(|s| s.leaf);
    out
}

/// Descending score, ascending id on ties.
fn rank_order(a: &ScoredLeaf, b: &ScoredLeaf) -> Ordering {
    b.log_score
        .total_cmp(&a.log_score)
        .then_with(|| a.leaf.cmp(&b.leaf))
}

/// Highest-scoring leaf, smaller id on ties.
pub fn argmax(scores: &[ScoredLeaf]) -> Option<NodeId> {
    scores.iter().min_by(|a, b| rank_order(a, b)).map(|s| s.leaf)
}

/// The `min(k, len)` best leaves, descending score, smaller id on ties.
pub fn top_k(scores: &[ScoredLeaf], k: usize) -> Vec<ScoredLeaf> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(rank_order);
    ranked.truncate(k);
    ranked
}
