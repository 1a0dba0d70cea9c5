//! Hierarchical single-label classification over a tree of per-node
//! L2-regularized logistic classifiers.
//!
//! Three strategies share the same per-node training machinery:
//!
//! * flat: one one-vs-all classifier per leaf, predict the most probable leaf;
//! * cascade: greedy root-to-leaf descent through the most probable child;
//! * path product: score every leaf by the product of the conditional
//!   probabilities along its root-to-leaf path and predict the best leaf.
//!
//! Batch work (per-node training, per-document scoring) runs on rayon when
//! the `parallel` feature is enabled (the default) and sequentially
//! otherwise; see [`exec::Execution`].

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod hierarchy;
pub mod linear;
pub mod model;
pub mod strategies;
pub mod synth;

pub use corpus::{Corpus, Document, FeatureMode, FeatureTransform, IdfTable, SparseVec};
pub use eval::{evaluate, recall_at_k, EvalReport, RecallCurve};
pub use exec::Execution;
pub use hierarchy::{Hierarchy, NodeId};
pub use linear::{train_logistic, LabeledSet, NodeClassifier, Sign, TrainConfig};
pub use model::Model;
pub use strategies::{
    node_training_set, top_k, train_flat, train_hierarchical, FlatModel, HierModel, ScoredLeaf,
};
pub use synth::{SynthConfig, SynthData};
