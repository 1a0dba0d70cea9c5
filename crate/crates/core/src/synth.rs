//! Synthetic hierarchical corpora for desk-scale benchmarking.
//!
//! Builds a complete `branching`-ary tree of the given depth. Every non-root
//! node owns a disjoint block of characteristic feature ids, the first of
//! which is its signature. A document for leaf `L` has one token per level
//! from the block of its path node, followed by free tokens drawn from random
//! blocks on `L`'s root-to-leaf path. The per-level token is the signature
//! unless noise strikes, in which case it is a random feature of the same
//! block; a free token hit by noise comes from a uniformly chosen node at the
//! same level instead, which blurs neighbouring classes. Without noise every
//! document carries the signatures of its whole path.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Corpus, Document, SparseVec};
use crate::hierarchy::{Hierarchy, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic data parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub depth: usize,
    pub branching: usize,
    pub docs_per_leaf: usize,
    pub test_docs_per_leaf: usize,
    /// Size of each node's characteristic feature block.
    pub features_per_node: usize,
    /// Tokens per document; must be at least `depth`.
    pub doc_length: usize,
    /// Probability that a token is drawn from a random node at its level.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            depth: 3,
            branching: 4,
            docs_per_leaf: 50,
            test_docs_per_leaf: 20,
            features_per_node: 20,
            doc_length: 6,
            noise: 0.8,
            seed: 1,
        }
    }
}

/// Generated hierarchy with train and test corpora of raw term counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub hierarchy: Hierarchy,
    pub train: Corpus,
    pub test: Corpus,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidParameters(msg.to_string()));
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        if self.branching == 0 {
            return bad("branching must be at least 1");
        }
        if self.docs_per_leaf == 0 {
            return bad("docs_per_leaf must be at least 1");
        }
        if self.features_per_node == 0 {
            return bad("features_per_node must be at least 1");
        }
        if self.doc_length < self.depth {
            return bad("doc_length must be at least depth");
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1]");
        }
        let nodes = self.node_count().ok_or_else(|| {
            SynthError::InvalidParameters("tree is too large".to_string())
        })?;
        if nodes.checked_mul(self.features_per_node).is_none_or(|f| f > u32::MAX as usize) {
            return bad("feature space is too large");
        }
        Ok(())
    }

    fn node_count(&self) -> Option<usize> {
        let mut total: usize = 1;
        let mut level: usize = 1;
        for _ in 0..self.depth {
            level = level.checked_mul(self.branching)?;
            total = total.checked_add(level)?;
        }
        (total <= u32::MAX as usize).then_some(total)
    }

    pub fn generate(&self) -> Result<SynthData, SynthError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        // Breadth-first numbering: level d holds ids [first[d], first[d] + b^d).
        let b = self.branching;
        let mut first = vec![0usize; self.depth + 1];
        let mut width = vec![1usize; self.depth + 1];
        for d in 1..=self.depth {
            first[d] = first[d - 1] + width[d - 1];
            width[d] = width[d - 1] * b;
        }
        let mut edges = Vec::new();
        for d in 0..self.depth {
            for i in 0..width[d] {
                for j in 0..b {
                    edges.push((NodeId((first[d] + i) as u32), NodeId((first[d + 1] + i * b + j) as u32)));
                }
            }
        }
        let hierarchy = Hierarchy::from_pairs(edges).expect("complete tree is valid");

        let leaves = width[self.depth];
        let fpn = self.features_per_node;
        // Feature block of node `id` (id >= 1) starts at (id - 1) * fpn.
        let document = |rng: &mut ChaCha8Rng, leaf_index: usize| -> Document {
            let mut path = vec![0usize; self.depth + 1];
            let mut idx = leaf_index;
            for d in (1..=self.depth).rev() {
                path[d] = first[d] + idx;
                idx /= b;
            }
            let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
            for t in 0..self.doc_length {
                // one signature token per level, then free tokens
                let signature = t < self.depth;
                let level = if signature {
                    t + 1
                } else {
                    rng.random_range(1..=self.depth)
                };
                let noisy = rng.random_bool(self.noise);
                let node = if noisy && !signature {
                    first[level] + rng.random_range(0..width[level])
                } else {
                    path[level]
                };
                let offset = if signature && !noisy { 0 } else { rng.random_range(0..fpn) };
                let feature = (node - 1) * fpn + offset;
                *counts.entry(feature as u32).or_default() += 1.0;
            }
            Document::new(
                SparseVec::from_sorted(counts),
                Some(NodeId(path[self.depth] as u32)),
            )
        };

        let mut train = Vec::with_capacity(leaves * self.docs_per_leaf);
        for leaf in 0..leaves {
            for _ in 0..self.docs_per_leaf {
                train.push(document(&mut rng, leaf));
            }
        }
        let mut test = Vec::with_capacity(leaves * self.test_docs_per_leaf);
        for leaf in 0..leaves {
            for _ in 0..self.test_docs_per_leaf {
                test.push(document(&mut rng, leaf));
            }
        }
        Ok(SynthData {
            hierarchy,
            train: Corpus::from_documents(train),
            test: Corpus::from_documents(test),
        })
    }
}
