//! Text serialization for trained models.
//!
//! ```text
//! hierclass-model 1
//! kind hierarchical            (or: flat)
//! features tfidf               (or: tf)
//! hierarchy <edge count>
//! <parent> <child>
//! ...
//! idf <documents> <feature count> <entries>   (tfidf only)
//! <feature>:<document frequency>
//! ...
//! classifiers <count>
//! node <id> bias <float>
//! <feature>:<weight>
//! ...
//! ```
//!
//! Floats are written with 17 significant digits so a load reproduces every
//! bit.

use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{FeatureTransform, IdfTable, SparseVec};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::linear::NodeClassifier;
use crate::strategies::{FlatModel, HierModel, StrategyError};

pub const FORMAT_HEADER: &str = "hierclass-model 1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelFormatError {
    #[error("model line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("model file ended early: expected {0}")]
    Truncated(&'static str),
    #[error("invalid model: {0}")]
    Invalid(#[from] StrategyError),
}

/// Either kind of trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hierarchical(HierModel),
    Flat(FlatModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Hierarchical(_) => "hierarchical",
            Model::Flat(_) => "flat",
        }
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        match self {
            Model::Hierarchical(m) => m.hierarchy(),
            Model::Flat(m) => m.hierarchy(),
        }
    }

    pub fn transform(&self) -> &FeatureTransform {
        match self {
            Model::Hierarchical(m) => m.transform(),
            Model::Flat(m) => m.transform(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let h = self.hierarchy();
        let edges = h.to_lines();
        let _ = writeln!(out, "{FORMAT_HEADER}");
        let _ = writeln!(out, "kind {}", self.kind());
        let _ = writeln!(out, "features {}", self.transform().mode().as_str());
        let _ = writeln!(out, "hierarchy {}", edges.len());
        for e in edges {
            out.push_str(&e);
            out.push('\n');
        }
        if let FeatureTransform::TfIdf(idf) = self.transform() {
            let entries: Vec<_> = idf
                .doc_frequency()
                .iter()
                .enumerate()
                .filter(|(_, &df)| df > 0)
                .collect();
            let _ = writeln!(
                out,
                "idf {} {} {}",
                idf.num_documents(),
                idf.doc_frequency().len(),
                entries.len()
            );
            for (f, df) in entries {
                let _ = writeln!(out, "{f}:{df}");
            }
        }
        let classifiers: Vec<(NodeId, &NodeClassifier)> = match self {
            Model::Hierarchical(m) => m.classifiers().collect(),
            Model::Flat(m) => m.classifiers().collect(),
        };
        let _ = writeln!(out, "classifiers {}", classifiers.len());
        for (node, clf) in classifiers {
            let _ = writeln!(out, "node {node} bias {:.16e}", clf.bias());
            for (f, w) in clf.weights().iter() {
                let _ = writeln!(out, "{f}:{w:.16e}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelFormatError> {
        let mut lines = Lines {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        };

        let header = lines.next("format header")?;
        if header != FORMAT_HEADER {
            return Err(lines.error(format!("expected {FORMAT_HEADER:?}")));
        }
        let kind = lines.keyword("kind")?.to_string();
        let features = lines.keyword("features")?.to_string();
        let rest = lines.keyword("hierarchy")?;
        let edge_count: usize = lines.number(rest)?;
        let mut edge_lines = Vec::with_capacity(edge_count);
        for _ in 0..edge_count {
            edge_lines.push(lines.next("hierarchy edge")?);
        }
        let hierarchy = Hierarchy::parse(&edge_lines).map_err(|e| lines.error(e.to_string()))?;

        let transform = match features.as_str() {
            "tf" => FeatureTransform::Tf,
            "tfidf" => {
                let rest = lines.keyword("idf")?;
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(lines.error("expected \"idf <documents> <features> <entries>\"".into()));
                }
                let n_docs: u64 = lines.number(fields[0])?;
                let n_features: usize = lines.number(fields[1])?;
                let entries: usize = lines.number(fields[2])?;
                let mut df = vec![0u32; n_features];
                for _ in 0..entries {
                    let line = lines.next("idf entry")?;
                    let (f, v) = lines.pair(line)?;
                    let f: usize = lines.number(f)?;
                    let slot = df
                        .get_mut(f)
                        .ok_or_else(|| lines.error(format!("feature {f} out of range")))?;
                    *slot = lines.number(v)?;
                }
                FeatureTransform::TfIdf(
                    IdfTable::new(n_docs, df).map_err(|e| lines.error(e.to_string()))?,
                )
            }
            other => return Err(lines.error(format!("unknown feature mode {other:?}"))),
        };

        let rest = lines.keyword("classifiers")?;
        let count: usize = lines.number(rest)?;
        let mut classifiers = Vec::with_capacity(count);
        for _ in 0..count {
            let head = lines.keyword("node")?;
            let (id, bias) = head
                .split_once(" bias ")
                .ok_or_else(|| lines.error("expected \"node <id> bias <float>\"".into()))?;
            let node: NodeId = NodeId(lines.number(id)?);
            let bias: f64 = lines.number(bias)?;
            let mut weights = Vec::new();
            while let Some(line) = lines.peek_weight() {
                let (f, w) = lines.pair(line)?;
                let f: u32 = lines.number(f)?;
                if weights.last().is_some_and(|&(last, _)| last >= f) {
                    return Err(lines.error("weight feature ids must increase".into()));
                }
                weights.push((f, lines.number(w)?));
            }
            let clf = NodeClassifier::new(SparseVec::from_sorted(weights), bias)
                .map_err(|e| lines.error(e.to_string()))?;
            classifiers.push((node, clf));
        }
        if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
            return Err(ModelFormatError::Syntax {
                line: i + 1,
                message: format!("unexpected trailing content {extra:?}"),
            });
        }

        Ok(match kind.as_str() {
            "hierarchical" => Model::Hierarchical(HierModel::new(hierarchy, classifiers, transform)?),
            "flat" => Model::Flat(FlatModel::new(hierarchy, classifiers, transform)?),
            other => {
                return Err(ModelFormatError::Syntax {
                    line: 2,
                    message: format!("unknown model kind {other:?}"),
                })
            }
        })
    }
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: std::iter::Peekable<I>,
    last: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn error(&self, message: String) -> ModelFormatError {
        ModelFormatError::Syntax {
            line: self.last,
            message,
        }
    }

    fn next(&mut self, what: &'static str) -> Result<&'a str, ModelFormatError> {
        let (i, line) = self.inner.next().ok_or(ModelFormatError::Truncated(what))?;
        self.last = i + 1;
        Ok(line.trim_end_matches('\r'))
    }

    /// Next line, which must start with `key `; returns the remainder.
    fn keyword(&mut self, key: &'static str) -> Result<&'a str, ModelFormatError> {
        let line = self.next(key)?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::trim)
            .ok_or_else(|| self.error(format!("expected \"{key} ...\"")))
    }

    /// Consumes the next line if it is a `feature:weight` entry.
    fn peek_weight(&mut self) -> Option<&'a str> {
        let (_, line) = self.inner.peek()?;
        if line.contains(':') && !line.starts_with("node ") {
            self.next("weight").ok()
        } else {
            None
        }
    }

    fn pair(&self, line: &'a str) -> Result<(&'a str, &'a str), ModelFormatError> {
        line.trim()
            .split_once(':')
            .ok_or_else(|| self.error("expected \"<feature>:<value>\"".into()))
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T, ModelFormatError> {
        s.trim()
            .parse()
            .map_err(|_| self.error(format!("cannot parse {:?}", s.trim())))
    }
}
