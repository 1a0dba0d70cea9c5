//! Sparse labeled documents and the TF to TF-IDF transform.
//!
//! Corpus lines look like `label f1:v1 f2:v2 ...` with strictly increasing
//! feature ids and non-negative integer term counts. The label token may be
//! omitted for unlabeled documents.

use std::fmt;

use thiserror::Error;

use crate::hierarchy::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {0}: malformed document")]
    MalformedLine(usize),
    #[error("line {0}: feature ids must be strictly increasing")]
    NonMonotoneFeatureIds(usize),
    #[error("line {0}: negative feature value")]
    NegativeValue(usize),
    #[error("corpus has no documents")]
    EmptyCorpus,
}

/// Sparse vector with sorted, unique indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVec {
    /// Builds from `(index, value)` pairs. Panics unless indices are strictly
    /// increasing.
    pub fn from_sorted(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let (indices, values): (Vec<u32>, Vec<f64>) = pairs.into_iter().unzip();
        assert!(
            indices.windows(2).all(|w| w[0] < w[1]),
            "sparse indices must be strictly increasing"
        );
        SparseVec { indices, values }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, index: u32) -> Option<f64> {
        self.indices
            .binary_search(&index)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product with a dense vector; indices past its end contribute zero.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .filter_map(|(i, v)| dense.get(i as usize).map(|w| w * v))
            .sum()
    }

    /// Dot product of two sparse vectors (merge join).
    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub features: SparseVec,
    pub label: Option<NodeId>,
}

impl Document {
    pub fn new(features: SparseVec, label: Option<NodeId>) -> Self {
        Document { features, label }
    }

    /// Parses one corpus line. `line_no` is 1-based and only used in errors.
    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, CorpusError> {
        let mut tokens = line.split_whitespace().peekable();
        let label = match tokens.peek() {
            Some(t) if !t.contains(':') => {
                let t = tokens.next().unwrap();
                Some(
                    t.parse::<NodeId>()
                        .map_err(|_| CorpusError::MalformedLine(line_no))?,
                )
            }
            _ => None,
        };
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (f, v) = tok
                .split_once(':')
                .ok_or(CorpusError::MalformedLine(line_no))?;
            let f: u32 = f.parse().map_err(|_| CorpusError::MalformedLine(line_no))?;
            let v: i64 = v.parse().map_err(|_| CorpusError::MalformedLine(line_no))?;
            if v < 0 {
                return Err(CorpusError::NegativeValue(line_no));
            }
            if indices.last().is_some_and(|&last| last >= f) {
                return Err(CorpusError::NonMonotoneFeatureIds(line_no));
            }
            indices.push(f);
            values.push(v as f64);
        }
        Ok(Document {
            features: SparseVec { indices, values },
            label,
        })
    }
}

impl fmt::Display for Document {
    /// Writes the document in corpus-line form. Values print in shortest
    /// round-trip form, so raw counts come out as integers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if let Some(l) = self.label {
            write!(f, "{l}")?;
            first = false;
        }
        for (i, v) in self.features.iter() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{i}:{v}")?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Max feature id + 1, or 0 for an empty corpus.
    pub num_features: usize,
    /// Number of documents containing each feature with a nonzero count,
    /// indexed by feature id.
    pub doc_frequency: Vec<u32>,
}

impl Corpus {
    pub fn from_documents(documents: Vec<Document>) -> Self {
        let num_features = documents
            .iter()
            .filter_map(|d| d.features.indices().last())
            .map(|&f| f as usize + 1)
            .max()
            .unwrap_or(0);
        let mut doc_frequency = vec![0u32; num_features];
        for d in &documents {
            for (f, v) in d.features.iter() {
                if v != 0.0 {
                    doc_frequency[f as usize] += 1;
                }
            }
        }
        Corpus {
            documents,
            num_features,
            doc_frequency,
        }
    }

    /// Parses corpus lines; blank lines are skipped but still count toward
    /// line numbers in errors.
    pub fn parse<I, S>(lines: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut documents = Vec::new();
        for (i, line) in lines.into_iter().enumerate() {
            let line = line.as_ref().trim();
            if line.is_empty() {
                continue;
            }
            documents.push(Document::parse_line(line, i + 1)?);
        }
        Ok(Self::from_documents(documents))
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc_frequency(&self, feature: u32) -> u32 {
        self.doc_frequency
            .get(feature as usize)
            .copied()
            .unwrap_or(0)
    }

    /// Reweights with `v * ln(N/df)` and L2-normalizes each document.
    ///
    /// The returned corpus keeps the input's `doc_frequency`, so
    /// [`IdfTable::from_corpus`] on either gives the same table.
    pub fn tfidf_transform(&self) -> Result<Corpus, CorpusError> {
        let idf = IdfTable::from_corpus(self)?;
        Ok(Corpus {
            documents: crate::exec::map(crate::exec::Execution::default(), &self.documents, |d| {
                idf.apply(d)
            }),
            num_features: self.num_features,
            doc_frequency: self.doc_frequency.clone(),
        })
    }
}

/// Inverse document frequencies learned from a training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    num_documents: u64,
    doc_frequency: Vec<u32>,
    idf: Vec<f64>,
}

impl IdfTable {
    pub fn from_corpus(c: &Corpus) -> Result<Self, CorpusError> {
        Self::new(c.len() as u64, c.doc_frequency.clone())
    }

    pub fn new(num_documents: u64, doc_frequency: Vec<u32>) -> Result<Self, CorpusError> {
        if num_documents == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        let n = num_documents as f64;
        let idf = doc_frequency
            .iter()
            .map(|&df| if df == 0 { 0.0 } else { (n / df as f64).ln() })
            .collect();
        Ok(IdfTable {
            num_documents,
            doc_frequency,
            idf,
        })
    }

    pub fn num_documents(&self) -> u64 {
        self.num_documents
    }

    pub fn doc_frequency(&self) -> &[u32] {
        &self.doc_frequency
    }

    /// Idf of `feature`; zero for features never seen in training.
    pub fn idf(&self, feature: u32) -> f64 {
        self.idf.get(feature as usize).copied().unwrap_or(0.0)
    }

    /// TF-IDF weights for one document, unit L2 norm unless all weights are
    /// zero. Zero-weight features are dropped from the sparse pattern.
    pub fn apply(&self, d: &Document) -> Document {
        let mut weighted: Vec<(u32, f64)> = d
            .features
            .iter()
            .map(|(f, v)| (f, v * self.idf(f)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut weighted {
                *w /= norm;
            }
        }
        Document {
            features: SparseVec::from_sorted(weighted),
            label: d.label,
        }
    }
}

/// Feature weighting applied before training and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FeatureMode {
    /// Raw term counts.
    Tf,
    #[default]
    TfIdf,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Tf => "tf",
            FeatureMode::TfIdf => "tfidf",
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tf" => Ok(FeatureMode::Tf),
            "tfidf" => Ok(FeatureMode::TfIdf),
            other => Err(format!("unknown feature mode {other:?}")),
        }
    }
}

/// A fitted feature mode: identity for TF, a stored idf table for TF-IDF.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureTransform {
    Tf,
    TfIdf(IdfTable),
}

impl FeatureTransform {
    pub fn fit(mode: FeatureMode, train: &Corpus) -> Result<Self, CorpusError> {
        Ok(match mode {
            FeatureMode::Tf => FeatureTransform::Tf,
            FeatureMode::TfIdf => FeatureTransform::TfIdf(IdfTable::from_corpus(train)?),
        })
    }

    pub fn mode(&self) -> FeatureMode {
        match self {
            FeatureTransform::Tf => FeatureMode::Tf,
            FeatureTransform::TfIdf(_) => FeatureMode::TfIdf,
        }
    }

    pub fn apply(&self, d: &Document) -> Document {
        match self {
            FeatureTransform::Tf => d.clone(),
            FeatureTransform::TfIdf(idf) => idf.apply(d),
        }
    }

    /// Transforms every document, keeping the corpus' own statistics.
    pub fn apply_corpus(&self, c: &Corpus) -> Corpus {
        Corpus {
            documents: crate::exec::map(crate::exec::Execution::default(), &c.documents, |d| {
                self.apply(d)
            }),
            num_features: c.num_features,
            doc_frequency: c.doc_frequency.clone(),
        }
    }
}
