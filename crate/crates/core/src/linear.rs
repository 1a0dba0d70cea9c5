//! L2-regularized binary logistic regression on sparse documents.
//!
//! Minimizes `J(w, b) = 0.5 * |w|^2 + C * sum_i ln(1 + exp(-y_i (w.x_i + b)))`
//! with a line-search Newton-CG method. The bias is not regularized and is
//! kept out of the feature vectors.

use std::collections::HashMap;

use log::debug;
use thiserror::Error;

use crate::corpus::SparseVec;

/// Logit used for classifiers trained on one-sided data: `sigma(30)` is
/// `1 - 9.4e-14`.
pub const SINGLE_CLASS_LOGIT: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearError {
    #[error("training set is empty")]
    EmptyData,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("objective became non-finite at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("classifier parameters must be finite")]
    NonFiniteParameters,
}

/// Non-fatal conditions reported alongside a trained classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainWarning {
    /// Every example had the same sign; the classifier outputs a constant.
    SingleClassData(Sign),
    /// No examples at all; the classifier outputs 0.5.
    EmptyTrainingSet,
    /// `max_iterations` reached before the gradient tolerance.
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Inverse regularization strength, multiplies the loss term.
    pub c: f64,
    pub max_iterations: usize,
    /// Stop once the gradient's infinity norm is at most this.
    pub tolerance: f64,
    /// Carried for reproducible runs; the optimizer itself is deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            max_iterations: 1000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LinearError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(LinearError::InvalidConfig(format!(
                "c must be positive, got {}",
                self.c
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(LinearError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(LinearError::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Binary training examples, borrowing document features.
#[derive(Debug, Clone, Default)]
pub struct LabeledSet<'a> {
    pub examples: Vec<(&'a SparseVec, Sign)>,
}

impl<'a> LabeledSet<'a> {
    pub fn new() -> Self {
        LabeledSet::default()
    }

    pub fn push(&mut self, x: &'a SparseVec, sign: Sign) {
        self.examples.push((x, sign));
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn count(&self, sign: Sign) -> usize {
        self.examples.iter().filter(|(_, s)| *s == sign).count()
    }
}

/// Weight vector and bias of one binary "belongs here" decision.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeClassifier {
    weights: SparseVec,
    bias: f64,
}

impl NodeClassifier {
    pub fn new(weights: SparseVec, bias: f64) -> Result<Self, LinearError> {
        if !bias.is_finite() || weights.values().iter().any(|w| !w.is_finite()) {
            return Err(LinearError::NonFiniteParameters);
        }
        Ok(NodeClassifier { weights, bias })
    }

    /// Zero weights and bias: probability 0.5 everywhere.
    pub fn zero() -> Self {
        NodeClassifier {
            weights: SparseVec::default(),
            bias: 0.0,
        }
    }

    /// Ignores its input and returns `sigma(logit)`.
    pub fn constant(logit: f64) -> Self {
        assert!(logit.is_finite());
        NodeClassifier {
            weights: SparseVec::default(),
            bias: logit,
        }
    }

    pub fn weights(&self) -> &SparseVec {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Same weights and bias with flipped sign.
    pub fn negated(&self) -> Self {
        NodeClassifier {
            weights: SparseVec::from_sorted(self.weights.iter().map(|(i, w)| (i, -w))),
            bias: -self.bias,
        }
    }

    /// Multiplies weights and bias by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        NodeClassifier {
            weights: SparseVec::from_sorted(self.weights.iter().map(|(i, w)| (i, w * factor))),
            bias: self.bias * factor,
        }
    }

    pub fn logit(&self, x: &SparseVec) -> f64 {
        self.weights.dot(x) + self.bias
    }

    /// `sigma(w.x + b)`, clamped into the open interval (0, 1).
    pub fn predict_proba(&self, x: &SparseVec) -> f64 {
        sigmoid(self.logit(x))
    }

    /// `ln sigma(w.x + b)`, computed without forming the probability.
    pub fn log_predict_proba(&self, x: &SparseVec) -> f64 {
        log_sigmoid(self.logit(x))
    }
}

/// Logistic function, clamped so the result stays strictly inside (0, 1)
/// even when the exact value is not representable.
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `ln sigma(z) = -softplus(-z)`.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

/// `ln(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Exact `1 / (1 + exp(-z))` without clamping, for internal use.
fn raw_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Regularized logistic objective over a compact parameter space.
///
/// Parameters are `[w_0, ..., w_{m-1}, b]` where `w_j` belongs to the j-th
/// distinct feature id seen in the data, in ascending id order.
pub struct Objective {
    c: f64,
    features: Vec<u32>,
    rows: Vec<Vec<(usize, f64)>>,
    labels: Vec<f64>,
}

impl Objective {
    pub fn new(data: &LabeledSet<'_>, c: f64) -> Self {
        let mut features: Vec<u32> = data
            .examples
            .iter()
            .flat_map(|(x, _)| x.indices().iter().copied())
            .collect();
        features.sort_unstable();
        features.dedup();
        let slot: HashMap<u32, usize> = features.iter().enumerate().map(|(j, &f)| (f, j)).collect();
        let rows = data
            .examples
            .iter()
            .map(|(x, _)| x.iter().map(|(f, v)| (slot[&f], v)).collect())
            .collect();
        let labels = data.examples.iter().map(|(_, s)| s.value()).collect();
        Objective {
            c,
            features,
            rows,
            labels,
        }
    }

    /// Number of parameters, bias included.
    pub fn dim(&self) -> usize {
        self.features.len() + 1
    }

    /// Feature id owning each weight slot.
    pub fn features(&self) -> &[u32] {
        &self.features
    }

    fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let b = theta[self.features.len()];
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| theta[j] * v).sum::<f64>() + b)
            .collect()
    }

    fn reg(&self, theta: &[f64]) -> f64 {
        0.5 * theta[..self.features.len()]
            .iter()
            .map(|w| w * w)
            .sum::<f64>()
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let loss: f64 = self
            .margins(theta)
            .iter()
            .zip(&self.labels)
            .map(|(z, y)| softplus(-y * z))
            .sum();
        self.reg(theta) + self.c * loss
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.value_and_gradient(theta).1
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let m = self.features.len();
        let mut grad = theta.to_vec();
        grad[m] = 0.0;
        let mut loss = 0.0;
        for ((row, z), &y) in self.rows.iter().zip(self.margins(theta)).zip(&self.labels) {
            loss += softplus(-y * z);
            // d/dz ln(1 + exp(-y z)) = -y * sigma(-y z)
            let coef = -self.c * y * raw_sigmoid(-y * z);
            for &(j, v) in row {
                grad[j] += coef * v;
            }
            grad[m] += coef;
        }
        (self.reg(theta) + self.c * loss, grad)
    }

    /// Per-example Hessian weights `C * sigma(z)(1 - sigma(z))`.
    fn curvature(&self, theta: &[f64]) -> Vec<f64> {
        self.margins(theta)
            .into_iter()
            .map(|z| {
                let p = raw_sigmoid(z);
                self.c * p * (1.0 - p)
            })
            .collect()
    }

    fn hessian_vec(&self, curvature: &[f64], v: &[f64], out: &mut [f64]) {
        let m = self.features.len();
        out[..m].copy_from_slice(&v[..m]);
        out[m] = 0.0;
        for (row, &d) in self.rows.iter().zip(curvature) {
            let xv = row.iter().map(|&(j, x)| x * v[j]).sum::<f64>() + v[m];
            let s = d * xv;
            for &(j, x) in row {
                out[j] += s * x;
            }
            out[m] += s;
        }
    }

    pub fn to_classifier(&self, theta: &[f64]) -> Result<NodeClassifier, LinearError> {
        let m = self.features.len();
        let weights = SparseVec::from_sorted(
            self.features
                .iter()
                .zip(&theta[..m])
                .filter(|(_, &w)| w != 0.0)
                .map(|(&f, &w)| (f, w)),
        );
        NodeClassifier::new(weights, theta[m])
    }

    /// Parameter vector of `clf` restricted to this objective's features.
    pub fn params_of(&self, clf: &NodeClassifier) -> Vec<f64> {
        let mut theta: Vec<f64> = self
            .features
            .iter()
            .map(|&f| clf.weights().get(f).unwrap_or(0.0))
            .collect();
        theta.push(clf.bias());
        theta
    }
}

/// A trained classifier plus any warning raised while training it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub classifier: NodeClassifier,
    pub warning: Option<TrainWarning>,
    pub iterations: usize,
}

/// Fits an L2-regularized logistic model to `data`.
///
/// One-sided data gets a constant classifier at `+-SINGLE_CLASS_LOGIT` and a
/// `SingleClassData` warning instead of an error.
pub fn train_logistic(data: &LabeledSet<'_>, cfg: &TrainConfig) -> Result<TrainOutcome, LinearError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(LinearError::EmptyData);
    }
    let positives = data.count(Sign::Positive);
    if positives == 0 || positives == data.len() {
        let sign = if positives == 0 {
            Sign::Negative
        } else {
            Sign::Positive
        };
        return Ok(TrainOutcome {
            classifier: NodeClassifier::constant(sign.value() * SINGLE_CLASS_LOGIT),
            warning: Some(TrainWarning::SingleClassData(sign)),
            iterations: 0,
        });
    }

    let obj = Objective::new(data, cfg.c);
    let n = obj.dim();
    let mut theta = vec![0.0; n];
    let (mut f, mut g) = obj.value_and_gradient(&theta);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        if !f.is_finite() {
            return Err(LinearError::NonFiniteLoss(iterations));
        }
        let gnorm = inf_norm(&g);
        if gnorm <= cfg.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let curvature = obj.curvature(&theta);
        let step = conjugate_gradient(&obj, &curvature, &g);
        let slope = dot(&g, &step);
        if !(slope < 0.0) {
            break;
        }

        // Armijo backtracking; full Newton steps are accepted near the optimum.
        let mut t = 1.0;
        let mut accepted = None;
        let mut trial = vec![0.0; n];
        for _ in 0..60 {
            for ((x, s), out) in theta.iter().zip(&step).zip(trial.iter_mut()) {
                *out = x + t * s;
            }
            let ft = obj.value(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * t * slope {
                accepted = Some(ft);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(_) => {
                std::mem::swap(&mut theta, &mut trial);
                let (fv, gv) = obj.value_and_gradient(&theta);
                f = fv;
                g = gv;
            }
            // No decrease representable at this precision.
            None => break,
        }
    }
    if !converged && inf_norm(&g) <= cfg.tolerance {
        converged = true;
    }
    if !f.is_finite() {
        return Err(LinearError::NonFiniteLoss(iterations));
    }
    debug!(
        "logistic fit: {} examples, {} params, {} iterations, |g|inf = {:.3e}",
        data.len(),
        n,
        iterations,
        inf_norm(&g)
    );
    Ok(TrainOutcome {
        classifier: obj.to_classifier(&theta)?,
        warning: (!converged).then_some(TrainWarning::NotConverged),
        iterations,
    })
}

/// Approximately solves `H p = -g` with truncated conjugate gradient.
fn conjugate_gradient(obj: &Objective, curvature: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let gnorm = dot(g, g).sqrt();
    let target = gnorm * gnorm.sqrt().min(0.1);
    let mut p = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|x| -x).collect();
    let mut d = r.clone();
    let mut hd = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for _ in 0..(2 * n).max(10) {
        if rr.sqrt() <= target {
            break;
        }
        obj.hessian_vec(curvature, &d, &mut hd);
        let dhd = dot(&d, &hd);
        if !(dhd > 0.0) {
            break;
        }
        let alpha = rr / dhd;
        for i in 0..n {
            p[i] += alpha * d[i];
            r[i] -= alpha * hd[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            d[i] = r[i] + beta * d[i];
        }
    }
    if p.iter().all(|&x| x == 0.0) {
        // Steepest descent when CG made no progress.
        return g.iter().map(|x| -x).collect();
    }
    p
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
