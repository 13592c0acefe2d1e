//! Linear lead-probability model: fitting, evaluation and classification.

mod score;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::{LeadFeatureVector, N_FEATURES};

pub use score::{
    read_scored, score_corpus, write_scored, FeatureSource, FeatureTable, ScoreError, ScoredAuthorship, ScoringContext,
    SCORED_HEADER,
};

pub const DEFAULT_THRESHOLD: f64 = 0.65;
pub const DEFAULT_SPLIT_RATIO: f64 = 0.9;
pub const MIN_EXAMPLES: usize = 20;
/// Label value at or above which an example counts as a true leader.
pub const POSITIVE_LABEL: f64 = 0.5;
/// Ridge term added to the feature correlation matrix when it is singular.
pub const SINGULAR_DAMPING: f64 = 1e-6;
const SINGULAR_EIGENVALUE: f64 = 1e-10;
const LOGISTIC_RIDGE: f64 = 1e-4;
const LOGISTIC_MAX_ITER: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("need at least {MIN_EXAMPLES} labeled examples, got {0}")]
    TooFewExamples(usize),
    #[error("label {value} at example {index} is outside [0, 1]")]
    InvalidLabel { index: usize, value: f64 },
    #[error("split ratio {0} must lie in (0, 1]")]
    InvalidSplit(f64),
    #[error("non-finite feature at example {0}")]
    NonFinite(usize),
    #[error("logistic fit did not converge")]
    NoConvergence,
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelFamily {
    #[default]
    Ols,
    Logistic,
}

impl ModelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Ols => "ols",
            ModelFamily::Logistic => "logistic",
        }
    }
}

impl FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ols" | "linear" => Ok(ModelFamily::Ols),
            "logistic" => Ok(ModelFamily::Logistic),
            other => Err(format!("unknown model family {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLeadModel {
    pub family: ModelFamily,
    pub weights: [f64; N_FEATURES],
    pub intercept: f64,
    pub feature_means: [f64; N_FEATURES],
    pub feature_stds: [f64; N_FEATURES],
    pub seed: u64,
    pub split_ratio: f64,
    pub n_train: usize,
    /// Ridge term used in the solve; zero unless the design was singular.
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Leader,
    Supporter,
}

pub fn classify(prob: f64, threshold: f64) -> Classification {
    if prob > threshold {
        Classification::Leader
    } else {
        Classification::Supporter
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub threshold: f64,
    /// tp / (tp + fp); 0 when nothing is predicted positive.
    pub precision: f64,
    /// tp / (tp + fn); 0 when there are no true positives to find.
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl EvalReport {
    pub fn from_predictions(pairs: impl IntoIterator<Item = (f64, f64)>, threshold: f64) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (prob, label) in pairs {
            let actual = label >= POSITIVE_LABEL;
            let predicted = classify(prob, threshold) == Classification::Leader;
            match (predicted, actual) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let ratio = |a: usize, b: usize| if a + b > 0 { a as f64 / (a + b) as f64 } else { 0.0 };
        EvalReport { threshold, precision: ratio(tp, fp), recall: ratio(tp, fn_), tp, fp, fn_, tn }
    }

    pub fn n(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub split_ratio: f64,
    pub seed: u64,
    pub threshold: f64,
    pub family: ModelFamily,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { split_ratio: DEFAULT_SPLIT_RATIO, seed: 0, threshold: DEFAULT_THRESHOLD, family: ModelFamily::Ols }
    }
}

/// Seeded shuffle of `0..n` cut into (train, held-out); each side sorted.
pub fn split_indices(n: usize, split_ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * split_ratio).round() as usize).clamp(n.min(2), n);
    let mut test = idx.split_off(n_train);
    idx.sort_unstable();
    test.sort_unstable();
    (idx, test)
}

pub fn fit(
    examples: &[(LeadFeatureVector, f64)],
    opts: &FitOptions,
) -> Result<(LinearLeadModel, EvalReport), ModelError> {
    if examples.len() < MIN_EXAMPLES {
        return Err(ModelError::TooFewExamples(examples.len()));
    }
    if !(opts.split_ratio > 0.0 && opts.split_ratio <= 1.0) {
        return Err(ModelError::InvalidSplit(opts.split_ratio));
    }
    for (i, (v, y)) in examples.iter().enumerate() {
        if !(0.0..=1.0).contains(y) {
            return Err(ModelError::InvalidLabel { index: i, value: *y });
        }
        if v.to_array().iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite(i));
        }
    }
    let (train, test) = split_indices(examples.len(), opts.split_ratio, opts.seed);
    let train_set: Vec<([f64; N_FEATURES], f64)> =
        train.iter().map(|&i| (examples[i].0.to_array(), examples[i].1)).collect();
    let mut model = fit_arrays(&train_set, opts.family)?;
    model.seed = opts.seed;
    model.split_ratio = opts.split_ratio;
    let report = model.evaluate(test.iter().map(|&i| &examples[i]), opts.threshold);
    Ok((model, report))
}

/// Fits on every example, with no hold-out.
pub fn fit_arrays(train: &[([f64; N_FEATURES], f64)], family: ModelFamily) -> Result<LinearLeadModel, ModelError> {
    let n = train.len();
    if n < 2 {
        return Err(ModelError::TooFewExamples(n));
    }
    let nf = n as f64;
    let mut means = [0.0; N_FEATURES];
    let mut stds = [1.0; N_FEATURES];
    let mut active = Vec::new();
    for k in 0..N_FEATURES {
        let mean = train.iter().map(|(x, _)| x[k]).sum::<f64>() / nf;
        let var = train.iter().map(|(x, _)| (x[k] - mean).powi(2)).sum::<f64>() / nf;
        let sd = var.sqrt();
        means[k] = mean;
        if sd > 1e-12 * mean.abs().max(1.0) {
            stds[k] = sd;
            active.push(k);
        }
    }
    let z = DMatrix::from_fn(n, active.len(), |i, j| {
        let k = active[j];
        (train[i].0[k] - means[k]) / stds[k]
    });
    let y = DVector::from_iterator(n, train.iter().map(|(_, y)| *y));

    let (coef, intercept, damping) = match family {
        ModelFamily::Ols => {
            let y_mean = y.mean();
            let yc = y.add_scalar(-y_mean);
            let mut gram = z.tr_mul(&z) / nf;
            let rhs = z.tr_mul(&yc) / nf;
            let mut damping = 0.0;
            if is_singular(&gram) {
                damping = SINGULAR_DAMPING;
                for d in 0..gram.nrows() {
                    gram[(d, d)] += damping;
                }
            }
            let coef = solve_spd(gram, &rhs)?;
            (coef, y_mean, damping)
        }
        ModelFamily::Logistic => {
            let (coef, b) = fit_logistic(&z, &y)?;
            (coef, b, LOGISTIC_RIDGE)
        }
    };
    let mut weights = [0.0; N_FEATURES];
    for (j, &k) in active.iter().enumerate() {
        weights[k] = coef[j];
    }
    Ok(LinearLeadModel {
        family,
        weights,
        intercept,
        feature_means: means,
        feature_stds: stds,
        seed: 0,
        split_ratio: 1.0,
        n_train: n,
        damping,
    })
}

fn is_singular(gram: &DMatrix<f64>) -> bool {
    if gram.nrows() == 0 {
        return false;
    }
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    eig.iter().copied().fold(f64::INFINITY, f64::min) < SINGULAR_EIGENVALUE
}

fn solve_spd(m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
    if m.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    match m.clone().cholesky() {
        Some(c) => Ok(c.solve(rhs)),
        None => m.lu().solve(rhs).ok_or(ModelError::NoConvergence),
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Ridge-penalized IRLS; the intercept is not penalized.
fn fit_logistic(z: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, f64), ModelError> {
    let (n, p) = z.shape();
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { z[(i, j - 1)] });
    let mut beta = DVector::zeros(p + 1);
    for _ in 0..LOGISTIC_MAX_ITER {
        let mu = (&x * &beta).map(sigmoid);
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-12));
        let mut grad = x.tr_mul(&(y - &mu));
        let mut hess = x.tr_mul(&DMatrix::from_fn(n, p + 1, |i, j| x[(i, j)] * w[i]));
        for j in 1..=p {
            grad[j] -= LOGISTIC_RIDGE * n as f64 * beta[j];
            hess[(j, j)] += LOGISTIC_RIDGE * n as f64;
        }
        let step = solve_spd(hess, &grad)?;
        beta += &step;
        if step.norm() < 1e-10 * (1.0 + beta.norm()) {
            return Ok((beta.rows(1, p).into_owned(), beta[0]));
        }
    }
    Err(ModelError::NoConvergence)
}

impl LinearLeadModel {
    /// Linear score before the link (OLS) or logit (logistic).
    pub fn predict_raw(&self, v: &LeadFeatureVector) -> f64 {
        let x = v.to_array();
        let mut s = self.intercept;
        for (k, xk) in x.iter().enumerate() {
            s += self.weights[k] * (xk - self.feature_means[k]) / self.feature_stds[k];
        }
        s
    }

    pub fn predict(&self, v: &LeadFeatureVector) -> f64 {
        let raw = self.predict_raw(v);
        match self.family {
            ModelFamily::Ols => raw.clamp(0.0, 1.0),
            ModelFamily::Logistic => sigmoid(raw),
        }
    }

    pub fn evaluate<'a, I>(&self, examples: I, threshold: f64) -> EvalReport
    where
        I: IntoIterator<Item = &'a (LeadFeatureVector, f64)>,
    {
        EvalReport::from_predictions(examples.into_iter().map(|(v, y)| (self.predict(v), *y)), threshold)
    }

    pub fn threshold_sweep(&self, examples: &[(LeadFeatureVector, f64)], thresholds: &[f64]) -> Vec<EvalReport> {
        let preds: Vec<(f64, f64)> = examples.iter().map(|(v, y)| (self.predict(v), *y)).collect();
        thresholds.iter().map(|&t| EvalReport::from_predictions(preds.iter().copied(), t)).collect()
    }

    /// `key = value` lines; floats use the shortest representation that round-trips.
    pub fn to_text(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "family = {}", self.family.as_str());
        let _ = writeln!(s, "intercept = {:?}", self.intercept);
        let _ = writeln!(s, "weights = {}", list(&self.weights));
        let _ = writeln!(s, "means = {}", list(&self.feature_means));
        let _ = writeln!(s, "stds = {}", list(&self.feature_stds));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "split = {:?}", self.split_ratio);
        let _ = writeln!(s, "n_train = {}", self.n_train);
        let _ = writeln!(s, "damping = {:?}", self.damping);
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::Format { line: i + 1, message: "expected key = value".into() })?;
            fields.insert(k.trim(), (i + 1, v.trim()));
        }
        let get = |key: &str| -> Result<(usize, &str), ModelError> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| ModelError::Format { line: 0, message: format!("missing field {key}") })
        };
        fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ModelError> {
            v.parse().map_err(|_| ModelError::Format { line, message: format!("{key}: cannot parse {v:?}") })
        }
        let vec9 = |key: &str| -> Result<[f64; N_FEATURES], ModelError> {
            let (line, v) = get(key)?;
            let xs: Vec<f64> = v.split_whitespace().map(|x| num(line, key, x)).collect::<Result<_, _>>()?;
            xs.try_into()
                .map_err(|_| ModelError::Format { line, message: format!("{key}: expected {N_FEATURES} values") })
        };
        let (fl, fv) = get("family")?;
        let family = fv.parse().map_err(|message| ModelError::Format { line: fl, message })?;
        let scalar = |key: &str| -> Result<f64, ModelError> {
            let (line, v) = get(key)?;
            num(line, key, v)
        };
        let (sl, sv) = get("seed")?;
        let (nl, nv) = get("n_train")?;
        let model = LinearLeadModel {
            family,
            weights: vec9("weights")?,
            intercept: scalar("intercept")?,
            feature_means: vec9("means")?,
            feature_stds: vec9("stds")?,
            seed: num(sl, "seed", sv)?,
            split_ratio: scalar("split")?,
            n_train: num(nl, "n_train", nv)?,
            damping: scalar("damping")?,
        };
        if model.feature_stds.iter().any(|s| s.is_nan() || *s <= 0.0) {
            return Err(ModelError::Format { line: get("stds")?.0, message: "stds must be positive".into() });
        }
        Ok(model)
    }
}
