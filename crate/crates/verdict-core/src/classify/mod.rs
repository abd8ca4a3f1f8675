//! The predictive function: natively trained multinomial naive Bayes,
//! logistic regression over imported feature vectors, an external-prediction
//! adapter, and the evaluation / cross-validation harness.

mod eval;
mod external;
mod logreg;
mod nb;

pub use eval::{
    cross_validate, cross_validate_vectors, evaluate, make_folds, EvalMetrics, FoldReport,
    MetricSummary,
};
pub use external::{load_external_predictions, load_feature_vectors, ExternalPredictions, FeatureVector};
pub use logreg::{
    logistic_log_likelihood, logistic_log_likelihood_gradient, logreg_fit, logreg_predict,
    LogRegConfig, LogRegFit,
};
pub use nb::{nb_train, NbModel, MODEL_FORMAT_VERSION};

use thiserror::Error;

use crate::labels::Valence;

/// Anything that can judge the valence of a piece of text.
pub trait TextClassifier: Send + Sync {
    fn classify(&self, text: &str) -> Valence;
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training corpus contains only the {0} class")]
    SingleClass(&'static str),
    #[error("smoothing alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("predictions and truth differ in length: {predictions} vs {truth}")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("cross-validation needs k >= 2, got {0}")]
    BadFoldCount(usize),
    #[error("corpus of {n} items cannot be split into {k} folds")]
    TooFewItems { n: usize, k: usize },
    #[error("design matrix is degenerate: {0}")]
    DegenerateDesign(String),
    #[error("non-finite value in row {0}")]
    NonFiniteInput(usize),
    #[error("labels must be 0 or 1")]
    BadLabel,
    #[error("need more rows than columns: n={n}, d={d}")]
    Underdetermined { n: usize, d: usize },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("external predictions line {line}: {message}")]
    ExternalFormat { line: usize, message: String },
    #[error("duplicate comment ids in external predictions: {0:?}")]
    DuplicateIds(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
