//! Confusion metrics with the negative-valence class as detection target,
//! plus the seeded k-fold cross-validation harness.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ClassifyError, TextClassifier};
use crate::labels::{LabeledComment, Valence};

/// Percent metrics over a confusion matrix whose "positive" (detection
/// target) is the Negative valence: a false positive improperly assigns a
/// negative judgement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
}

impl EvalMetrics {
    pub fn from_confusion(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let pct = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        let precision = pct(tp, tp + fp);
        let recall = pct(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalMetrics {
            tp,
            fp,
            fn_,
            tn,
            accuracy: pct(tp + tn, tp + fp + fn_ + tn),
            precision,
            recall,
            f1,
            fpr: pct(fp, fp + tn),
        }
    }

    pub fn as_vector(&self) -> MetricSummary {
        MetricSummary {
            accuracy: self.accuracy,
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
            fpr: self.fpr,
        }
    }
}

/// Confusion counts of valence predictions against truth.
pub fn evaluate(predictions: &[Valence], truth: &[Valence]) -> Result<EvalMetrics, ClassifyError> {
    if predictions.len() != truth.len() || predictions.is_empty() {
        return Err(ClassifyError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for (p, t) in predictions.iter().zip(truth) {
        match (p, t) {
            (Valence::Negative, Valence::Negative) => tp += 1,
            (Valence::Negative, Valence::Positive) => fp += 1,
            (Valence::Positive, Valence::Negative) => fn_ += 1,
            (Valence::Positive, Valence::Positive) => tn += 1,
        }
    }
    Ok(EvalMetrics::from_confusion(tp, fp, fn_, tn))
}

/// One value per metric; used for fold means and standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
}

impl MetricSummary {
    fn from_fn(mut f: impl FnMut(fn(&MetricSummary) -> f64) -> f64) -> Self {
        MetricSummary {
            accuracy: f(|m| m.accuracy),
            precision: f(|m| m.precision),
            recall: f(|m| m.recall),
            f1: f(|m| m.f1),
            fpr: f(|m| m.fpr),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub per_fold: Vec<EvalMetrics>,
    pub mean: MetricSummary,
    /// Population standard deviation over the folds.
    pub std: MetricSummary,
}

impl FoldReport {
    fn from_folds(per_fold: Vec<EvalMetrics>) -> Self {
        let k = per_fold.len() as f64;
        let vectors: Vec<MetricSummary> = per_fold.iter().map(|m| m.as_vector()).collect();
        let mean = MetricSummary::from_fn(|get| vectors.iter().map(get).sum::<f64>() / k);
        let std = MetricSummary::from_fn(|get| {
            let mu = vectors.iter().map(get).sum::<f64>() / k;
            (vectors.iter().map(|v| (get(v) - mu).powi(2)).sum::<f64>() / k).sqrt()
        });
        FoldReport {
            per_fold,
            mean,
            std,
        }
    }
}

/// Shuffle 0..n with a seeded generator and cut into k near-equal folds
/// (sizes differ by at most one, disjoint, covering).
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ClassifyError> {
    if k < 2 {
        return Err(ClassifyError::BadFoldCount(k));
    }
    if n < k {
        return Err(ClassifyError::TooFewItems { n, k });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(indices[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Seeded k-fold cross-validation: for each fold, train on the remainder
/// (the trainer rebuilds its vocabulary from scratch) and evaluate on the
/// held-out fold.
pub fn cross_validate<F>(
    corpus: &[LabeledComment],
    k: usize,
    seed: u64,
    trainer: F,
) -> Result<FoldReport, ClassifyError>
where
    F: Fn(&[LabeledComment]) -> Result<Box<dyn TextClassifier>, ClassifyError>,
{
    let folds = make_folds(corpus.len(), k, seed)?;
    let mut per_fold = Vec::with_capacity(k);
    for fold in &folds {
        let held: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train_set: Vec<LabeledComment> = corpus
            .iter()
            .enumerate()
            .filter(|(i, _)| !held.contains(i))
            .map(|(_, lc)| lc.clone())
            .collect();
        let model = trainer(&train_set)?;
        let predictions: Vec<Valence> = fold
            .iter()
            .map(|&i| model.classify(&corpus[i].comment.body))
            .collect();
        let truth: Vec<Valence> = fold.iter().map(|&i| corpus[i].valence).collect();
        per_fold.push(evaluate(&predictions, &truth)?);
    }
    Ok(FoldReport::from_folds(per_fold))
}

/// Cross-validation over imported feature vectors with a logistic-regression
/// trainer. Probability above one half predicts the negative class; exact
/// ties break positive.
pub fn cross_validate_vectors(
    x: &[Vec<f64>],
    y: &[Valence],
    k: usize,
    seed: u64,
    config: super::LogRegConfig,
) -> Result<FoldReport, ClassifyError> {
    if x.len() != y.len() {
        return Err(ClassifyError::LengthMismatch {
            predictions: x.len(),
            truth: y.len(),
        });
    }
    let folds = make_folds(x.len(), k, seed)?;
    let mut per_fold = Vec::with_capacity(k);
    for fold in &folds {
        let held: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        for i in 0..x.len() {
            if !held.contains(&i) {
                train_x.push(x[i].clone());
                train_y.push(u8::from(y[i] == Valence::Negative));
            }
        }
        let fit = super::logreg_fit(&train_x, &train_y, config)?;
        let predictions: Vec<Valence> = fold
            .iter()
            .map(|&i| {
                if super::logreg_predict(&fit, &x[i]) > 0.5 {
                    Valence::Negative
                } else {
                    Valence::Positive
                }
            })
            .collect();
        let truth: Vec<Valence> = fold.iter().map(|&i| y[i]).collect();
        per_fold.push(evaluate(&predictions, &truth)?);
    }
    Ok(FoldReport::from_folds(per_fold))
}
