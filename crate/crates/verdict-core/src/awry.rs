//! Conversation-derailment transfer evaluation: offline (second comment
//! only) and online (stream replies, stop at the first negative prediction).

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{EvalMetrics, TextClassifier};
use crate::labels::Valence;

#[derive(Debug, Error)]
pub enum AwryError {
    #[error("conversation file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("prediction for unknown conversation id {0:?}")]
    UnknownId(String),
    #[error("no usable predictions")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Utterance {
    pub author: String,
    pub text: String,
}

/// One labeled conversation; `derails` is the ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub utterances: Vec<Utterance>,
    pub derails: bool,
}

/// Parse newline-delimited conversation records. Any schema violation is an
/// error carrying the line number.
pub fn load_conversations<R: BufRead>(reader: R) -> Result<Vec<ConversationRecord>, AwryError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ConversationRecord =
            serde_json::from_str(&line).map_err(|e| AwryError::Format {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AwryPrediction {
    pub id: String,
    pub predicted_derail: bool,
    /// 1-based utterance index of the first negative prediction (online mode
    /// only).
    pub trigger_index: Option<usize>,
}

/// Offline protocol: classify utterance 2 (1-based) only; a negative
/// judgement predicts derailment. Conversations with fewer than two
/// utterances are skipped.
pub fn predict_offline(
    conv: &ConversationRecord,
    classifier: &dyn TextClassifier,
) -> Option<AwryPrediction> {
    let second = conv.utterances.get(1)?;
    Some(AwryPrediction {
        id: conv.id.clone(),
        predicted_derail: classifier.classify(&second.text) == Valence::Negative,
        trigger_index: None,
    })
}

/// Online protocol: classify the reply stream (utterance 2 onward, the first
/// utterance is the context post) in order; stop at the first negative
/// prediction, otherwise run through every comment and predict no
/// derailment.
pub fn predict_online(
    conv: &ConversationRecord,
    classifier: &dyn TextClassifier,
) -> AwryPrediction {
    for (i, utterance) in conv.utterances.iter().enumerate().skip(1) {
        if classifier.classify(&utterance.text) == Valence::Negative {
            return AwryPrediction {
                id: conv.id.clone(),
                predicted_derail: true,
                trigger_index: Some(i + 1),
            };
        }
    }
    AwryPrediction {
        id: conv.id.clone(),
        predicted_derail: false,
        trigger_index: None,
    }
}

/// Confusion metrics with derailment as the detection target. Predictions
/// are matched to truths by conversation id.
pub fn evaluate_awry(
    predictions: &[AwryPrediction],
    truths: &BTreeMap<String, bool>,
) -> Result<EvalMetrics, AwryError> {
    if predictions.is_empty() {
        return Err(AwryError::Empty);
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for prediction in predictions {
        let truth = truths
            .get(&prediction.id)
            .ok_or_else(|| AwryError::UnknownId(prediction.id.clone()))?;
        match (prediction.predicted_derail, truth) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalMetrics::from_confusion(tp, fp, fn_, tn))
}
