//! Multinomial naive Bayes over 1-gram counts with additive smoothing.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ClassifyError, TextClassifier};
use crate::labels::{LabeledComment, Valence};
use crate::text::{count_vector, tokenize, Vocabulary};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Class order is fixed: index 0 = Positive, index 1 = Negative.
const CLASS_ORDER: [Valence; 2] = [Valence::Positive, Valence::Negative];

fn class_index(v: Valence) -> usize {
    match v {
        Valence::Positive => 0,
        Valence::Negative => 1,
    }
}

#[derive(Debug, Clone)]
pub struct NbModel {
    vocab: Vocabulary,
    log_priors: [f64; 2],
    log_likelihoods: [Vec<f64>; 2],
    alpha: f64,
}

/// Train from class frequencies and smoothed per-class term counts:
/// log P(term | class) = log((count_in_class + alpha) / (class_total + alpha * V)).
pub fn nb_train(corpus: &[LabeledComment], alpha: f64) -> Result<NbModel, ClassifyError> {
    if corpus.is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(ClassifyError::BadAlpha(alpha));
    }
    let tokenized: Vec<(usize, Vec<String>)> = corpus
        .iter()
        .map(|lc| (class_index(lc.valence), tokenize(&lc.comment.body)))
        .collect();

    let n_per_class = [
        tokenized.iter().filter(|(c, _)| *c == 0).count(),
        tokenized.iter().filter(|(c, _)| *c == 1).count(),
    ];
    if n_per_class[0] == 0 {
        return Err(ClassifyError::SingleClass("negative"));
    }
    if n_per_class[1] == 0 {
        return Err(ClassifyError::SingleClass("positive"));
    }

    let vocab = Vocabulary::build(
        tokenized
            .iter()
            .flat_map(|(_, tokens)| tokens.iter().map(String::as_str)),
    );
    let v = vocab.len();

    let mut term_counts = [vec![0u64; v], vec![0u64; v]];
    let mut class_totals = [0u64; 2];
    for (class, tokens) in &tokenized {
        for token in tokens {
            if let Some(i) = vocab.index_of(token) {
                term_counts[*class][i] += 1;
                class_totals[*class] += 1;
            }
        }
    }

    let n = corpus.len() as f64;
    let log_priors = [
        (n_per_class[0] as f64 / n).ln(),
        (n_per_class[1] as f64 / n).ln(),
    ];
    let log_likelihoods = [0, 1].map(|class| {
        let denom = class_totals[class] as f64 + alpha * v as f64;
        term_counts[class]
            .iter()
            .map(|&count| ((count as f64 + alpha) / denom).ln())
            .collect()
    });

    Ok(NbModel {
        vocab,
        log_priors,
        log_likelihoods,
        alpha,
    })
}

impl NbModel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn log_priors(&self) -> [f64; 2] {
        self.log_priors
    }

    pub fn log_likelihoods(&self) -> &[Vec<f64>; 2] {
        &self.log_likelihoods
    }

    /// Log-posterior (up to the shared evidence term) for
    /// [Positive, Negative]. OOV tokens are ignored.
    pub fn log_posteriors(&self, text: &str) -> [f64; 2] {
        let tokens = tokenize(text);
        let counts = count_vector(&tokens, &self.vocab);
        let mut scores = self.log_priors;
        for (i, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let c = count as f64;
            scores[0] += c * self.log_likelihoods[0][i];
            scores[1] += c * self.log_likelihoods[1][i];
        }
        scores
    }

    /// Argmax over classes; ties break toward Positive so they cannot
    /// inflate recall on the detection class.
    pub fn predict(&self, text: &str) -> (Valence, [f64; 2]) {
        let scores = self.log_posteriors(text);
        let valence = if scores[1] > scores[0] {
            Valence::Negative
        } else {
            Valence::Positive
        };
        (valence, scores)
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<(), ClassifyError> {
        let file = NbModelFile {
            format_version: MODEL_FORMAT_VERSION,
            kind: "multinomial_nb".to_string(),
            alpha: self.alpha,
            class_order: CLASS_ORDER.iter().map(|v| v.as_str().to_string()).collect(),
            vocab: self
                .vocab
                .terms()
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i))
                .collect(),
            log_priors: self.log_priors.to_vec(),
            log_likelihoods: self.log_likelihoods.to_vec(),
        };
        serde_json::to_writer_pretty(writer, &file)
            .map_err(|e| ClassifyError::ModelFormat(e.to_string()))
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, ClassifyError> {
        let file: NbModelFile = serde_json::from_reader(reader)
            .map_err(|e| ClassifyError::ModelFormat(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifyError::ModelFormat(format!(
                "unsupported format_version {} (expected {})",
                file.format_version, MODEL_FORMAT_VERSION
            )));
        }
        if file.kind != "multinomial_nb" {
            return Err(ClassifyError::ModelFormat(format!(
                "unsupported model kind {:?}",
                file.kind
            )));
        }
        let expected: Vec<String> = CLASS_ORDER.iter().map(|v| v.as_str().to_string()).collect();
        if file.class_order != expected {
            return Err(ClassifyError::ModelFormat(format!(
                "unexpected class order {:?}",
                file.class_order
            )));
        }
        let mut terms = vec![None; file.vocab.len()];
        for (term, index) in file.vocab {
            if index >= terms.len() {
                return Err(ClassifyError::ModelFormat(format!(
                    "vocab index {index} out of range"
                )));
            }
            if terms[index].replace(term).is_some() {
                return Err(ClassifyError::ModelFormat(format!(
                    "vocab index {index} assigned twice"
                )));
            }
        }
        let terms: Vec<String> = terms
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| ClassifyError::ModelFormat("vocab indices are not 0..V-1".into()))?;
        let [pos, neg]: [Vec<f64>; 2] = file
            .log_likelihoods
            .try_into()
            .map_err(|_| ClassifyError::ModelFormat("expected two likelihood rows".into()))?;
        if pos.len() != terms.len() || neg.len() != terms.len() {
            return Err(ClassifyError::ModelFormat(
                "likelihood length does not match vocab".into(),
            ));
        }
        let log_priors: [f64; 2] = file
            .log_priors
            .try_into()
            .map_err(|_| ClassifyError::ModelFormat("expected two priors".into()))?;
        Ok(NbModel {
            vocab: Vocabulary::from_terms(terms),
            log_priors,
            log_likelihoods: [pos, neg],
            alpha: file.alpha,
        })
    }
}

impl TextClassifier for NbModel {
    fn classify(&self, text: &str) -> Valence {
        self.predict(text).0
    }
}

#[derive(Serialize, Deserialize)]
struct NbModelFile {
    format_version: u32,
    kind: String,
    alpha: f64,
    class_order: Vec<String>,
    vocab: BTreeMap<String, usize>,
    log_priors: Vec<f64>,
    log_likelihoods: Vec<Vec<f64>>,
}
