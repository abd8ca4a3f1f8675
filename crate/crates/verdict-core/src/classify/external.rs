//! Import of externally produced predictions and feature vectors
//! (fine-tuned transformer outputs, document embeddings).

use std::collections::BTreeMap;
use std::io::Read;

use super::ClassifyError;
use crate::labels::Valence;

pub type ExternalPredictions = BTreeMap<String, (Valence, Option<f64>)>;

/// A dense feature vector keyed to a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub comment_id: String,
    pub values: Vec<f64>,
}

/// Parse a prediction CSV with header `comment_id,valence,score`. The score
/// column may be empty. Duplicate ids and unknown valence strings are
/// errors.
pub fn load_external_predictions<R: Read>(reader: R) -> Result<ExternalPredictions, ClassifyError> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    {
        let headers = csv_reader.headers().map_err(|e| ClassifyError::ExternalFormat {
            line: 1,
            message: e.to_string(),
        })?;
        let expected = ["comment_id", "valence", "score"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(ClassifyError::ExternalFormat {
                line: 1,
                message: format!("expected header {expected:?}, got {headers:?}"),
            });
        }
    }
    let mut map = ExternalPredictions::new();
    let mut duplicates = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| ClassifyError::ExternalFormat {
            line,
            message: e.to_string(),
        })?;
        let id = record.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(ClassifyError::ExternalFormat {
                line,
                message: "empty comment_id".into(),
            });
        }
        let valence_str = record.get(1).unwrap_or("");
        let valence = Valence::parse(valence_str).ok_or_else(|| ClassifyError::ExternalFormat {
            line,
            message: format!("unknown valence {valence_str:?}"),
        })?;
        let score = match record.get(2).unwrap_or("") {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|e| ClassifyError::ExternalFormat {
                line,
                message: format!("bad score {s:?}: {e}"),
            })?),
        };
        if map.insert(id.clone(), (valence, score)).is_some() {
            duplicates.push(id);
        }
    }
    if !duplicates.is_empty() {
        duplicates.sort();
        duplicates.dedup();
        return Err(ClassifyError::DuplicateIds(duplicates));
    }
    Ok(map)
}

/// Parse a feature-vector CSV with header `comment_id,f0,...,f{d-1}`. All
/// rows must share the header's dimension and be finite.
pub fn load_feature_vectors<R: Read>(reader: R) -> Result<Vec<FeatureVector>, ClassifyError> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let dim;
    {
        let headers = csv_reader.headers().map_err(|e| ClassifyError::ExternalFormat {
            line: 1,
            message: e.to_string(),
        })?;
        let cols: Vec<&str> = headers.iter().collect();
        if cols.first() != Some(&"comment_id") {
            return Err(ClassifyError::ExternalFormat {
                line: 1,
                message: format!("first column must be comment_id, got {:?}", cols.first()),
            });
        }
        for (j, col) in cols[1..].iter().enumerate() {
            if *col != format!("f{j}") {
                return Err(ClassifyError::ExternalFormat {
                    line: 1,
                    message: format!("expected column f{j}, got {col:?}"),
                });
            }
        }
        dim = cols.len() - 1;
    }
    let mut vectors = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| ClassifyError::ExternalFormat {
            line,
            message: e.to_string(),
        })?;
        let comment_id = record.get(0).unwrap_or("").to_string();
        let mut values = Vec::with_capacity(dim);
        for j in 0..dim {
            let raw = record.get(j + 1).unwrap_or("");
            let v: f64 = raw.parse().map_err(|e| ClassifyError::ExternalFormat {
                line,
                message: format!("bad value {raw:?} in f{j}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(ClassifyError::ExternalFormat {
                    line,
                    message: format!("non-finite value in f{j}"),
                });
            }
            values.push(v);
        }
        vectors.push(FeatureVector { comment_id, values });
    }
    Ok(vectors)
}
