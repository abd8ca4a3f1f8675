//! Self-reported gender/age tags in post titles, the judgement-by-gender
//! contingency analysis, and the two-variable logistic regression.

use serde::Serialize;
use thiserror::Error;

use crate::analytics::{assign_post_valence, Judge};
use crate::classify::{logreg_fit, ClassifyError, LogRegConfig, LogRegFit};
use crate::ingest::Thread;
use crate::labels::Valence;
use crate::stats::odds_ratio_percent;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("dataset needs at least 3 records, got {0}")]
    TooFewRecords(usize),
    #[error("dataset contains a single gender")]
    SingleGender,
    #[error(transparent)]
    Fit(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Gender {
    M,
    F,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
        }
    }

    /// 0 female / 1 male, the regression encoding.
    pub fn code(self) -> u8 {
        match self {
            Gender::F => 0,
            Gender::M => 1,
        }
    }
}

/// A parsed "\[M27\]"-style tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DemoTag {
    pub gender: Gender,
    pub age: u32,
}

/// Ages outside this window at parse time are treated as garbage like
/// "[M271]"; the dataset itself later enforces 18+.
const PARSE_AGE_MIN: u32 = 13;
const PARSE_AGE_MAX: u32 = 120;

fn gender_letter(ch: char) -> Option<Gender> {
    match ch {
        'm' | 'M' => Some(Gender::M),
        'f' | 'F' => Some(Gender::F),
        _ => None,
    }
}

/// Scan left to right and return the first tag in the title.
pub fn parse_demo_tag(title: &str) -> Option<DemoTag> {
    scan_tags(title).into_iter().next().map(|(tag, _)| tag)
}

/// All tags with their character spans.
fn scan_tags(title: &str) -> Vec<(DemoTag, std::ops::Range<usize>)> {
    let chars: Vec<char> = title.chars().collect();
    let mut tags = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if let Some((tag, end)) = try_tag(&chars, i) {
            tags.push((tag, i..end));
            i = end;
        } else {
            i += 1;
        }
    }
    tags
}

fn try_tag(chars: &[char], i: usize) -> Option<(DemoTag, usize)> {
    if i > 0 && chars[i - 1].is_alphanumeric() {
        return None;
    }
    let mut j = i;
    if j < chars.len() && (chars[j] == '[' || chars[j] == '(') {
        j += 1;
    }

    fn read_age(chars: &[char], j: &mut usize) -> Option<u32> {
        let start = *j;
        while *j < chars.len() && chars[*j].is_ascii_digit() {
            *j += 1;
            if *j - start > 3 {
                return None;
            }
        }
        if *j == start {
            return None;
        }
        chars[start..*j].iter().collect::<String>().parse().ok()
    }

    let gender;
    let age;
    if let Some(g) = chars.get(j).copied().and_then(gender_letter) {
        // gender-first form: M27, M 27
        j += 1;
        if chars.get(j) == Some(&' ') {
            j += 1;
        }
        gender = g;
        age = read_age(chars, &mut j)?;
    } else {
        // age-first form: 27M, 27 M
        age = read_age(chars, &mut j)?;
        if chars.get(j) == Some(&' ') {
            j += 1;
        }
        gender = chars.get(j).copied().and_then(gender_letter)?;
        j += 1;
    }
    if j < chars.len() && (chars[j] == ']' || chars[j] == ')') {
        j += 1;
    }
    // Word boundary after the tag.
    if chars.get(j).is_some_and(|c| c.is_alphanumeric()) {
        return None;
    }
    if !(PARSE_AGE_MIN..=PARSE_AGE_MAX).contains(&age) {
        return None;
    }
    Some((DemoTag { gender, age }, j))
}

/// Which tag in a multi-tag title belongs to the poster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Attribution {
    /// Leftmost tag wins.
    FirstTag,
    /// Tag nearest a first-person token ("I", "me", "my"), falling back to
    /// the leftmost tag.
    FirstPersonTag,
}

impl Attribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Attribution::FirstTag => "first-tag",
            Attribution::FirstPersonTag => "first-person-tag",
        }
    }
}

/// Pick the poster's tag from a title under the given attribution policy.
pub fn poster_tag(title: &str, attribution: Attribution) -> Option<DemoTag> {
    let tags = scan_tags(title);
    if tags.is_empty() {
        return None;
    }
    match attribution {
        Attribution::FirstTag => Some(tags[0].0),
        Attribution::FirstPersonTag => {
            let tokens = first_person_spans(title);
            if tokens.is_empty() {
                return Some(tags[0].0);
            }
            let distance = |tag: &std::ops::Range<usize>| {
                tokens
                    .iter()
                    .map(|tok| {
                        tag.start
                            .checked_sub(tok.end)
                            .or_else(|| tok.start.checked_sub(tag.end))
                            .unwrap_or(0)
                    })
                    .min()
                    .unwrap()
            };
            tags.iter()
                .min_by_key(|(_, span)| (distance(span), span.start))
                .map(|(tag, _)| *tag)
        }
    }
}

/// Character spans of standalone "I" / "me" / "my" tokens.
fn first_person_spans(title: &str) -> Vec<std::ops::Range<usize>> {
    let chars: Vec<char> = title.chars().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphabetic() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_alphabetic() {
            i += 1;
        }
        let word: String = chars[start..i].iter().collect();
        let lower = word.to_lowercase();
        if lower == "i" || lower == "me" || lower == "my" {
            spans.push(start..i);
        }
    }
    spans
}

/// One row of the regression dataset.
#[derive(Debug, Clone, Serialize)]
pub struct DemographicRecord {
    pub post_id: String,
    /// 0 female / 1 male.
    pub gender_code: u8,
    pub age: u32,
    pub valence: Valence,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DemoDropStats {
    pub no_tag: u64,
    pub underage: u64,
    pub unjudged: u64,
}

/// Build the demographics dataset: parse each post title, drop untagged or
/// under-18 posters, and take the post valence from the top-scoring
/// top-level comment.
pub fn build_demo_dataset(
    threads: &[Thread],
    judge: Judge<'_>,
    attribution: Attribution,
) -> (Vec<DemographicRecord>, DemoDropStats) {
    let mut records = Vec::new();
    let mut drops = DemoDropStats::default();
    for thread in threads {
        let Some(tag) = poster_tag(&thread.post.title, attribution) else {
            drops.no_tag += 1;
            continue;
        };
        if tag.age < 18 {
            drops.underage += 1;
            continue;
        }
        let Some(judgement) = assign_post_valence(thread, judge) else {
            drops.unjudged += 1;
            continue;
        };
        records.push(DemographicRecord {
            post_id: thread.post.id.clone(),
            gender_code: tag.gender.code(),
            age: tag.age,
            valence: judgement.valence,
        });
    }
    (records, drops)
}

/// 2x2 gender-by-valence counts: rows [male, female], columns
/// [positive, negative].
pub fn demo_contingency(records: &[DemographicRecord]) -> [[u64; 2]; 2] {
    let mut table = [[0u64; 2]; 2];
    for r in records {
        let row = if r.gender_code == 1 { 0 } else { 1 };
        let col = match r.valence {
            Valence::Positive => 0,
            Valence::Negative => 1,
        };
        table[row][col] += 1;
    }
    table
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoRegression {
    /// Coefficients ordered [intercept, gender, age].
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// 95% Wald intervals per coefficient.
    pub confidence_intervals: Vec<(f64, f64)>,
    /// Percent odds change per coefficient (intercept included for
    /// completeness).
    pub odds_percent: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub deviance: f64,
}

impl DemoRegression {
    fn from_fit(fit: LogRegFit) -> Self {
        let mut coefficients = vec![fit.intercept];
        coefficients.extend(&fit.weights);
        let confidence_intervals = coefficients
            .iter()
            .zip(&fit.standard_errors)
            .map(|(c, se)| (c - 1.96 * se, c + 1.96 * se))
            .collect();
        let odds_percent = coefficients.iter().map(|&c| odds_ratio_percent(c)).collect();
        DemoRegression {
            coefficients,
            standard_errors: fit.standard_errors,
            confidence_intervals,
            odds_percent,
            converged: fit.converged,
            iterations: fit.iterations,
            deviance: fit.deviance,
        }
    }
}

/// Fit negative-judgement odds on (gender, age). The response is 1 for a
/// negative judgement.
pub fn demo_regression(
    records: &[DemographicRecord],
    config: LogRegConfig,
) -> Result<DemoRegression, DemoError> {
    if records.len() < 3 {
        return Err(DemoError::TooFewRecords(records.len()));
    }
    let genders: std::collections::HashSet<u8> = records.iter().map(|r| r.gender_code).collect();
    if genders.len() < 2 {
        return Err(DemoError::SingleGender);
    }
    let x: Vec<Vec<f64>> = records
        .iter()
        .map(|r| vec![r.gender_code as f64, r.age as f64])
        .collect();
    let y: Vec<u8> = records
        .iter()
        .map(|r| u8::from(r.valence == Valence::Negative))
        .collect();
    let fit = logreg_fit(&x, &y, config)?;
    Ok(DemoRegression::from_fit(fit))
}
