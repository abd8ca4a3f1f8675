//! Judgement-prefix extraction from top-level comments and the two-class
//! valence mapping that turns them into a labeled training corpus.

use serde::{Deserialize, Serialize};

use crate::ingest::{RawComment, Thread};

/// The categorical judgement prefixes. INFO marks a request for more
/// information and never enters the labeled corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JudgementLabel {
    Nta,
    Yta,
    Nah,
    Esh,
    Info,
}

impl JudgementLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            JudgementLabel::Nta => "NTA",
            JudgementLabel::Yta => "YTA",
            JudgementLabel::Nah => "NAH",
            JudgementLabel::Esh => "ESH",
            JudgementLabel::Info => "INFO",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "NTA" => Some(JudgementLabel::Nta),
            "YTA" => Some(JudgementLabel::Yta),
            "NAH" => Some(JudgementLabel::Nah),
            "ESH" => Some(JudgementLabel::Esh),
            "INFO" => Some(JudgementLabel::Info),
            _ => None,
        }
    }

    /// Binary collapse: NTA/NAH are positive, YTA/ESH negative, INFO none.
    pub fn valence(self) -> Option<Valence> {
        match self {
            JudgementLabel::Nta | JudgementLabel::Nah => Some(Valence::Positive),
            JudgementLabel::Yta | JudgementLabel::Esh => Some(Valence::Negative),
            JudgementLabel::Info => None,
        }
    }
}

/// Binary moral-judgement valence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Positive,
    Negative,
}

impl Valence {
    pub fn as_str(self) -> &'static str {
        match self {
            Valence::Positive => "positive",
            Valence::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(Valence::Positive),
            "negative" => Some(Valence::Negative),
            _ => None,
        }
    }
}

/// Markers stripped ahead of the prefix: whitespace, quote markers,
/// emphasis asterisks, and opening brackets. Reddit markdown wraps
/// judgement prefixes in all of these.
fn is_leading_marker(ch: char) -> bool {
    ch.is_whitespace() || matches!(ch, '>' | '*' | '[' | '(')
}

/// Extract the judgement prefix from a comment body, if the first alphabetic
/// token (after stripping leading markers) is one of the five labels at a
/// word boundary. "NTAH" does not match NTA, and a label buried mid-sentence
/// does not count.
pub fn extract_label(text: &str) -> Option<JudgementLabel> {
    let rest = text.trim_start_matches(is_leading_marker);
    let mut chars = rest.chars();
    let mut token = String::new();
    let mut boundary_ok = true;
    for ch in chars.by_ref() {
        if ch.is_alphabetic() {
            token.push(ch);
            if token.len() > 4 {
                return None; // longer than any label
            }
        } else {
            boundary_ok = !ch.is_alphanumeric();
            break;
        }
    }
    if token.is_empty() || !boundary_ok {
        return None;
    }
    JudgementLabel::from_token(&token)
}

/// A top-level comment carrying a non-INFO judgement prefix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledComment {
    pub comment: RawComment,
    pub label: JudgementLabel,
    pub valence: Valence,
    pub post_id: String,
}

/// Per-label counts over the scanned top-level comments, plus the two drop
/// buckets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LabelHistogram {
    pub nta: u64,
    pub yta: u64,
    pub nah: u64,
    pub esh: u64,
    pub info: u64,
    pub no_prefix: u64,
}

impl LabelHistogram {
    pub fn count(&mut self, label: Option<JudgementLabel>) {
        match label {
            Some(JudgementLabel::Nta) => self.nta += 1,
            Some(JudgementLabel::Yta) => self.yta += 1,
            Some(JudgementLabel::Nah) => self.nah += 1,
            Some(JudgementLabel::Esh) => self.esh += 1,
            Some(JudgementLabel::Info) => self.info += 1,
            None => self.no_prefix += 1,
        }
    }

    /// Comments that enter the labeled corpus.
    pub fn emitted(&self) -> u64 {
        self.nta + self.yta + self.nah + self.esh
    }

    pub fn positive(&self) -> u64 {
        self.nta + self.nah
    }

    pub fn negative(&self) -> u64 {
        self.yta + self.esh
    }
}

/// Scan top-level comments only; drop no-prefix and INFO comments; emit the
/// labeled corpus and its label histogram.
pub fn build_labeled_corpus(threads: &[Thread]) -> (Vec<LabeledComment>, LabelHistogram) {
    let mut labeled = Vec::new();
    let mut histogram = LabelHistogram::default();
    for thread in threads {
        for node in thread.top_level() {
            let label = extract_label(&node.comment.body);
            histogram.count(label);
            let Some(label) = label else { continue };
            let Some(valence) = label.valence() else {
                continue;
            };
            labeled.push(LabeledComment {
                comment: node.comment.clone(),
                label,
                valence,
                post_id: thread.post.id.clone(),
            });
        }
    }
    (labeled, histogram)
}
