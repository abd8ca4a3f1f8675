//! Tokenization, vocabulary construction, count vectors, and 1-gram term
//! distributions shared by the classifier and the divergence analysis.

use std::collections::{BTreeMap, HashMap};

/// Ordered lowercase tokens of one document.
pub type TokenSequence = Vec<String>;

/// Lowercase and split on any non-alphanumeric character. No stemming, no
/// stop-word removal; numerals are kept as tokens.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Term -> count map over a document collection. Every stored count is >= 1
/// and `total` is the sum of all counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermDistribution {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TermDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Count every token occurrence across all documents.
    pub fn from_documents<'a, I>(documents: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut dist = Self::new();
        for doc in documents {
            for token in doc {
                dist.add(token, 1);
            }
        }
        dist
    }

    pub fn add(&mut self, term: &str, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(term.to_string()).or_insert(0) += count;
        self.total += count;
    }

    /// Fold another distribution into this one.
    pub fn merge(&mut self, other: &TermDistribution) {
        for (term, count) in &other.counts {
            self.add(term, *count);
        }
    }

    pub fn count(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn total_count(&self) -> u64 {
        self.total
    }

    pub fn n_types(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, c)| (t.as_str(), *c))
    }
}

/// Frozen term -> index map with indices 0..V-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    terms: Vec<String>,
}

impl Vocabulary {
    /// Build from an iterator of tokens. Terms are deduplicated and indexed
    /// in sorted order so construction is deterministic.
    pub fn build<'a, I>(tokens: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let unique: std::collections::BTreeSet<&str> = tokens.into_iter().collect();
        let terms: Vec<String> = unique.into_iter().map(String::from).collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { index, terms }
    }

    pub fn from_terms(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { index, terms }
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Entry i = occurrences of vocabulary term i; out-of-vocabulary tokens are
/// ignored.
pub fn count_vector(tokens: &[String], vocab: &Vocabulary) -> Vec<u64> {
    let mut counts = vec![0u64; vocab.len()];
    for token in tokens {
        if let Some(i) = vocab.index_of(token) {
            counts[i] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_splits_on_non_alphanumeric() {
        assert_eq!(tokenize("You're the ASSHOLE!"), vec!["you", "re", "the", "asshole"]);
        assert_eq!(tokenize("NTA\u{2014}she's 27"), vec!["nta", "she", "s", "27"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn term_distribution_counts() {
        let docs = vec![
            vec!["a".to_string(), "b".to_string()],
            vec!["b".to_string()],
        ];
        let dist = TermDistribution::from_documents(&docs);
        assert_eq!(dist.count("a"), 1);
        assert_eq!(dist.count("b"), 2);
        assert_eq!(dist.total_count(), 3);
    }

    #[test]
    fn term_distribution_empty() {
        let docs: Vec<TokenSequence> = vec![];
        let dist = TermDistribution::from_documents(&docs);
        assert!(dist.is_empty());
        assert_eq!(dist.total_count(), 0);
    }

    #[test]
    fn count_vector_drops_oov() {
        let vocab = Vocabulary::build(["a", "b"]);
        let tokens: Vec<String> = vec!["a".into(), "a".into(), "c".into()];
        assert_eq!(count_vector(&tokens, &vocab), vec![2, 0]);
    }

    #[test]
    fn count_vector_empty_and_identity() {
        let vocab = Vocabulary::build(["a", "b", "c"]);
        assert_eq!(count_vector(&[], &vocab), vec![0, 0, 0]);
        let once: Vec<String> = vocab.terms().to_vec();
        assert_eq!(count_vector(&once, &vocab), vec![1, 1, 1]);
    }

    #[test]
    fn vocabulary_indices_bijective() {
        let vocab = Vocabulary::build(["z", "a", "m", "a"]);
        assert_eq!(vocab.len(), 3);
        for i in 0..vocab.len() {
            assert_eq!(vocab.index_of(vocab.term(i)), Some(i));
        }
    }

    proptest! {
        // Re-tokenizing the joined output is a fixed point.
        #[test]
        fn tokenize_idempotent_on_own_output(text in ".{0,200}") {
            let once = tokenize(&text);
            let joined = once.join(" ");
            prop_assert_eq!(tokenize(&joined), once);
        }

        // Distribution over a concatenation equals the merge of parts.
        #[test]
        fn distribution_merge_matches_concat(
            a in proptest::collection::vec("[a-e]{1,3}", 0..20),
            b in proptest::collection::vec("[a-e]{1,3}", 0..20),
        ) {
            let doc_a: TokenSequence = a;
            let doc_b: TokenSequence = b;
            let both = TermDistribution::from_documents([&doc_a, &doc_b]);
            let mut merged = TermDistribution::from_documents([&doc_a]);
            merged.merge(&TermDistribution::from_documents([&doc_b]));
            prop_assert_eq!(both, merged);
        }

        // Count-vector mass never exceeds token count; equal iff no OOV.
        #[test]
        fn count_vector_mass_bound(tokens in proptest::collection::vec("[a-f]", 0..30)) {
            let vocab = Vocabulary::build(["a", "b", "c"]);
            let tokens: TokenSequence = tokens;
            let vec = count_vector(&tokens, &vocab);
            let mass: u64 = vec.iter().sum();
            prop_assert!(mass <= tokens.len() as u64);
            let oov = tokens.iter().any(|t| vocab.index_of(t).is_none());
            prop_assert_eq!(mass == tokens.len() as u64, !oov);
        }
    }
}
