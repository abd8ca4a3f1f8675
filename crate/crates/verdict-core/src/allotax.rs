//! Rank-turbulence divergence between two term distributions, with per-term
//! signed contributions.
//!
//! Terms are ranked by descending count with fractional ranks on ties. A
//! type absent from one corpus receives that corpus's exclusive-type rank
//! N + (E + 1) / 2, where N is the corpus's type count and E the number of
//! types exclusive to the other corpus. The per-term raw divergence is
//! |1/r1^a - 1/r2^a|^(1/(a+1)), normalized by the value the total would take
//! if the two distributions were disjoint, so the total lies in [0, 1].

use std::collections::BTreeMap;

use thiserror::Error;

use crate::text::TermDistribution;

#[derive(Debug, Error)]
pub enum AllotaxError {
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("term distribution is empty")]
    EmptyDistribution,
}

/// Term -> (count, fractional rank); smaller rank = more frequent.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedDistribution {
    ranks: BTreeMap<String, (u64, f64)>,
}

impl RankedDistribution {
    pub fn n_types(&self) -> usize {
        self.ranks.len()
    }

    pub fn rank(&self, term: &str) -> Option<f64> {
        self.ranks.get(term).map(|&(_, r)| r)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64, f64)> {
        self.ranks.iter().map(|(t, &(c, r))| (t.as_str(), c, r))
    }
}

/// Rank terms by descending count; ties share the mean of their rank block.
pub fn rank_terms(dist: &TermDistribution) -> RankedDistribution {
    let mut entries: Vec<(&str, u64)> = dist.iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut ranks = BTreeMap::new();
    let mut i = 0;
    while i < entries.len() {
        let mut j = i + 1;
        while j < entries.len() && entries[j].1 == entries[i].1 {
            j += 1;
        }
        // Block occupies ranks i+1 ..= j; every member gets the mean.
        let rank = (i + 1 + j) as f64 / 2.0;
        for entry in &entries[i..j] {
            ranks.insert(entry.0.to_string(), (entry.1, rank));
        }
        i = j;
    }
    RankedDistribution { ranks }
}

/// Raw rank-pair divergence |1/r1^alpha - 1/r2^alpha|^(1/(alpha+1)).
pub fn rank_pair_divergence(r1: f64, r2: f64, alpha: f64) -> f64 {
    (1.0 / r1.powf(alpha) - 1.0 / r2.powf(alpha))
        .abs()
        .powf(1.0 / (alpha + 1.0))
}

/// One term's divergence contribution. Positive sign means the term is more
/// salient (smaller rank) in the first corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TermContribution {
    pub term: String,
    pub rank_1: f64,
    pub rank_2: f64,
    /// Signed, normalized contribution; the total divergence is the sum of
    /// absolute values.
    pub contribution: f64,
}

#[derive(Debug, Clone)]
pub struct RtdResult {
    pub alpha: f64,
    /// Sorted by descending contribution magnitude, ties broken by term.
    pub contributions: Vec<TermContribution>,
    /// Disjoint-distribution normalization constant (raw divergence units).
    pub normalization: f64,
    /// Normalized total divergence in [0, 1].
    pub total: f64,
}

/// Which side of the comparison a term favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Corpus1,
    Corpus2,
}

/// Compare two term distributions. Returns per-term signed contributions and
/// the normalized total divergence.
pub fn rtd_contributions(
    d1: &TermDistribution,
    d2: &TermDistribution,
    alpha: f64,
) -> Result<RtdResult, AllotaxError> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(AllotaxError::BadAlpha(alpha));
    }
    if d1.is_empty() || d2.is_empty() {
        return Err(AllotaxError::EmptyDistribution);
    }
    let r1 = rank_terms(d1);
    let r2 = rank_terms(d2);
    let n1 = r1.n_types() as f64;
    let n2 = r2.n_types() as f64;
    let exclusive_1 = r1.iter().filter(|(t, _, _)| r2.rank(t).is_none()).count() as f64;
    let exclusive_2 = r2.iter().filter(|(t, _, _)| r1.rank(t).is_none()).count() as f64;
    // Rank a missing type takes in the corpus lacking it.
    let missing_rank_1 = n1 + (exclusive_2 + 1.0) / 2.0;
    let missing_rank_2 = n2 + (exclusive_1 + 1.0) / 2.0;

    // Normalization: every type treated as exclusive to its own corpus.
    let disjoint_missing_1 = n1 + (n2 + 1.0) / 2.0;
    let disjoint_missing_2 = n2 + (n1 + 1.0) / 2.0;
    let mut normalization = 0.0;
    for (_, _, rank) in r1.iter() {
        normalization += rank_pair_divergence(rank, disjoint_missing_2, alpha);
    }
    for (_, _, rank) in r2.iter() {
        normalization += rank_pair_divergence(disjoint_missing_1, rank, alpha);
    }

    let mut terms: Vec<&str> = r1.iter().map(|(t, _, _)| t).collect();
    terms.extend(r2.iter().map(|(t, _, _)| t).filter(|t| r1.rank(t).is_none()));

    let mut contributions = Vec::with_capacity(terms.len());
    let mut total = 0.0;
    for term in terms {
        let rank_1 = r1.rank(term).unwrap_or(missing_rank_1);
        let rank_2 = r2.rank(term).unwrap_or(missing_rank_2);
        let raw = rank_pair_divergence(rank_1, rank_2, alpha);
        let magnitude = raw / normalization;
        // Smaller rank in corpus 1 means the term leans corpus 1.
        let contribution = if rank_1 < rank_2 { magnitude } else { -magnitude };
        total += magnitude;
        contributions.push(TermContribution {
            term: term.to_string(),
            rank_1,
            rank_2,
            contribution: if raw == 0.0 { 0.0 } else { contribution },
        });
    }
    contributions.sort_by(|a, b| {
        b.contribution
            .abs()
            .partial_cmp(&a.contribution.abs())
            .unwrap()
            .then_with(|| a.term.cmp(&b.term))
    });

    Ok(RtdResult {
        alpha,
        contributions,
        normalization,
        total,
    })
}

/// Top-k contributions on the requested side, ordered by magnitude with
/// lexicographic tie-break.
pub fn top_divergent_terms(result: &RtdResult, k: usize, side: Side) -> Vec<&TermContribution> {
    result
        .contributions
        .iter()
        .filter(|c| match side {
            Side::Corpus1 => c.contribution > 0.0,
            Side::Corpus2 => c.contribution < 0.0,
        })
        .take(k)
        .collect()
}
