//! Inferential toolkit: Mann-Whitney U, one-sided exact binomial test,
//! Lorenz/Gini, chi-square independence with phi, Bonferroni correction, and
//! odds-ratio interpretation.

mod binomial;
mod chi2;
mod gini;
mod mann_whitney;

pub use binomial::binomial_test_one_sided;
pub use chi2::{chi_square_phi, Chi2Result};
pub use gini::{lorenz_gini, LorenzResult};
pub use mann_whitney::{mann_whitney, MwResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("all quantities are zero")]
    AllZero,
    #[error("negative quantity at index {0}")]
    NegativeQuantity(usize),
    #[error("contingency table has a zero marginal")]
    ZeroMarginal,
    #[error("gini cross-check diverged: trapezoid {trapezoid} vs pairwise {pairwise}")]
    GiniCrossCheck { trapezoid: f64, pairwise: f64 },
}

/// Family-wise adjustment: each p becomes min(1, m * p). `m` defaults to the
/// number of p-values.
pub fn bonferroni(pvals: &[f64], m: Option<usize>) -> Vec<f64> {
    let m = m.unwrap_or(pvals.len()) as f64;
    pvals.iter().map(|p| (m * p).min(1.0)).collect()
}

/// Percent change in odds implied by a logistic-regression coefficient:
/// 100 * (exp(b) - 1).
pub fn odds_ratio_percent(coefficient: f64) -> f64 {
    100.0 * (coefficient.exp() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bonferroni_basic() {
        assert_eq!(bonferroni(&[0.01, 0.2], Some(2)), vec![0.02, 0.4]);
        assert_eq!(bonferroni(&[0.9], Some(10)), vec![1.0]);
        assert!(bonferroni(&[], None).is_empty());
    }

    #[test]
    fn odds_ratio_reference_points() {
        assert!((odds_ratio_percent(0.3076) - 36.0).abs() < 0.1);
        assert!((odds_ratio_percent(0.3814) - 46.4).abs() < 0.1);
        assert_eq!(odds_ratio_percent(0.0), 0.0);
    }

    proptest! {
        // Odds percents compose multiplicatively, not additively.
        #[test]
        fn odds_ratio_multiplicative(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let lhs = (1.0 + odds_ratio_percent(a) / 100.0) * (1.0 + odds_ratio_percent(b) / 100.0);
            let rhs = 1.0 + odds_ratio_percent(a + b) / 100.0;
            prop_assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
        }

        #[test]
        fn bonferroni_order_and_clamp(ps in proptest::collection::vec(0.0f64..=1.0, 0..10)) {
            let adj = bonferroni(&ps, None);
            prop_assert_eq!(adj.len(), ps.len());
            for (p, a) in ps.iter().zip(&adj) {
                prop_assert!(*a <= 1.0 + 1e-15);
                prop_assert!(*a >= *p - 1e-15);
            }
        }
    }
}
