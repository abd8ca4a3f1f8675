//! Lorenz curve and Gini coefficient over nonnegative quantities, computed
//! two ways and cross-checked.

use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct LorenzResult {
    /// Cumulative (population share, quantity share) points from (0,0) to
    /// (1,1), nondecreasing in both coordinates.
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
}

/// Gini from the trapezoidal area under the Lorenz curve, cross-checked
/// against the mean-absolute-difference identity to 1e-12.
pub fn lorenz_gini(quantities: &[f64]) -> Result<LorenzResult, StatsError> {
    if quantities.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if let Some(i) = quantities.iter().position(|q| *q < 0.0 || !q.is_finite()) {
        return Err(StatsError::NegativeQuantity(i));
    }
    let total: f64 = quantities.iter().sum();
    if total <= 0.0 {
        return Err(StatsError::AllZero);
    }

    let mut sorted = quantities.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let nf = n as f64;

    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let mut cumulative = 0.0;
    for (i, q) in sorted.iter().enumerate() {
        cumulative += q;
        points.push(((i + 1) as f64 / nf, cumulative / total));
    }

    // Trapezoidal area under the curve; population shares step by 1/n.
    let mut twice_area = 0.0;
    for w in points.windows(2) {
        twice_area += (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
    }
    let gini_trapezoid = 1.0 - twice_area;

    // Pairwise-difference identity on sorted data:
    // sum_{i,j} |x_i - x_j| = 2 * sum_k (2k - n - 1) x_(k), 1-indexed.
    let mut weighted = 0.0;
    for (k, q) in sorted.iter().enumerate() {
        weighted += (2.0 * (k + 1) as f64 - nf - 1.0) * q;
    }
    let gini_pairwise = weighted / (nf * total);

    if (gini_trapezoid - gini_pairwise).abs() > 1e-12 {
        return Err(StatsError::GiniCrossCheck {
            trapezoid: gini_trapezoid,
            pairwise: gini_pairwise,
        });
    }

    Ok(LorenzResult {
        points,
        gini: gini_trapezoid,
    })
}
