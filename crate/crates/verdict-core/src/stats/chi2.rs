//! Chi-square test of independence for 2x2 tables with the phi effect size.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Result {
    pub chi2: f64,
    pub dof: usize,
    pub p: f64,
    /// sqrt(chi2 / N); association strength controlled for sample size.
    pub phi: f64,
}

/// Closed-form 2x2 chi-square without continuity correction:
/// N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)). All four marginals must be
/// positive.
pub fn chi_square_phi(table: [[u64; 2]; 2]) -> Result<Chi2Result, StatsError> {
    let [[a, b], [c, d]] = table;
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let col2 = b + d;
    if row1 == 0 || row2 == 0 || col1 == 0 || col2 == 0 {
        return Err(StatsError::ZeroMarginal);
    }
    let n = (a + b + c + d) as f64;
    let det = a as i128 * d as i128 - b as i128 * c as i128;
    let det = det as f64;
    let denom = row1 as f64 * row2 as f64 * col1 as f64 * col2 as f64;
    let chi2 = n * det * det / denom;
    let dist = ChiSquared::new(1.0).expect("dof 1 is valid");
    let p = (1.0 - dist.cdf(chi2)).clamp(0.0, 1.0);
    Ok(Chi2Result {
        chi2,
        dof: 1,
        p,
        phi: (chi2 / n).sqrt(),
    })
}
