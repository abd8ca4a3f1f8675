//! One-sided exact binomial test with log-space terms, usable up to n ~ 10^6
//! without underflow.

use statrs::function::gamma::ln_gamma;

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// P(X >= k) under Binomial(n, p0). Small values indicate the count is
/// unlikely to be that extreme under the null rate. Requires 0 <= k <= n and
/// p0 in (0, 1).
pub fn binomial_test_one_sided(k: u64, n: u64, p0: f64) -> f64 {
    assert!(k <= n, "k must not exceed n");
    assert!(p0 > 0.0 && p0 < 1.0, "p0 must be in (0, 1)");
    if k == 0 {
        return 1.0;
    }
    let ln_p = p0.ln();
    let ln_q = (-p0).ln_1p();
    let ln_term = |i: u64| ln_choose(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q;

    // Terms are unimodal in i; anchor the log-sum-exp at the largest one.
    let mode = ((n + 1) as f64 * p0).floor() as u64;
    let anchor = mode.clamp(k, n);
    let ln_max = ln_term(anchor);
    let mut sum = 0.0;
    for i in k..=n {
        sum += (ln_term(i) - ln_max).exp();
    }
    (ln_max + sum.ln()).exp().clamp(0.0, 1.0)
}
