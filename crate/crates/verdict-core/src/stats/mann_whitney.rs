//! Mann-Whitney U with fractional ranks on ties, tie-corrected normal
//! approximation, and exact enumeration for small samples.

use statrs::distribution::{ContinuousCDF, Normal};

/// Pooled sample sizes at or below this use the exact permutation
/// distribution for the p-value; enumeration is cheap there and exactness
/// aids testing.
const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct MwResult {
    /// U statistic of the first sample (pairs where x beats y, ties
    /// half-weighted).
    pub u: f64,
    /// Tie-corrected normal approximation with continuity correction 0.5.
    pub z: f64,
    pub p_two_tailed: f64,
    /// 2 * CLES - 1, in [-1, 1].
    pub effect_rank_biserial: f64,
    /// Probability a random x exceeds a random y, ties half-weighted.
    pub effect_cles: f64,
}

/// U statistic of the x-group from fractional rank sums over the pooled
/// sorted sample: U_x = R_x - n1(n1+1)/2, which counts pairs where x beats y
/// with ties half-weighted. O(n log n).
fn u_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    let mut pooled: Vec<(f64, bool)> = xs
        .iter()
        .map(|&v| (v, true))
        .chain(ys.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut rank_sum_x = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        rank_sum_x += rank * pooled[i..j].iter().filter(|(_, is_x)| *is_x).count() as f64;
        i = j;
    }
    let n1 = xs.len() as f64;
    rank_sum_x - n1 * (n1 + 1.0) / 2.0
}

/// Two-tailed Mann-Whitney test of `xs` against `ys`. Both samples must be
/// nonempty.
pub fn mann_whitney(xs: &[f64], ys: &[f64]) -> MwResult {
    assert!(!xs.is_empty() && !ys.is_empty(), "both samples must be nonempty");
    let n1 = xs.len();
    let n2 = ys.len();
    let u = u_statistic(xs, ys);
    let n1n2 = (n1 * n2) as f64;
    let cles = u / n1n2;

    // Tie correction needs the tie-group sizes of the pooled sample.
    let mut pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = pooled.len();
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j] == pooled[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let mean = n1n2 / 2.0;
    let nf = n as f64;
    let variance = if n > 1 {
        n1n2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)))
    } else {
        0.0
    };
    let z = if variance > 0.0 {
        let d = u - mean;
        let corrected = if d.abs() <= 0.5 {
            0.0
        } else {
            d - 0.5 * d.signum()
        };
        corrected / variance.sqrt()
    } else {
        0.0
    };

    let p_two_tailed = if n1 + n2 <= EXACT_LIMIT {
        exact_p_two_tailed(&pooled, n1, u)
    } else {
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0)
    };

    MwResult {
        u,
        z,
        p_two_tailed,
        effect_rank_biserial: 2.0 * cles - 1.0,
        effect_cles: cles,
    }
}

/// Exact permutation p: enumerate every split of the pooled values into
/// groups of the observed sizes and double the smaller tail of the U
/// distribution.
fn exact_p_two_tailed(pooled: &[f64], n1: usize, u_obs: f64) -> f64 {
    let mut le = 0u64;
    let mut ge = 0u64;
    let mut total = 0u64;
    let mut in_x = vec![false; pooled.len()];
    enumerate_splits(pooled, n1, 0, &mut in_x, &mut |mask| {
        let mut u = 0.0;
        for (i, x) in pooled.iter().enumerate() {
            if !mask[i] {
                continue;
            }
            for (j, y) in pooled.iter().enumerate() {
                if mask[j] {
                    continue;
                }
                if x > y {
                    u += 1.0;
                } else if x == y {
                    u += 0.5;
                }
            }
        }
        total += 1;
        if u <= u_obs + 1e-9 {
            le += 1;
        }
        if u >= u_obs - 1e-9 {
            ge += 1;
        }
    });
    let tail = le.min(ge) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}

fn enumerate_splits(
    pooled: &[f64],
    remaining: usize,
    start: usize,
    in_x: &mut Vec<bool>,
    visit: &mut impl FnMut(&[bool]),
) {
    if remaining == 0 {
        visit(in_x);
        return;
    }
    // Not enough elements left to fill the group.
    if pooled.len() - start < remaining {
        return;
    }
    for i in start..pooled.len() {
        in_x[i] = true;
        enumerate_splits(pooled, remaining - 1, i + 1, in_x, visit);
        in_x[i] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_separated_groups() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(r.u, 0.0);
        assert!((r.p_two_tailed - 0.1).abs() < 1e-12); // 2 * 1/20
        assert_eq!(r.effect_cles, 0.0);
        assert_eq!(r.effect_rank_biserial, -1.0);
    }

    #[test]
    fn identical_samples_are_null() {
        let xs = [3.0, 1.0, 2.0, 2.0];
        let r = mann_whitney(&xs, &xs);
        assert_eq!(r.effect_cles, 0.5);
        assert_eq!(r.effect_rank_biserial, 0.0);
        assert_eq!(r.z, 0.0);
        assert!(r.p_two_tailed > 0.9);
    }

    #[test]
    fn all_pairs_won() {
        let r = mann_whitney(&[10.0, 11.0], &[1.0, 2.0]);
        assert_eq!(r.u, 4.0);
        assert_eq!(r.effect_cles, 1.0);
    }

    #[test]
    fn u_sum_identity() {
        let xs = [1.0, 5.0, 5.0, 9.0];
        let ys = [2.0, 5.0, 7.0];
        let ux = mann_whitney(&xs, &ys).u;
        let uy = mann_whitney(&ys, &xs).u;
        assert_eq!(ux + uy, (xs.len() * ys.len()) as f64);
    }

    #[test]
    fn normal_branch_reasonable() {
        // n1 + n2 > 12 forces the normal approximation.
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..10).map(|i| (i + 20) as f64).collect();
        let r = mann_whitney(&xs, &ys);
        assert_eq!(r.u, 0.0);
        assert!(r.p_two_tailed < 0.001);
        assert!(r.z < -3.0);
    }

    // Brute force over all label assignments by bitmask; independent of the
    // recursive enumeration in the implementation.
    fn brute_force_p(xs: &[f64], ys: &[f64]) -> f64 {
        let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
        let n = pooled.len();
        let n1 = xs.len();
        let u_obs = u_statistic(xs, ys);
        let mut le = 0u64;
        let mut ge = 0u64;
        let mut total = 0u64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let gx: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pooled[i]).collect();
            let gy: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| pooled[i]).collect();
            let u = u_statistic(&gx, &gy);
            total += 1;
            if u <= u_obs + 1e-9 {
                le += 1;
            }
            if u >= u_obs - 1e-9 {
                ge += 1;
            }
        }
        (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
    }

    #[test]
    fn exact_branch_matches_brute_force() {
        let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![1.0, 2.0], vec![3.0, 4.0]),
            (vec![1.0, 1.0, 2.0], vec![1.0, 3.0]),
            (vec![5.0], vec![1.0, 2.0, 3.0]),
            (vec![2.0, 2.0, 2.0], vec![2.0, 2.0]),
            (vec![1.0, 4.0, 2.0, 8.0], vec![3.0, 3.0, 5.0]),
        ];
        for (xs, ys) in cases {
            let r = mann_whitney(&xs, &ys);
            let expected = brute_force_p(&xs, &ys);
            assert!(
                (r.p_two_tailed - expected).abs() < 1e-12,
                "xs={xs:?} ys={ys:?}: {} vs {expected}",
                r.p_two_tailed
            );
        }
    }

    proptest! {
        #[test]
        fn cles_identity(
            xs in proptest::collection::vec(0.0f64..10.0, 1..12),
            ys in proptest::collection::vec(0.0f64..10.0, 1..12),
        ) {
            let r = mann_whitney(&xs, &ys);
            let n1n2 = (xs.len() * ys.len()) as f64;
            prop_assert!((r.effect_cles - r.u / n1n2).abs() < 1e-12);
            prop_assert!((r.effect_rank_biserial - (2.0 * r.effect_cles - 1.0)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.p_two_tailed));
        }

        #[test]
        fn exact_agrees_with_brute_force_random(
            xs in proptest::collection::vec(0i8..4, 1..6),
            ys in proptest::collection::vec(0i8..4, 1..6),
        ) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let ys: Vec<f64> = ys.into_iter().map(f64::from).collect();
            let r = mann_whitney(&xs, &ys);
            prop_assert!((r.p_two_tailed - brute_force_p(&xs, &ys)).abs() < 1e-12);
        }
    }
}
