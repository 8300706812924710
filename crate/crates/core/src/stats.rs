//! Paired nonparametric testing for method comparison.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Alternative hypothesis for the signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    TwoSided,
    /// Median difference greater than zero.
    Greater,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Sample size after zero removal.
    pub n_used: usize,
    /// Whether the p-value came from exact enumeration.
    pub exact: bool,
}

/// Exact-enumeration threshold; beyond it the tie- and continuity-corrected
/// normal approximation takes over. 2^20 sign patterns is the cost ceiling.
pub const EXACT_LIMIT: usize = 20;

/// Wilcoxon signed-rank test on paired differences.
///
/// Zeros are dropped; absolute values are ranked with average ranks for
/// ties; `W` is the positive-rank sum. For `n <= 20` the null distribution
/// is computed exactly, otherwise a normal approximation with tie and
/// continuity corrections is used.
pub fn wilcoxon_signed_rank(diffs: &[f64], alternative: Alternative) -> Result<WilcoxonResult> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::argument("differences must be finite"));
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::DegenerateSample);
    }
    let n = nonzero.len();

    // Average ranks of |d|, doubled so ties stay integral.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nonzero[a].abs().total_cmp(&nonzero[b].abs()));
    let mut doubled_ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && nonzero[order[j]].abs() == nonzero[order[i]].abs() {
            j += 1;
        }
        // Positions i+1..=j share the average rank (i + j + 1) / 2.
        let doubled = (i + j + 1) as u64;
        for &idx in &order[i..j] {
            doubled_ranks[idx] = doubled;
        }
        tie_sizes.push(j - i);
        i = j;
    }

    let w2: u64 = nonzero
        .iter()
        .zip(&doubled_ranks)
        .filter(|(&d, _)| d > 0.0)
        .map(|(_, &r)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_p(&doubled_ranks, w2, alternative), true)
    } else {
        (normal_p(n, &tie_sizes, statistic, alternative), false)
    };
    Ok(WilcoxonResult {
        statistic,
        p_value: p_value.clamp(f64::MIN_POSITIVE, 1.0),
        n_used: n,
        exact,
    })
}

/// Exact tail probabilities of the positive-rank sum by dynamic programming
/// over the (doubled, integral) ranks; equivalent to enumerating all 2^n
/// sign assignments.
fn exact_p(doubled_ranks: &[u64], w2: u64, alternative: Alternative) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    for &r in doubled_ranks {
        let r = r as usize;
        for w in (r..counts.len()).rev() {
            counts[w] += counts[w - r];
        }
    }
    let scale = 2.0f64.powi(doubled_ranks.len() as i32);
    let tail_ge: f64 = counts[w2 as usize..].iter().sum::<f64>() / scale;
    let tail_le: f64 = counts[..=w2 as usize].iter().sum::<f64>() / scale;
    match alternative {
        Alternative::Greater => tail_ge,
        Alternative::TwoSided => (2.0 * tail_ge.min(tail_le)).min(1.0),
    }
}

fn normal_p(n: usize, tie_sizes: &[usize], statistic: f64, alternative: Alternative) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_correction: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            (t * t * t - t) / 48.0
        })
        .sum();
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_correction;
    let sd = variance.sqrt();
    let normal = Normal::standard();
    match alternative {
        Alternative::Greater => {
            let z = (statistic - mean - 0.5) / sd;
            1.0 - normal.cdf(z)
        }
        Alternative::TwoSided => {
            let z = ((statistic - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * (1.0 - normal.cdf(z))).min(1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Brute-force enumeration oracle over all 2^n sign assignments,
    /// independent of the DP in the implementation. Returns the observed
    /// statistic and both tail probabilities.
    fn enumerate_tails(diffs: &[f64]) -> (f64, f64, f64) {
        let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
        let n = nonzero.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| nonzero[a].abs().total_cmp(&nonzero[b].abs()));
        let mut ranks = vec![0.0; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j < n && nonzero[order[j]].abs() == nonzero[order[i]].abs() {
                j += 1;
            }
            let avg = (i + 1 + j) as f64 / 2.0;
            for &idx in &order[i..j] {
                ranks[idx] = avg;
            }
            i = j;
        }
        let w: f64 = nonzero
            .iter()
            .zip(&ranks)
            .filter(|(&d, _)| d > 0.0)
            .map(|(_, &r)| r)
            .sum();

        let mut ge = 0usize;
        let mut le = 0usize;
        for mask in 0..(1u64 << n) {
            let w_mask: f64 = (0..n)
                .filter(|&k| mask & (1 << k) != 0)
                .map(|k| ranks[k])
                .sum();
            if w_mask >= w - 1e-9 {
                ge += 1;
            }
            if w_mask <= w + 1e-9 {
                le += 1;
            }
        }
        let total = (1u64 << n) as f64;
        (w, ge as f64 / total, le as f64 / total)
    }

    fn enumerate_p(diffs: &[f64], alternative: Alternative) -> (f64, f64) {
        let (w, p_ge, p_le) = enumerate_tails(diffs);
        let p = match alternative {
            Alternative::Greater => p_ge,
            Alternative::TwoSided => (2.0 * p_ge.min(p_le)).min(1.0),
        };
        (w, p)
    }

    #[test]
    fn five_positive_differences_hit_the_exact_tail() {
        let diffs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = wilcoxon_signed_rank(&diffs, Alternative::Greater).unwrap();
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 1.0 / 32.0);
        assert!(r.exact);
        assert_eq!(r.n_used, 5);
    }

    #[test]
    fn antisymmetric_samples_are_fully_insignificant() {
        let diffs = [0.4, -0.4, 1.7, -1.7, 2.2, -2.2];
        let r = wilcoxon_signed_rank(&diffs, Alternative::TwoSided).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zeros_are_dropped_and_all_zero_samples_error() {
        let r = wilcoxon_signed_rank(&[0.0, 1.0, 2.0, 0.0, 3.0], Alternative::Greater).unwrap();
        assert_eq!(r.n_used, 3);
        assert_eq!(r.statistic, 6.0);
        assert_eq!(r.p_value, 1.0 / 8.0);

        assert!(matches!(
            wilcoxon_signed_rank(&[0.0, 0.0], Alternative::Greater),
            Err(Error::DegenerateSample)
        ));
    }

    #[test]
    fn dp_matches_brute_force_enumeration_with_ties() {
        let mut rng = crate::seeding::rng_from(1);
        for round in 0..60 {
            let n = 3 + round % 9;
            let diffs: Vec<f64> = (0..n)
                .map(|_| {
                    // Coarse lattice forces ties and sign mixtures.
                    let v = (rng.random::<f64>() * 8.0).round() / 4.0 - 1.0;
                    if v == 0.0 {
                        0.25
                    } else {
                        v
                    }
                })
                .collect();
            for alt in [Alternative::Greater, Alternative::TwoSided] {
                let ours = wilcoxon_signed_rank(&diffs, alt).unwrap();
                let (w, p) = enumerate_p(&diffs, alt);
                assert_eq!(ours.statistic, w, "{diffs:?}");
                assert!(
                    (ours.p_value - p).abs() < 1e-12,
                    "{diffs:?} {alt:?}: {} vs {p}",
                    ours.p_value
                );
            }
        }
    }

    #[test]
    fn normal_approximation_tracks_the_exact_p_at_n_12() {
        let mut rng = crate::seeding::rng_from(2);
        for _ in 0..100 {
            let diffs: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 2.0 - 0.8).collect();
            for alt in [Alternative::Greater, Alternative::TwoSided] {
                let exact = wilcoxon_signed_rank(&diffs, alt).unwrap();
                assert!(exact.exact);
                let approx = normal_p(
                    exact.n_used,
                    &vec![1; exact.n_used],
                    exact.statistic,
                    alt,
                );
                assert!(
                    (exact.p_value - approx).abs() < 0.02,
                    "{diffs:?} {alt:?}: exact {} approx {approx}",
                    exact.p_value
                );
            }
        }
    }

    #[test]
    fn large_samples_take_the_normal_path() {
        let mut rng = crate::seeding::rng_from(3);
        let diffs: Vec<f64> = (0..40).map(|_| rng.random::<f64>() - 0.3).collect();
        let r = wilcoxon_signed_rank(&diffs, Alternative::Greater).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }

    #[test]
    fn scaling_differences_leaves_the_test_invariant() {
        let mut rng = crate::seeding::rng_from(4);
        let diffs: Vec<f64> = (0..10).map(|_| rng.random::<f64>() - 0.4).collect();
        let scaled: Vec<f64> = diffs.iter().map(|d| d * 37.5).collect();
        for alt in [Alternative::Greater, Alternative::TwoSided] {
            let a = wilcoxon_signed_rank(&diffs, alt).unwrap();
            let b = wilcoxon_signed_rank(&scaled, alt).unwrap();
            assert_eq!(a.statistic, b.statistic);
            assert_eq!(a.p_value, b.p_value);
        }
    }

    #[test]
    fn negation_reflects_the_greater_sided_tail() {
        // Negating turns the positive-rank sum into total - W, so the
        // greater-sided p of the negated sample equals P(W <= w_obs) of the
        // original, point mass included.
        let mut rng = crate::seeding::rng_from(5);
        for _ in 0..20 {
            let diffs: Vec<f64> = (0..9).map(|_| rng.random::<f64>() - 0.35).collect();
            let negated: Vec<f64> = diffs.iter().map(|d| -d).collect();
            let neg = wilcoxon_signed_rank(&negated, Alternative::Greater).unwrap();
            let (_, _, p_le) = enumerate_tails(&diffs);
            assert!(
                (neg.p_value - p_le).abs() < 1e-9,
                "neg {} vs p_le {p_le}",
                neg.p_value
            );
        }
    }
}
