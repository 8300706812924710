//! Acquisition functions and weight-search strategies.
//!
//! Three searchers share one interface: random search, expected improvement
//! on pooled utility, and the equity-aware searcher that proposes a batch of
//! q points by Monte-Carlo expected hypervolume improvement over the
//! (utility, equity) front and serves the proposal with the highest equity
//! posterior mean. Constrained EI is available as an ablation arm.
//!
//! Every strategy returns low-discrepancy initialization points for the
//! first `n_init` iterations, so competing strategies start from identical
//! designs under the same seed.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::pareto::{hypervolume_gain, ParetoArchive};
use crate::sampling::{halton_points, uniform_points};
use crate::seeding::{derive_seed, rng_from};
use rand_distr::StandardNormal;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

fn std_normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

#[inline]
fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Closed-form expected improvement `E[(f - best)^+]` for a Gaussian belief.
/// A zero-sd belief degenerates to `max(mean - best, 0)`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    debug_assert!(sd >= 0.0);
    if sd == 0.0 {
        return (mean - best).max(0.0);
    }
    let z = (mean - best) / sd;
    ((mean - best) * std_normal_cdf(z) + sd * std_normal_pdf(z)).max(0.0)
}

/// Expected improvement gated by the probability that an independent
/// Gaussian constraint satisfies `c <= gamma`. A zero-sd constraint
/// degenerates to an indicator.
pub fn constrained_ei(mean: f64, sd: f64, best: f64, c_mean: f64, c_sd: f64, gamma: f64) -> f64 {
    debug_assert!(sd >= 0.0 && c_sd >= 0.0);
    let feasible = if c_sd == 0.0 {
        if c_mean <= gamma {
            1.0
        } else {
            0.0
        }
    } else {
        std_normal_cdf((gamma - c_mean) / c_sd)
    };
    expected_improvement(mean, sd, best) * feasible
}

/// Monte-Carlo expected hypervolume improvement at `x`: average gain of a
/// joint posterior sample `(utility, der)` over the archive's front, with
/// samples clamped to the reference (non-improving samples contribute 0).
/// Deterministic given the seed.
pub fn ehvi_mc(
    gp_utility: &GpModel,
    gp_der: &GpModel,
    x: &[f64],
    archive: &ParetoArchive,
    n_mc: usize,
    seed: u64,
) -> f64 {
    assert!(n_mc >= 1, "need at least one Monte-Carlo sample");
    let (mu_u, var_u) = gp_utility.posterior(x);
    let (mu_d, var_d) = gp_der.posterior(x);
    let (sd_u, sd_d) = (var_u.sqrt(), var_d.sqrt());

    let reference = archive.reference();
    let mut front = archive.clamped_front();
    front.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));

    let mut rng = rng_from(seed);
    let mut total = 0.0;
    for _ in 0..n_mc {
        let zu: f64 = rand::Rng::sample(&mut rng, StandardNormal);
        let zd: f64 = rand::Rng::sample(&mut rng, StandardNormal);
        let u = (mu_u + sd_u * zu).max(reference.0);
        let d = (mu_d + sd_d * zd).max(reference.1);
        total += hypervolume_gain(&front, reference, (u, d));
    }
    total / n_mc as f64
}

/// A scored proposal from the acquisition stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub alpha: Vec<f64>,
    pub acquisition_value: f64,
    pub der_posterior_mean: f64,
}

/// Draws a quasi-uniform pool, scores every point by [`ehvi_mc`], and keeps
/// the `q` highest-scoring distinct points with their equity posterior means
/// attached, best first.
pub fn propose_q(
    gp_utility: &GpModel,
    gp_der: &GpModel,
    archive: &ParetoArchive,
    q: usize,
    pool_size: usize,
    n_mc: usize,
    seed: u64,
) -> Result<Vec<Candidate>> {
    if q == 0 {
        return Err(Error::argument("q must be at least 1"));
    }
    if pool_size < q {
        return Err(Error::argument(format!(
            "pool size {pool_size} smaller than q = {q}"
        )));
    }
    let dim = gp_input_dim(gp_utility);
    let pool = halton_points(pool_size, dim, derive_seed(seed, &[0]));

    let mut scored: Vec<Candidate> = pool
        .into_iter()
        .enumerate()
        .map(|(i, alpha)| {
            let value = ehvi_mc(
                gp_utility,
                gp_der,
                &alpha,
                archive,
                n_mc,
                derive_seed(seed, &[1, i as u64]),
            );
            let (der_mean, _) = gp_der.posterior(&alpha);
            Candidate {
                alpha,
                acquisition_value: value,
                der_posterior_mean: der_mean,
            }
        })
        .collect();

    // Stable: ties keep pool order; distinct alphas only.
    scored.sort_by(|a, b| b.acquisition_value.total_cmp(&a.acquisition_value));
    let mut out: Vec<Candidate> = Vec::with_capacity(q);
    for c in scored {
        if out.iter().any(|kept| kept.alpha == c.alpha) {
            continue;
        }
        out.push(c);
        if out.len() == q {
            break;
        }
    }
    Ok(out)
}

fn gp_input_dim(gp: &GpModel) -> usize {
    gp.kernel().lengthscales.len()
}

/// Picks the proposal with the highest equity posterior mean; ties go to the
/// higher acquisition value, then the earlier candidate.
pub fn fair_select(candidates: &[Candidate]) -> Result<&Candidate> {
    if candidates.is_empty() {
        return Err(Error::argument("no candidates to select from"));
    }
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        let better = c.der_posterior_mean > best.der_posterior_mean
            || (c.der_posterior_mean == best.der_posterior_mean
                && c.acquisition_value > best.acquisition_value);
        if better {
            best = c;
        }
    }
    Ok(best)
}

/// Weight-search strategies compared by the experiment harness.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    RandomSearch,
    Ei,
    FairEhvi,
    /// Ablation: EI on utility gated by `P(der >= gamma)`.
    ConstrainedEi { gamma: f64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::RandomSearch => "random",
            Strategy::Ei => "ei",
            Strategy::FairEhvi => "fair_ehvi",
            Strategy::ConstrainedEi { .. } => "eic",
        }
    }

    /// Stable tag for seed derivation.
    pub(crate) fn seed_tag(&self) -> u64 {
        match self {
            Strategy::RandomSearch => 1,
            Strategy::Ei => 2,
            Strategy::FairEhvi => 3,
            Strategy::ConstrainedEi { .. } => 4,
        }
    }
}

/// One evaluated iteration of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub alpha: Vec<f64>,
    pub utility: f64,
    pub der: f64,
}

/// Shared knobs of the weight search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    /// Iterations served from the shared low-discrepancy design.
    pub n_init: usize,
    /// Acquisition pool size per iteration.
    pub pool_size: usize,
    /// Proposals per iteration for the equity-aware strategy.
    pub q: usize,
    /// Monte-Carlo samples per EHVI evaluation.
    pub n_mc: usize,
    /// Hypervolume reference point; both objectives are nonnegative here.
    pub reference: (f64, f64),
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            n_init: 5,
            pool_size: 512,
            q: 10,
            n_mc: 64,
            reference: (0.0, 0.0),
        }
    }
}

/// Proposes the next serving weights given everything observed so far.
///
/// The iteration index is `history.len()`. During the first `n_init`
/// iterations every strategy returns the same low-discrepancy design point
/// for the same seed; afterwards the strategy-specific logic runs on the
/// seed passed in.
pub fn next_alpha(
    strategy: &Strategy,
    dim: usize,
    history: &[Observation],
    seed: u64,
    settings: &SearchSettings,
) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::argument("alpha dimension must be at least 1"));
    }
    let iteration = history.len();
    if iteration < settings.n_init || history.len() < 2 {
        let design = halton_points(settings.n_init.max(iteration + 1), dim, seed);
        return Ok(design[iteration].clone());
    }

    let points: Vec<Vec<f64>> = history.iter().map(|o| o.alpha.clone()).collect();
    let utilities: Vec<f64> = history.iter().map(|o| o.utility).collect();

    match strategy {
        Strategy::RandomSearch => Ok(uniform_points(1, dim, seed).remove(0)),
        Strategy::Ei => {
            let gp = GpModel::fit(&points, &utilities)?;
            let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pool = halton_points(settings.pool_size, dim, derive_seed(seed, &[0]));
            let scored = pool.into_iter().map(|alpha| {
                let (mean, var) = gp.posterior(&alpha);
                let ei = expected_improvement(mean, var.sqrt(), best);
                (alpha, ei)
            });
            Ok(argmax_by_value(scored))
        }
        Strategy::FairEhvi => {
            let ders: Vec<f64> = history.iter().map(|o| o.der).collect();
            let gp_utility = GpModel::fit(&points, &utilities)?;
            let gp_der = GpModel::fit(&points, &ders)?;
            let mut archive = ParetoArchive::new(settings.reference);
            for o in history {
                archive.push(o.alpha.clone(), o.utility, o.der);
            }
            let candidates = propose_q(
                &gp_utility,
                &gp_der,
                &archive,
                settings.q,
                settings.pool_size,
                settings.n_mc,
                derive_seed(seed, &[1]),
            )?;
            Ok(fair_select(&candidates)?.alpha.clone())
        }
        Strategy::ConstrainedEi { gamma } => {
            let ders: Vec<f64> = history.iter().map(|o| o.der).collect();
            let gp_utility = GpModel::fit(&points, &utilities)?;
            let gp_der = GpModel::fit(&points, &ders)?;
            let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pool = halton_points(settings.pool_size, dim, derive_seed(seed, &[0]));
            let scored = pool.into_iter().map(|alpha| {
                let (mean, var) = gp_utility.posterior(&alpha);
                let (c_mean, c_var) = gp_der.posterior(&alpha);
                // Constraint der >= gamma, expressed as -der <= -gamma.
                let v = constrained_ei(mean, var.sqrt(), best, -c_mean, c_var.sqrt(), -gamma);
                (alpha, v)
            });
            Ok(argmax_by_value(scored))
        }
    }
}

fn argmax_by_value<I: Iterator<Item = (Vec<f64>, f64)>>(scored: I) -> Vec<f64> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (alpha, value) in scored {
        let replace = match &best {
            None => true,
            Some((_, bv)) => value > *bv,
        };
        if replace {
            best = Some((alpha, value));
        }
    }
    best.expect("nonempty pool").0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Kernel;

    #[test]
    fn ei_hand_values() {
        // E[X^+] for X ~ N(0,1) is phi(0).
        let at_best = expected_improvement(0.0, 1.0, 0.0);
        assert!((at_best - 0.398_942_280_401_432_7).abs() < 1e-12);

        assert_eq!(expected_improvement(0.3, 0.0, 0.5), 0.0);
        assert_eq!(expected_improvement(0.9, 0.0, 0.5), 0.4);

        let mut last = 0.0;
        for sd in [0.1, 0.5, 1.0] {
            let v = expected_improvement(0.0, sd, 0.0);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn ei_matches_quadrature_of_the_tail_expectation() {
        // Direct numerical integration of E[(X - best)^+], X ~ N(mean, sd^2).
        for &(mean, sd, best) in &[(0.2, 0.7, 0.5), (0.0, 1.0, 0.0), (-0.3, 0.4, 0.2)] {
            let steps = 400_000;
            let lo = best;
            let hi = mean + 10.0 * sd;
            let h = (hi - lo) / steps as f64;
            let mut integral = 0.0;
            for i in 0..steps {
                let x = lo + (i as f64 + 0.5) * h;
                let z = (x - mean) / sd;
                integral += (x - best) * std_normal_pdf(z) / sd * h;
            }
            let ei = expected_improvement(mean, sd, best);
            assert!((ei - integral).abs() < 1e-6, "ei {ei} vs quadrature {integral}");
        }
    }

    #[test]
    fn ei_limits_at_tiny_sd() {
        assert!((expected_improvement(0.7, 1e-12, 0.5) - 0.2).abs() < 1e-9);
        assert!(expected_improvement(0.3, 1e-12, 0.5) < 1e-9);
    }

    #[test]
    fn constrained_ei_degenerate_cases() {
        let ei = expected_improvement(0.8, 0.3, 0.5);
        // Infinite slack recovers plain EI.
        assert!((constrained_ei(0.8, 0.3, 0.5, 0.2, 0.1, f64::INFINITY) - ei).abs() < 1e-12);
        // Hard-infeasible point.
        assert_eq!(constrained_ei(0.8, 0.3, 0.5, 0.7, 0.0, 0.5), 0.0);
        // Boundary constraint halves the value.
        assert!((constrained_ei(0.8, 0.3, 0.5, 0.5, 1.0, 0.5) - ei / 2.0).abs() < 1e-12);
    }

    fn flat_gp(points: &[Vec<f64>], values: &[f64]) -> GpModel {
        let dim = points[0].len();
        GpModel::with_kernel(points, values, Kernel::new(vec![0.3; dim], 1.0, 1e-4).unwrap())
            .unwrap()
    }

    #[test]
    fn ehvi_is_zero_at_dominated_deterministic_posteriors() {
        // Tight posteriors pinned at a dominated point.
        let gp_u = flat_gp(&[vec![0.5], vec![0.6]], &[0.4, 0.4]);
        let gp_d = flat_gp(&[vec![0.5], vec![0.6]], &[0.4, 0.4]);
        let mut archive = ParetoArchive::new((0.0, 0.0));
        archive.push(vec![0.1], 0.9, 0.9);
        let v = ehvi_mc(&gp_u, &gp_d, &[0.55], &archive, 2000, 3);
        assert!(v < 1e-3, "ehvi {v}");
    }

    #[test]
    fn ehvi_recovers_the_deterministic_rectangle_gain() {
        let gp_u = flat_gp(&[vec![0.5], vec![0.5001]], &[0.8, 0.8]);
        let gp_d = flat_gp(&[vec![0.5], vec![0.5001]], &[0.6, 0.6]);
        let mut archive = ParetoArchive::new((0.0, 0.0));
        archive.push(vec![0.1], 0.5, 0.5);
        let v = ehvi_mc(&gp_u, &gp_d, &[0.5], &archive, 4000, 4);
        // (0.8, 0.6) dominates (0.5, 0.5): gain = 0.8 * 0.6 - 0.25.
        let exact = 0.8 * 0.6 - 0.25;
        assert!((v - exact).abs() < 0.02, "ehvi {v} vs exact {exact}");
        assert!(v >= 0.0);
    }

    #[test]
    fn ehvi_estimates_agree_across_sample_sizes() {
        let gp_u = flat_gp(&[vec![0.2], vec![0.8]], &[0.3, 0.7]);
        let gp_d = flat_gp(&[vec![0.2], vec![0.8]], &[0.6, 0.2]);
        let mut archive = ParetoArchive::new((0.0, 0.0));
        archive.push(vec![0.2], 0.3, 0.6);
        archive.push(vec![0.8], 0.7, 0.2);
        let coarse = ehvi_mc(&gp_u, &gp_d, &[0.5], &archive, 1000, 5);
        let fine = ehvi_mc(&gp_u, &gp_d, &[0.5], &archive, 100_000, 6);
        // Gains are bounded by ~1 here; 3 combined standard errors with a
        // conservative variance bound of 0.25.
        let se = 0.5 * (1.0f64 / 1000.0 + 1.0 / 100_000.0).sqrt();
        assert!((coarse - fine).abs() < 3.0 * se, "{coarse} vs {fine}");
    }

    #[test]
    fn ehvi_is_deterministic_given_the_seed() {
        let gp_u = flat_gp(&[vec![0.2], vec![0.8]], &[0.3, 0.7]);
        let gp_d = flat_gp(&[vec![0.2], vec![0.8]], &[0.6, 0.2]);
        let mut archive = ParetoArchive::new((0.0, 0.0));
        archive.push(vec![0.2], 0.3, 0.6);
        let a = ehvi_mc(&gp_u, &gp_d, &[0.5], &archive, 256, 7);
        let b = ehvi_mc(&gp_u, &gp_d, &[0.5], &archive, 256, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn propose_q_returns_the_top_of_the_pool() {
        let gp_u = flat_gp(&[vec![0.2, 0.2], vec![0.8, 0.8]], &[0.3, 0.9]);
        let gp_d = flat_gp(&[vec![0.2, 0.2], vec![0.8, 0.8]], &[0.5, 0.4]);
        let mut archive = ParetoArchive::new((0.0, 0.0));
        archive.push(vec![0.2, 0.2], 0.3, 0.5);

        let pool_size = 24;
        let all = propose_q(&gp_u, &gp_d, &archive, pool_size, pool_size, 128, 11).unwrap();
        assert_eq!(all.len(), pool_size);
        for w in all.windows(2) {
            assert!(w[0].acquisition_value >= w[1].acquisition_value);
        }

        let q = 5;
        let top = propose_q(&gp_u, &gp_d, &archive, q, pool_size, 128, 11).unwrap();
        assert_eq!(top.len(), q);
        assert_eq!(top, all[..q].to_vec());
        // Everything returned scores at least the (q+1)-th pool value.
        assert!(top.iter().all(|c| c.acquisition_value >= all[q].acquisition_value));
    }

    #[test]
    fn fair_select_prefers_equity_then_acquisition_then_order() {
        let mk = |der: f64, acq: f64| Candidate {
            alpha: vec![der, acq],
            acquisition_value: acq,
            der_posterior_mean: der,
        };
        let single = [mk(0.4, 1.0)];
        assert_eq!(fair_select(&single).unwrap(), &single[0]);

        let by_der = [mk(0.3, 9.0), mk(0.9, 0.1), mk(0.5, 5.0)];
        assert_eq!(fair_select(&by_der).unwrap(), &by_der[1]);

        let tied = [mk(0.5, 1.0), mk(0.5, 2.0)];
        assert_eq!(fair_select(&tied).unwrap(), &tied[1]);

        let fully_tied = [mk(0.5, 2.0), mk(0.5, 2.0)];
        assert!(std::ptr::eq(fair_select(&fully_tied).unwrap(), &fully_tied[0]));

        assert!(matches!(fair_select(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn all_strategies_share_initialization_points() {
        let settings = SearchSettings::default();
        let history = Vec::new();
        let seed = 77;
        let a = next_alpha(&Strategy::RandomSearch, 2, &history, seed, &settings).unwrap();
        let b = next_alpha(&Strategy::Ei, 2, &history, seed, &settings).unwrap();
        let c = next_alpha(&Strategy::FairEhvi, 2, &history, seed, &settings).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn ei_strategy_homes_in_on_a_dominant_peak() {
        // History traces a single smooth utility peak at (0.7, 0.3).
        let mut history = Vec::new();
        for point in halton_points(24, 2, 13) {
            let u = (-4.0 * ((point[0] - 0.7).powi(2) + (point[1] - 0.3).powi(2))).exp();
            history.push(Observation {
                alpha: point,
                utility: u,
                der: 0.5,
            });
        }
        let settings = SearchSettings::default();
        let next = next_alpha(&Strategy::Ei, 2, &history, 21, &settings).unwrap();

        // Dense-grid oracle for the EI maximizer under the same GP.
        let points: Vec<Vec<f64>> = history.iter().map(|o| o.alpha.clone()).collect();
        let values: Vec<f64> = history.iter().map(|o| o.utility).collect();
        let gp = GpModel::fit(&points, &values).unwrap();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut oracle = (vec![0.0, 0.0], f64::NEG_INFINITY);
        for gx in 0..=60 {
            for gy in 0..=60 {
                let alpha = vec![gx as f64 / 60.0, gy as f64 / 60.0];
                let (mean, var) = gp.posterior(&alpha);
                let ei = expected_improvement(mean, var.sqrt(), best);
                if ei > oracle.1 {
                    oracle = (alpha, ei);
                }
            }
        }
        let dist = ((next[0] - oracle.0[0]).powi(2) + (next[1] - oracle.0[1]).powi(2)).sqrt();
        assert!(dist < 0.2, "next {next:?} vs oracle {:?}", oracle.0);
    }

    #[test]
    fn random_search_is_uniform_by_chi_square() {
        // 1000 draws over the 16 quadrant cells of [0,1]^2.
        let draws = 1000;
        let mut counts = [0usize; 16];
        for i in 0..draws {
            let p = next_alpha(
                &Strategy::RandomSearch,
                2,
                &dummy_history(6),
                derive_seed(31, &[i as u64]),
                &SearchSettings::default(),
            )
            .unwrap();
            let cx = ((p[0] * 4.0) as usize).min(3);
            let cy = ((p[1] * 4.0) as usize).min(3);
            counts[cx * 4 + cy] += 1;
        }
        let expected = draws as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // p > 0.001 for chi-square with 15 dof means chi2 below ~37.7.
        let dist = statrs::distribution::ChiSquared::new(15.0).unwrap();
        let p = 1.0 - dist.cdf(chi2);
        assert!(p > 0.001, "chi2 {chi2}, p {p}");
    }

    fn dummy_history(n: usize) -> Vec<Observation> {
        halton_points(n, 2, 1)
            .into_iter()
            .enumerate()
            .map(|(i, alpha)| Observation {
                alpha,
                utility: 0.1 * i as f64,
                der: 0.5,
            })
            .collect()
    }

    #[test]
    fn fair_ehvi_proposals_concentrate_near_the_acquisition_peak() {
        // A front far below the posterior surface: everything improves, and
        // the EHVI ranking should favor the high-mean corner.
        let mut history = Vec::new();
        for point in halton_points(30, 2, 17) {
            let u = 0.2 + 0.7 * point[0];
            let d = 0.2 + 0.7 * point[1];
            history.push(Observation {
                alpha: point,
                utility: u,
                der: d,
            });
        }
        let points: Vec<Vec<f64>> = history.iter().map(|o| o.alpha.clone()).collect();
        let gp_u = GpModel::fit(&points, &history.iter().map(|o| o.utility).collect::<Vec<_>>())
            .unwrap();
        let gp_d = GpModel::fit(&points, &history.iter().map(|o| o.der).collect::<Vec<_>>())
            .unwrap();
        let mut archive = ParetoArchive::new((0.0, 0.0));
        archive.push(vec![0.1, 0.1], 0.05, 0.05); // far below the surface

        let candidates = propose_q(&gp_u, &gp_d, &archive, 10, 256, 256, 19).unwrap();

        // Grid oracle for the EHVI maximizer.
        let mut oracle = (vec![0.0, 0.0], f64::NEG_INFINITY);
        for gx in 0..=40 {
            for gy in 0..=40 {
                let alpha = vec![gx as f64 / 40.0, gy as f64 / 40.0];
                let v = ehvi_mc(&gp_u, &gp_d, &alpha, &archive, 2048, 23);
                if v > oracle.1 {
                    oracle = (alpha, v);
                }
            }
        }
        let mean_dist: f64 = candidates
            .iter()
            .map(|c| {
                ((c.alpha[0] - oracle.0[0]).powi(2) + (c.alpha[1] - oracle.0[1]).powi(2)).sqrt()
            })
            .sum::<f64>()
            / candidates.len() as f64;
        assert!(
            mean_dist < 0.25,
            "proposals scatter {mean_dist} from oracle {:?}",
            oracle.0
        );
    }
}
