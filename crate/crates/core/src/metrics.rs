//! Equity and diagnostic metrics.
//!
//! - `der`: deviation-from-equal-representation over per-group outcome
//!   means, renormalized so 1 is perfect equality and 0 maximal disparity.
//! - `shared_space`: the normalized harmonic-style overlap of two context
//!   distributions, the common ground on which groups are compared.
//! - `decompose_gap`: exact three-term split of the between-group utility
//!   gap into two covariate-shift terms and one preference term.
//! - `preference_gap_bound`: closed-form upper bound on the preference term
//!   driven by scorer residuals and preference misspecification.
//! - `retrieval_quality` / `retrieval_degradation_check`: expected best
//!   retrievable item goodness, and the constructed-regime check that a
//!   retrieval-quality gap forces a utility gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{
    candidate_sets, dot, serve, utility_profile, utility_profile_with_sets, RetrievalKind,
    RetrievalPolicy, ServingWeights,
};
use crate::sampling::alpha_grid;
use crate::seeding::derive_seed;
use crate::world::World;

/// Per-group aggregates from a simulated batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub mean_expected_utility: Vec<f64>,
    pub mean_realized_utility: Vec<f64>,
    pub counts: Vec<usize>,
    pub empty_flags: Vec<bool>,
}

impl GroupOutcome {
    /// Mean realized utility over the whole batch, groups pooled.
    pub fn pooled_realized_mean(&self) -> f64 {
        let total: usize = self.counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        self.mean_realized_utility
            .iter()
            .zip(&self.counts)
            .map(|(&m, &n)| m * n as f64)
            .sum::<f64>()
            / total as f64
    }

    pub fn any_empty(&self) -> bool {
        self.empty_flags.iter().any(|&e| e)
    }
}

/// Deviation from equal representation over nonnegative group means:
/// `1 - k/(k-1) * sum_k (mu_k / sum(mu) - 1/k)^2`.
///
/// Scale invariant, permutation invariant, 1 iff all means are equal, 0 at
/// maximal two-group disparity. An all-zero vector counts as equal means.
pub fn der(mu: &[f64]) -> Result<f64> {
    if mu.len() < 2 {
        return Err(Error::argument("der needs at least two group means"));
    }
    if mu.iter().any(|&m| !m.is_finite() || m < 0.0) {
        return Err(Error::argument("der requires finite nonnegative means"));
    }
    let total: f64 = mu.iter().sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    let k = mu.len() as f64;
    let spread: f64 = mu
        .iter()
        .map(|&m| {
            let d = m / total - 1.0 / k;
            d * d
        })
        .sum();
    Ok(1.0 - k / (k - 1.0) * spread)
}

/// Normalized shared-space distribution over contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedDistribution {
    weights: Vec<f64>,
}

impl SharedDistribution {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Shared space of two context distributions: unnormalized
/// `s(x) = p1(x) p0(x) / (p1(x) + p0(x))`, zero where either side is zero,
/// returned normalized. Coinciding inputs return the input itself, exactly.
pub fn shared_space(p1: &[f64], p0: &[f64]) -> Result<SharedDistribution> {
    if p1.len() != p0.len() {
        return Err(Error::argument("context distributions differ in length"));
    }
    for v in [p1, p0] {
        if v.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::argument("context distributions must be nonnegative"));
        }
    }
    if p1 == p0 {
        return Ok(SharedDistribution {
            weights: p1.to_vec(),
        });
    }
    let raw: Vec<f64> = p1
        .iter()
        .zip(p0)
        .map(|(&a, &b)| if a + b == 0.0 { 0.0 } else { a * b / (a + b) })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Err(Error::DisjointSupport);
    }
    Ok(SharedDistribution {
        weights: raw.iter().map(|&w| w / total).collect(),
    })
}

/// Exact three-term expansion of the between-group expected-utility gap.
/// The terms sum to `total_gap` up to float roundoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDecomposition {
    /// Utility change moving group 1's context distribution to the shared one.
    pub term_x_shift_1: f64,
    /// Between-group utility gap on the shared space; the preference term.
    pub term_preference: f64,
    /// Utility change moving the shared distribution to group 0's.
    pub term_x_shift_2: f64,
    pub total_gap: f64,
}

fn require_two_groups(world: &World) -> Result<()> {
    if world.n_groups() != 2 {
        return Err(Error::argument(format!(
            "gap decomposition is defined for exactly two groups, world has {}",
            world.n_groups()
        )));
    }
    Ok(())
}

/// Splits `E_1[U_1] - E_0[U_0]` into the two covariate-shift terms and the
/// shared-space preference term, all as exact context sums.
pub fn decompose_gap(
    world: &World,
    policy: &RetrievalPolicy,
    weights: &ServingWeights,
) -> Result<GapDecomposition> {
    require_two_groups(world)?;
    let p1 = &world.config().context_dist[1];
    let p0 = &world.config().context_dist[0];
    let shared = shared_space(p1, p0)?;
    let s = shared.weights();

    let u1 = utility_profile(world, policy, weights, 1)?;
    let u0 = utility_profile(world, policy, weights, 0)?;

    let term_x_shift_1 = dot(p1, &u1) - dot(s, &u1);
    let term_preference: f64 = s
        .iter()
        .zip(u1.iter().zip(&u0))
        .map(|(&w, (&a, &b))| w * (a - b))
        .sum();
    let term_x_shift_2 = dot(s, &u0) - dot(p0, &u0);
    let total_gap = dot(p1, &u1) - dot(p0, &u0);
    Ok(GapDecomposition {
        term_x_shift_1,
        term_preference,
        term_x_shift_2,
        total_gap,
    })
}

/// Upper bound on the preference term from scorer residuals and preference
/// misspecification, evaluated exactly on the shared space:
/// `sum_k E_S[ |a1*-a0*| E|Y-f| + |a-a0*| f + |a-a1*| f ]` at the served
/// item, with `E|Y-f| = f(1-p) + (1-f)p` in closed form for Bernoulli labels.
pub fn preference_gap_bound(
    world: &World,
    policy: &RetrievalPolicy,
    weights: &ServingWeights,
) -> Result<f64> {
    require_two_groups(world)?;
    if !policy.is_deterministic() {
        return Err(Error::UnsupportedPolicy(policy.kind.name().to_string()));
    }
    let cfg = world.config();
    let shared = shared_space(&cfg.context_dist[1], &cfg.context_dist[0])?;
    let prefs0 = &cfg.true_prefs[0];
    let prefs1 = &cfg.true_prefs[1];
    let alpha = weights.values();

    let sets = candidate_sets(world, policy, 0)?;
    let mut bound = 0.0;
    for (x, weight) in shared.weights().iter().enumerate() {
        if *weight == 0.0 {
            continue;
        }
        let served = serve(world, x, &sets[x], weights)?;
        let mut inner = 0.0;
        for k in 0..world.n_labels() {
            let p = world.outcome_prob(x, served, k);
            let f = world.scorer_output(x, served, k);
            let residual = f * (1.0 - p) + (1.0 - f) * p;
            inner += (prefs1[k] - prefs0[k]).abs() * residual
                + (alpha[k] - prefs0[k]).abs() * f
                + (alpha[k] - prefs1[k]).abs() * f;
        }
        bound += weight * inner;
    }
    Ok(bound)
}

/// Expected goodness of the best retrievable item under `context_weights`:
/// `Q = sum_x w(x) max_{j in C(x)} sum_k p[x][j][k]`. Deterministic
/// policies only; stochastic realizations go through
/// [`retrieval_degradation_check`] or `run_batch`.
pub fn retrieval_quality(
    world: &World,
    policy: &RetrievalPolicy,
    context_weights: &[f64],
) -> Result<f64> {
    if !policy.is_deterministic() {
        return Err(Error::UnsupportedPolicy(policy.kind.name().to_string()));
    }
    let sets = candidate_sets(world, policy, 0)?;
    retrieval_quality_with_sets(world, &sets, context_weights)
}

fn retrieval_quality_with_sets(
    world: &World,
    sets: &[Vec<usize>],
    context_weights: &[f64],
) -> Result<f64> {
    if context_weights.len() != world.n_contexts() {
        return Err(Error::argument(format!(
            "context weights have length {}, expected {}",
            context_weights.len(),
            world.n_contexts()
        )));
    }
    let mut q = 0.0;
    for (x, &w) in context_weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let best = sets[x]
            .iter()
            .map(|&j| world.total_outcome(x, j))
            .fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() {
            return Err(Error::EmptyCandidates);
        }
        q += w * best;
    }
    Ok(q)
}

/// Result of the retrieval-degradation construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationReport {
    /// Retrieval-quality gap: Q under P(x|G=1) minus Q under the shared space.
    pub epsilon: f64,
    /// `sup_a E_1[U_1] - sup_a E_S[U_1]` over the evaluation grid.
    pub sup_difference: f64,
    /// `epsilon * min_k true_prefs[1][k]`, the floor the gap must exceed.
    pub bound: f64,
    pub bound_satisfied: bool,
    /// Whether the measured epsilon reaches the requested target.
    pub meets_epsilon_target: bool,
    pub grid_points_per_axis: usize,
}

pub const DEGRADATION_GRID_POINTS: usize = 41;

/// Checks that a degraded retriever's quality gap lower-bounds the utility
/// gap, in the constructed regime: a calibrated world and a `GroupDegraded`
/// policy. The stochastic candidate sets are realized once from a seed
/// derived from the world seed, then everything is computed exactly.
pub fn retrieval_degradation_check(
    world: &World,
    policy: &RetrievalPolicy,
    epsilon_target: f64,
) -> Result<DegradationReport> {
    retrieval_degradation_check_with_grid(world, policy, epsilon_target, DEGRADATION_GRID_POINTS)
}

/// [`retrieval_degradation_check`] with an explicit grid resolution; used by
/// refinement cross-checks.
pub fn retrieval_degradation_check_with_grid(
    world: &World,
    policy: &RetrievalPolicy,
    epsilon_target: f64,
    points_per_axis: usize,
) -> Result<DegradationReport> {
    require_two_groups(world)?;
    if world.config().miscalibration != 0.0 {
        return Err(Error::argument(
            "degradation check requires a calibrated world (miscalibration = 0)",
        ));
    }
    if !matches!(policy.kind, RetrievalKind::GroupDegraded { .. }) {
        return Err(Error::argument(
            "degradation check requires a GroupDegraded policy",
        ));
    }
    policy.validate(world)?;

    let cfg = world.config();
    let p1 = &cfg.context_dist[1];
    let shared = shared_space(p1, &cfg.context_dist[0])?;
    let sets = candidate_sets(world, policy, derive_seed(cfg.seed, &[u64::from(b'Q')]))?;

    let q1 = retrieval_quality_with_sets(world, &sets, p1)?;
    let qs = retrieval_quality_with_sets(world, &sets, shared.weights())?;
    let epsilon = q1 - qs;
    if epsilon <= 0.0 {
        return Err(Error::InapplicableConstruction(format!(
            "measured retrieval-quality gap {epsilon} is not positive"
        )));
    }

    let mut sup_1 = f64::NEG_INFINITY;
    let mut sup_s = f64::NEG_INFINITY;
    for alpha in alpha_grid(world.n_labels(), points_per_axis) {
        let weights = ServingWeights::new(alpha)?;
        let profile = utility_profile_with_sets(world, &sets, &weights, 1)?;
        sup_1 = sup_1.max(dot(p1, &profile));
        sup_s = sup_s.max(dot(shared.weights(), &profile));
    }
    let sup_difference = sup_1 - sup_s;
    let bound = epsilon
        * cfg.true_prefs[1]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
    Ok(DegradationReport {
        epsilon,
        sup_difference,
        bound,
        bound_satisfied: sup_difference >= bound,
        meets_epsilon_target: epsilon >= epsilon_target,
        grid_points_per_axis: points_per_axis,
    })
}
