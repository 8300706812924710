//! The retrieve -> score -> serve pipeline and its utility accounting.
//!
//! Retrieval reduces the corpus to `m` candidates per context, serving picks
//! the argmax of the weighted scorer outputs, and utility is measured against
//! each group's true preferences: exactly (conditional expectations summed
//! over the finite context set) or realized (sampled labels at the served
//! item, the signal the optimization loop consumes).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::GroupOutcome;
use crate::seeding::{derive_seed, rng_from};
use crate::world::{sample_outcomes, UserBatch, World};
use rand::seq::SliceRandom;
use rand::Rng;

/// Global serving weights over the label scores; the optimization variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServingWeights {
    alpha: Vec<f64>,
}

impl ServingWeights {
    /// Requires every entry nonnegative and at least one strictly positive.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::argument("serving weights must not be empty"));
        }
        if alpha.iter().any(|&a| !a.is_finite() || a < 0.0) {
            return Err(Error::argument("serving weights must be finite and nonnegative"));
        }
        if alpha.iter().all(|&a| a == 0.0) {
            return Err(Error::argument("at least one serving weight must be positive"));
        }
        Ok(ServingWeights { alpha })
    }

    pub fn values(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// How the first-pass ranker builds the candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RetrievalKind {
    /// Top-m by expected total outcome across labels.
    OracleTopM,
    /// Top-m by a single label's expected outcome, the usual offline-recall
    /// target of retrieval teams.
    SingleLabelTopM { label: usize },
    /// m distinct uniformly random items.
    Random,
    /// Oracle top-m, thinned on the target contexts: each top item survives
    /// with probability `keep_fraction` and the set is refilled with random
    /// non-top items. The knob that induces a retrieval-quality gap.
    GroupDegraded {
        target_contexts: Vec<usize>,
        keep_fraction: f64,
    },
}

impl RetrievalKind {
    pub fn name(&self) -> &'static str {
        match self {
            RetrievalKind::OracleTopM => "oracle_top_m",
            RetrievalKind::SingleLabelTopM { .. } => "single_label_top_m",
            RetrievalKind::Random => "random",
            RetrievalKind::GroupDegraded { .. } => "group_degraded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalPolicy {
    pub kind: RetrievalKind,
    pub m: usize,
}

impl RetrievalPolicy {
    pub fn oracle_top_m(m: usize) -> Self {
        RetrievalPolicy {
            kind: RetrievalKind::OracleTopM,
            m,
        }
    }

    pub fn single_label_top_m(m: usize, label: usize) -> Self {
        RetrievalPolicy {
            kind: RetrievalKind::SingleLabelTopM { label },
            m,
        }
    }

    pub fn random(m: usize) -> Self {
        RetrievalPolicy {
            kind: RetrievalKind::Random,
            m,
        }
    }

    pub fn group_degraded(m: usize, target_contexts: Vec<usize>, keep_fraction: f64) -> Self {
        RetrievalPolicy {
            kind: RetrievalKind::GroupDegraded {
                target_contexts,
                keep_fraction,
            },
            m,
        }
    }

    /// Whether the candidate set is a pure function of the context.
    pub fn is_deterministic(&self) -> bool {
        matches!(
            self.kind,
            RetrievalKind::OracleTopM | RetrievalKind::SingleLabelTopM { .. }
        )
    }

    pub fn validate(&self, world: &World) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config("m", "must retrieve at least one item"));
        }
        if self.m > world.n_items() {
            return Err(Error::config(
                "m",
                format!("m = {} exceeds corpus size {}", self.m, world.n_items()),
            ));
        }
        match &self.kind {
            RetrievalKind::SingleLabelTopM { label } => {
                if *label >= world.n_labels() {
                    return Err(Error::config(
                        "policy_label",
                        format!("label {} out of range (n_labels = {})", label, world.n_labels()),
                    ));
                }
            }
            RetrievalKind::GroupDegraded {
                target_contexts,
                keep_fraction,
            } => {
                if !(*keep_fraction > 0.0 && *keep_fraction <= 1.0) {
                    return Err(Error::config(
                        "policy_keep_fraction",
                        "keep_fraction must lie in (0, 1]",
                    ));
                }
                for &c in target_contexts {
                    if c >= world.n_contexts() {
                        return Err(Error::config(
                            "policy_target_contexts",
                            format!("context {c} out of range (n_contexts = {})", world.n_contexts()),
                        ));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Outcome of a single session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub served_item: usize,
    pub expected_utility: f64,
    pub realized_utility: f64,
    pub group_index: usize,
}

/// Candidate set for one context, ascending item order. Deterministic kinds
/// ignore the seed.
pub fn retrieve(world: &World, policy: &RetrievalPolicy, context: usize, seed: u64) -> Result<Vec<usize>> {
    policy.validate(world)?;
    world.check_context(context)?;
    let m = policy.m;
    let mut set = match &policy.kind {
        RetrievalKind::OracleTopM => top_by(world, context, m, |w, x, j| w.total_outcome(x, j)),
        RetrievalKind::SingleLabelTopM { label } => {
            let k = *label;
            top_by(world, context, m, move |w, x, j| w.outcome_prob(x, j, k))
        }
        RetrievalKind::Random => {
            let mut items: Vec<usize> = (0..world.n_items()).collect();
            let mut rng = rng_from(seed);
            let (picked, _) = items.partial_shuffle(&mut rng, m);
            picked.to_vec()
        }
        RetrievalKind::GroupDegraded {
            target_contexts,
            keep_fraction,
        } => {
            let top = top_by(world, context, m, |w, x, j| w.total_outcome(x, j));
            if !target_contexts.contains(&context) {
                top
            } else {
                let mut rng = rng_from(seed);
                let mut kept: Vec<usize> = top
                    .iter()
                    .copied()
                    .filter(|_| rng.random::<f64>() < *keep_fraction)
                    .collect();
                let mut pool: Vec<usize> =
                    (0..world.n_items()).filter(|j| !top.contains(j)).collect();
                pool.shuffle(&mut rng);
                for j in pool {
                    if kept.len() == m {
                        break;
                    }
                    kept.push(j);
                }
                kept
            }
        }
    };
    set.sort_unstable();
    Ok(set)
}

fn top_by<F>(world: &World, context: usize, m: usize, score: F) -> Vec<usize>
where
    F: Fn(&World, usize, usize) -> f64,
{
    let mut items: Vec<usize> = (0..world.n_items()).collect();
    // Descending score, ties to the lower item index.
    items.sort_by(|&a, &b| {
        score(world, context, b)
            .total_cmp(&score(world, context, a))
            .then(a.cmp(&b))
    });
    items.truncate(m);
    items
}

/// Second-pass ranker: argmax over the candidates of the weighted scorer
/// outputs, ties to the lower item index.
pub fn serve(
    world: &World,
    context: usize,
    candidates: &[usize],
    weights: &ServingWeights,
) -> Result<usize> {
    world.check_context(context)?;
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if weights.len() != world.n_labels() {
        return Err(Error::argument(format!(
            "serving weights have length {}, expected {}",
            weights.len(),
            world.n_labels()
        )));
    }
    let alpha = weights.values();
    let mut best: Option<(f64, usize)> = None;
    for &j in candidates {
        world.check_item(j)?;
        let s: f64 = world
            .scorer_row(context, j)
            .iter()
            .zip(alpha)
            .map(|(f, a)| a * f)
            .sum();
        best = match best {
            None => Some((s, j)),
            Some((bs, bj)) if s > bs || (s == bs && j < bj) => Some((s, j)),
            keep => keep,
        };
    }
    Ok(best.expect("nonempty candidates").1)
}

/// Exact conditional expected utility of `item` for `group` at `context`:
/// the true preferences dotted with the true outcome probabilities.
pub fn expected_utility(world: &World, context: usize, group: usize, item: usize) -> Result<f64> {
    world.check_context(context)?;
    world.check_group(group)?;
    world.check_item(item)?;
    let prefs = &world.config().true_prefs[group];
    Ok(world
        .outcome_row(context, item)
        .iter()
        .zip(prefs)
        .map(|(p, a)| a * p)
        .sum())
}

/// Runs one session end to end: retrieve, serve, and score both the exact
/// and the sampled utility of the served item.
pub fn run_session(
    world: &World,
    policy: &RetrievalPolicy,
    weights: &ServingWeights,
    context: usize,
    group: usize,
    seed: u64,
) -> Result<SessionResult> {
    let candidates = retrieve(world, policy, context, derive_seed(seed, &[0]))?;
    let served = serve(world, context, &candidates, weights)?;
    let expected = expected_utility(world, context, group, served)?;
    let labels = sample_outcomes(world, context, served, derive_seed(seed, &[1]))?;
    let prefs = &world.config().true_prefs[group];
    let realized: f64 = labels
        .iter()
        .zip(prefs)
        .map(|(&y, a)| a * f64::from(y))
        .sum();
    Ok(SessionResult {
        served_item: served,
        expected_utility: expected,
        realized_utility: realized,
        group_index: group,
    })
}

/// Simulates a batch of sessions and aggregates per-group means.
///
/// Per-session randomness is derived from `(seed, session index)`, so the
/// result is independent of evaluation order. Groups that draw no users get
/// mean 0 and an empty flag rather than an error.
pub fn run_batch(
    world: &World,
    policy: &RetrievalPolicy,
    weights: &ServingWeights,
    batch: &UserBatch,
    seed: u64,
) -> Result<GroupOutcome> {
    if batch.is_empty() {
        return Err(Error::argument("user batch must not be empty"));
    }
    batch.validate_for(world)?;
    policy.validate(world)?;

    // Deterministic kinds admit a per-context candidate cache.
    let cache: Option<Vec<Vec<usize>>> = if policy.is_deterministic() {
        Some(candidate_sets(world, policy, 0)?)
    } else {
        None
    };

    let n_groups = world.n_groups();
    let mut expected_sum = vec![0.0; n_groups];
    let mut realized_sum = vec![0.0; n_groups];
    let mut counts = vec![0usize; n_groups];

    for (i, &(context, group)) in batch.entries.iter().enumerate() {
        let session_seed = derive_seed(seed, &[i as u64]);
        let result = match &cache {
            Some(sets) => {
                let served = serve(world, context, &sets[context], weights)?;
                let expected = expected_utility(world, context, group, served)?;
                let labels = sample_outcomes(world, context, served, derive_seed(session_seed, &[1]))?;
                let prefs = &world.config().true_prefs[group];
                let realized: f64 = labels
                    .iter()
                    .zip(prefs)
                    .map(|(&y, a)| a * f64::from(y))
                    .sum();
                SessionResult {
                    served_item: served,
                    expected_utility: expected,
                    realized_utility: realized,
                    group_index: group,
                }
            }
            None => run_session(world, policy, weights, context, group, session_seed)?,
        };
        expected_sum[group] += result.expected_utility;
        realized_sum[group] += result.realized_utility;
        counts[group] += 1;
    }

    let mean = |sums: &[f64]| -> Vec<f64> {
        sums.iter()
            .zip(&counts)
            .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect()
    };
    Ok(GroupOutcome {
        mean_expected_utility: mean(&expected_sum),
        mean_realized_utility: mean(&realized_sum),
        empty_flags: counts.iter().map(|&n| n == 0).collect(),
        counts,
    })
}

/// Materializes the candidate set of every context. Deterministic kinds
/// ignore the seed; stochastic kinds draw one realization per context from
/// `(seed, context)`.
pub fn candidate_sets(world: &World, policy: &RetrievalPolicy, seed: u64) -> Result<Vec<Vec<usize>>> {
    (0..world.n_contexts())
        .map(|x| retrieve(world, policy, x, derive_seed(seed, &[x as u64])))
        .collect()
}

/// Per-context exact utilities for `group` under fixed candidate sets.
pub(crate) fn utility_profile_with_sets(
    world: &World,
    sets: &[Vec<usize>],
    weights: &ServingWeights,
    group: usize,
) -> Result<Vec<f64>> {
    (0..world.n_contexts())
        .map(|x| {
            let served = serve(world, x, &sets[x], weights)?;
            expected_utility(world, x, group, served)
        })
        .collect()
}

/// Per-context exact utilities for `group`; deterministic policies only.
pub fn utility_profile(
    world: &World,
    policy: &RetrievalPolicy,
    weights: &ServingWeights,
    group: usize,
) -> Result<Vec<f64>> {
    if !policy.is_deterministic() {
        return Err(Error::UnsupportedPolicy(policy.kind.name().to_string()));
    }
    world.check_group(group)?;
    let sets = candidate_sets(world, policy, 0)?;
    utility_profile_with_sets(world, &sets, weights, group)
}

/// Exact expected utility of `group`: the per-context utilities integrated
/// against `P(x | g)`. Deterministic policies only.
pub fn exact_group_utility(
    world: &World,
    policy: &RetrievalPolicy,
    weights: &ServingWeights,
    group: usize,
) -> Result<f64> {
    let profile = utility_profile(world, policy, weights, group)?;
    Ok(dot(&world.config().context_dist[group], &profile))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
