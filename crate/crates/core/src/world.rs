//! Synthetic recommendation worlds.
//!
//! A world is a finite, exactly integrable universe: a discrete context set,
//! an item corpus, true outcome probabilities `p[x][j][k]` per label, and the
//! scorer outputs `f[x][j][k]` the serving layer actually sees. Generation is
//! a pure function of [`WorldConfig`], so identical configs give bit-identical
//! worlds and every downstream expectation can be computed by summation.
//!
//! Outcome probabilities come from a low-rank logistic model
//! `p = sigmoid(scale * <u_x, v_jk> / sqrt(d) + b_k)`. A miscalibration knob
//! perturbs the scorer in logit space; at zero the scorer equals `p` exactly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_from};

/// Probabilities are kept inside `[PROB_FLOOR, 1 - PROB_FLOOR]` to avoid
/// degenerate Bernoullis and infinite logits.
pub const PROB_FLOOR: f64 = 1e-6;

const STOCHASTIC_TOL: f64 = 1e-12;
const LOGIT_SCALE: f64 = 2.6;
const LABEL_BIAS_SCALE: f64 = 0.4;
/// Weight of the label-specific latent component relative to the shared
/// item core. Labels load on the core with alternating signs, so an item
/// strong on one label tends to be weak on the next; scorers tracking
/// genuinely different aspects of an item is the regime of interest.
const LABEL_MIX: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Size of the discrete user-context set.
    pub n_contexts: usize,
    /// Item corpus size.
    pub n_items: usize,
    /// Number of outcome labels scored per item.
    pub n_labels: usize,
    /// P(G = g); one entry per group, summing to 1.
    pub group_prevalence: Vec<f64>,
    /// P(x | G = g); one row per group, each summing to 1.
    pub context_dist: Vec<Vec<f64>>,
    /// True preference weights per group over the labels; strictly positive.
    pub true_prefs: Vec<Vec<f64>>,
    /// Logit-space scorer perturbation scale; 0 keeps the scorer calibrated.
    pub miscalibration: f64,
    /// Latent dimension of the low-rank outcome model.
    pub latent_dim: usize,
    pub seed: u64,
}

impl WorldConfig {
    pub fn n_groups(&self) -> usize {
        self.group_prevalence.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_contexts == 0 {
            return Err(Error::config("n_contexts", "must be at least 1"));
        }
        if self.n_items == 0 {
            return Err(Error::config("n_items", "must be at least 1"));
        }
        if self.n_labels == 0 {
            return Err(Error::config("n_labels", "must be at least 1"));
        }
        if self.latent_dim == 0 {
            return Err(Error::config("latent_dim", "must be at least 1"));
        }
        if self.group_prevalence.len() < 2 {
            return Err(Error::config("group_prevalence", "need at least two groups"));
        }
        check_stochastic("group_prevalence", &self.group_prevalence)?;
        if self.context_dist.len() != self.n_groups() {
            return Err(Error::config(
                "context_dist",
                format!("expected one row per group ({})", self.n_groups()),
            ));
        }
        for (g, row) in self.context_dist.iter().enumerate() {
            if row.len() != self.n_contexts {
                return Err(Error::config(
                    "context_dist",
                    format!("row {g} has length {}, expected {}", row.len(), self.n_contexts),
                ));
            }
            check_stochastic("context_dist", row)?;
        }
        if self.true_prefs.len() != self.n_groups() {
            return Err(Error::config(
                "true_prefs",
                format!("expected one row per group ({})", self.n_groups()),
            ));
        }
        for (g, row) in self.true_prefs.iter().enumerate() {
            if row.len() != self.n_labels {
                return Err(Error::config(
                    "true_prefs",
                    format!("row {g} has length {}, expected {}", row.len(), self.n_labels),
                ));
            }
            if row.iter().any(|&a| !a.is_finite() || a <= 0.0) {
                return Err(Error::config(
                    "true_prefs",
                    format!("row {g} must be strictly positive"),
                ));
            }
        }
        if !self.miscalibration.is_finite() || self.miscalibration < 0.0 {
            return Err(Error::config("miscalibration", "must be a nonnegative real"));
        }
        Ok(())
    }
}

fn check_stochastic(field: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::config(field, "entries must be nonnegative"));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::config(field, format!("sums to {total}, expected 1")));
    }
    Ok(())
}

/// Finite recommendation universe with true outcome probabilities and the
/// scorer outputs served against them. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    config: WorldConfig,
    outcome_probs: Vec<f64>,
    scorer_outputs: Vec<f64>,
}

impl World {
    /// Generates a world deterministically from its config.
    pub fn generate(config: &WorldConfig) -> Result<World> {
        config.validate()?;
        let (nx, nj, nk, d) = (config.n_contexts, config.n_items, config.n_labels, config.latent_dim);

        let mut rng = rng_from(derive_seed(config.seed, &[0]));
        let context_latents: Vec<f64> = (0..nx * d).map(|_| rng.sample(StandardNormal)).collect();
        let item_latents: Vec<f64> = (0..nj * nk * d).map(|_| rng.sample(StandardNormal)).collect();
        let label_bias: Vec<f64> = (0..nk)
            .map(|_| LABEL_BIAS_SCALE * rng.sample::<f64, _>(StandardNormal))
            .collect();

        let scale = LOGIT_SCALE / (d as f64).sqrt();
        let mut outcome_probs = Vec::with_capacity(nx * nj * nk);
        for x in 0..nx {
            let u = &context_latents[x * d..(x + 1) * d];
            for j in 0..nj {
                for k in 0..nk {
                    let v = &item_latents[(j * nk + k) * d..(j * nk + k + 1) * d];
                    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                    let p = sigmoid(scale * dot + label_bias[k]);
                    outcome_probs.push(clamp_prob(p));
                }
            }
        }

        let scorer_outputs = if config.miscalibration == 0.0 {
            outcome_probs.clone()
        } else {
            let mut noise_rng = rng_from(derive_seed(config.seed, &[1]));
            outcome_probs
                .iter()
                .map(|&p| {
                    let eta: f64 = noise_rng.sample(StandardNormal);
                    clamp_prob(sigmoid(logit(p) + config.miscalibration * eta))
                })
                .collect()
        };

        Ok(World {
            config: config.clone(),
            outcome_probs,
            scorer_outputs,
        })
    }

    /// Builds a world from explicit tensors (ingestion, constructed test
    /// regimes). Both tensors are `n_contexts * n_items * n_labels` long in
    /// (context, item, label) row-major order.
    pub fn from_parts(config: WorldConfig, outcome_probs: Vec<f64>, scorer_outputs: Vec<f64>) -> Result<World> {
        config.validate()?;
        let expected = config.n_contexts * config.n_items * config.n_labels;
        if outcome_probs.len() != expected || scorer_outputs.len() != expected {
            return Err(Error::argument(format!(
                "expected {expected} tensor entries, got {} and {}",
                outcome_probs.len(),
                scorer_outputs.len()
            )));
        }
        for &v in outcome_probs.iter().chain(&scorer_outputs) {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::argument(format!(
                    "tensor entry {v} outside the open interval (0,1)"
                )));
            }
        }
        Ok(World {
            config,
            outcome_probs,
            scorer_outputs,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn n_contexts(&self) -> usize {
        self.config.n_contexts
    }

    pub fn n_items(&self) -> usize {
        self.config.n_items
    }

    pub fn n_labels(&self) -> usize {
        self.config.n_labels
    }

    pub fn n_groups(&self) -> usize {
        self.config.n_groups()
    }

    #[inline]
    fn index(&self, context: usize, item: usize, label: usize) -> usize {
        (context * self.config.n_items + item) * self.config.n_labels + label
    }

    /// True `E[Y_k | x, j]`.
    #[inline]
    pub fn outcome_prob(&self, context: usize, item: usize, label: usize) -> f64 {
        self.outcome_probs[self.index(context, item, label)]
    }

    /// Scorer prediction `f_k(x, j)`.
    #[inline]
    pub fn scorer_output(&self, context: usize, item: usize, label: usize) -> f64 {
        self.scorer_outputs[self.index(context, item, label)]
    }

    /// All true outcome probabilities for `(context, item)`, label-contiguous.
    #[inline]
    pub fn outcome_row(&self, context: usize, item: usize) -> &[f64] {
        let base = self.index(context, item, 0);
        &self.outcome_probs[base..base + self.config.n_labels]
    }

    /// All scorer outputs for `(context, item)`, label-contiguous.
    #[inline]
    pub fn scorer_row(&self, context: usize, item: usize) -> &[f64] {
        let base = self.index(context, item, 0);
        &self.scorer_outputs[base..base + self.config.n_labels]
    }

    /// Expected total outcome across labels; the goodness score used by
    /// retrieval quality.
    #[inline]
    pub fn total_outcome(&self, context: usize, item: usize) -> f64 {
        self.outcome_row(context, item).iter().sum()
    }

    pub(crate) fn check_context(&self, context: usize) -> Result<()> {
        if context >= self.config.n_contexts {
            return Err(Error::argument(format!(
                "context {context} out of range (n_contexts = {})",
                self.config.n_contexts
            )));
        }
        Ok(())
    }

    pub(crate) fn check_item(&self, item: usize) -> Result<()> {
        if item >= self.config.n_items {
            return Err(Error::argument(format!(
                "item {item} out of range (n_items = {})",
                self.config.n_items
            )));
        }
        Ok(())
    }

    pub(crate) fn check_group(&self, group: usize) -> Result<()> {
        if group >= self.n_groups() {
            return Err(Error::argument(format!(
                "group {group} out of range (n_groups = {})",
                self.n_groups()
            )));
        }
        Ok(())
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// One simulated batch of users: `(context, group)` per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserBatch {
    pub entries: Vec<(usize, usize)>,
    pub seed: u64,
}

impl UserBatch {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate_for(&self, world: &World) -> Result<()> {
        for &(context, group) in &self.entries {
            world.check_context(context)?;
            world.check_group(group)?;
        }
        Ok(())
    }
}

/// Draws `n` users i.i.d.: group from the prevalence vector, then context
/// from that group's conditional distribution.
pub fn sample_user_batch(world: &World, n: usize, seed: u64) -> Result<UserBatch> {
    if n == 0 {
        return Err(Error::argument("batch size must be at least 1"));
    }
    let cfg = world.config();
    let mut rng = rng_from(seed);
    let entries = (0..n)
        .map(|_| {
            let group = sample_index(&cfg.group_prevalence, rng.random::<f64>());
            let context = sample_index(&cfg.context_dist[group], rng.random::<f64>());
            (context, group)
        })
        .collect();
    Ok(UserBatch { entries, seed })
}

/// One independent Bernoulli draw per label at `(context, item)`; entries
/// are 0/1.
pub fn sample_outcomes(world: &World, context: usize, item: usize, seed: u64) -> Result<Vec<u8>> {
    world.check_context(context)?;
    world.check_item(item)?;
    let mut rng = rng_from(seed);
    Ok(world
        .outcome_row(context, item)
        .iter()
        .map(|&p| u8::from(rng.random::<f64>() < p))
        .collect())
}

/// Inverse-CDF draw from a probability vector; `u` is in `[0,1)`.
fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}
