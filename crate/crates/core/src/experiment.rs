//! Experiment harness: the weight-search protocol and the exact
//! diagnostics bundle.
//!
//! A run compares strategies over independent trials. Within a trial,
//! every iteration proposes serving weights, simulates a user batch, and
//! records the pooled realized utility plus the equity statistic over the
//! per-group realized means. Seed derivation keeps worlds, initialization
//! designs, and user streams identical across strategies so only the
//! strategy differs; each strategy's internal randomness gets its own
//! stream. Trials are independent and may run concurrently without
//! affecting any result.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{decompose_gap, der, preference_gap_bound, retrieval_quality, shared_space};
use crate::optim::{next_alpha, Observation, SearchSettings, Strategy};
use crate::pipeline::{run_batch, utility_profile, RetrievalPolicy, ServingWeights};
use crate::sampling::alpha_grid;
use crate::score_table::ingest_score_table;
use crate::seeding::derive_seed;
use crate::world::{sample_user_batch, World, WorldConfig};

const TAG_WORLD: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_BATCH: u64 = 3;
const TAG_LABELS: u64 = 4;
const TAG_STRATEGY: u64 = 5;

/// Where the world comes from: generated here or replayed from files.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    Generate(WorldConfig),
    Ingest { table: PathBuf, sidecar: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub world: WorldSource,
    pub policy: RetrievalPolicy,
    pub strategies: Vec<Strategy>,
    pub n_trials: usize,
    pub n_iterations: usize,
    /// Users simulated per iteration.
    pub batch_size: usize,
    pub search: SearchSettings,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// The default synthetic benchmark: two labels, an 80/20 group split,
    /// and opposed group preferences, so tailoring to the majority is both
    /// tempting and inequitable.
    pub fn default_synthetic(master_seed: u64) -> Self {
        ExperimentConfig {
            world: WorldSource::Generate(WorldConfig {
                n_contexts: 8,
                n_items: 60,
                n_labels: 2,
                group_prevalence: vec![0.8, 0.2],
                context_dist: vec![vec![0.125; 8], vec![0.125; 8]],
                true_prefs: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                miscalibration: 0.0,
                latent_dim: 4,
                seed: derive_seed(master_seed, &[TAG_WORLD]),
            }),
            policy: RetrievalPolicy::oracle_top_m(20),
            strategies: vec![Strategy::RandomSearch, Strategy::Ei, Strategy::FairEhvi],
            n_trials: 20,
            n_iterations: 20,
            batch_size: 200,
            search: SearchSettings::default(),
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::config("strategies", "need at least one strategy"));
        }
        for (field, value) in [
            ("n_trials", self.n_trials),
            ("n_iterations", self.n_iterations),
            ("batch_size", self.batch_size),
        ] {
            if value == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.search.q == 0 || self.search.pool_size < self.search.q {
            return Err(Error::config("q", "need 1 <= q <= pool_size"));
        }
        Ok(())
    }

    pub fn build_world(&self) -> Result<World> {
        match &self.world {
            WorldSource::Generate(config) => World::generate(config),
            WorldSource::Ingest { table, sidecar } => ingest_score_table(table, sidecar),
        }
    }
}

/// One iteration of one trial of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub strategy: String,
    pub trial: usize,
    pub iteration: usize,
    pub alpha: Vec<f64>,
    /// Pooled mean realized utility over the batch.
    pub utility: f64,
    /// Equity statistic over the per-group realized means.
    pub der: f64,
    pub group_utilities: Vec<f64>,
    /// Set when some group drew no users this iteration.
    pub der_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub n_labels: usize,
    pub n_groups: usize,
    pub records: Vec<TrialRecord>,
}

impl TrialLog {
    pub fn strategies(&self) -> Vec<String> {
        let mut names = Vec::new();
        for r in &self.records {
            if !names.contains(&r.strategy) {
                names.push(r.strategy.clone());
            }
        }
        names
    }

    pub fn n_trials(&self) -> usize {
        self.records.iter().map(|r| r.trial + 1).max().unwrap_or(0)
    }

    pub fn n_iterations(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.iteration + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Runs the full protocol. Deterministic in `(config, master_seed)`; trial
/// execution order (including rayon scheduling) cannot change any output.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialLog> {
    config.validate()?;
    let world = config.build_world()?;
    config.policy.validate(&world)?;

    let tasks: Vec<(usize, usize)> = (0..config.strategies.len())
        .flat_map(|s| (0..config.n_trials).map(move |t| (s, t)))
        .collect();

    let per_task: Vec<Result<Vec<TrialRecord>>> = tasks
        .par_iter()
        .map(|&(strategy_idx, trial)| {
            run_trial(&world, config, &config.strategies[strategy_idx], trial)
        })
        .collect();

    let mut records = Vec::with_capacity(tasks.len() * config.n_iterations);
    for result in per_task {
        records.extend(result?);
    }
    Ok(TrialLog {
        n_labels: world.n_labels(),
        n_groups: world.n_groups(),
        records,
    })
}

fn run_trial(
    world: &World,
    config: &ExperimentConfig,
    strategy: &Strategy,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let master = config.master_seed;
    let dim = world.n_labels();
    let init_seed = derive_seed(master, &[TAG_INIT, trial as u64]);

    let mut history: Vec<Observation> = Vec::with_capacity(config.n_iterations);
    let mut records = Vec::with_capacity(config.n_iterations);
    for iteration in 0..config.n_iterations {
        let alpha_seed = if iteration < config.search.n_init {
            init_seed
        } else {
            derive_seed(
                master,
                &[TAG_STRATEGY, strategy.seed_tag(), trial as u64, iteration as u64],
            )
        };
        let alpha = next_alpha(strategy, dim, &history, alpha_seed, &config.search)?;
        let weights = ServingWeights::new(alpha.clone())?;

        let batch = sample_user_batch(
            world,
            config.batch_size,
            derive_seed(master, &[TAG_BATCH, trial as u64, iteration as u64]),
        )?;
        let outcome = run_batch(
            world,
            &config.policy,
            &weights,
            &batch,
            derive_seed(master, &[TAG_LABELS, trial as u64, iteration as u64]),
        )?;

        let utility = outcome.pooled_realized_mean();
        let der_value = der(&outcome.mean_realized_utility)?;
        let der_degenerate = outcome.any_empty();
        history.push(Observation {
            alpha: alpha.clone(),
            utility,
            der: der_value,
        });
        records.push(TrialRecord {
            strategy: strategy.name().to_string(),
            trial,
            iteration,
            alpha,
            utility,
            der: der_value,
            group_utilities: outcome.mean_realized_utility,
            der_degenerate,
        });
    }
    Ok(records)
}

/// Exact diagnostics for one (world, policy, alpha) triple. Field names are
/// the wire format of diagnostics.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub alpha: Vec<f64>,
    pub term_x_shift_1: f64,
    pub term_preference: f64,
    pub term_x_shift_2: f64,
    pub total_gap: f64,
    pub theorem1_bound: f64,
    pub retrieval_quality_group: Vec<f64>,
    pub retrieval_quality_shared: f64,
}

/// One row of the per-group utility surface scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScanRow {
    pub group: usize,
    pub alpha: Vec<f64>,
    pub utility: f64,
}

pub const DIAGNOSE_GRID_POINTS: usize = 21;

/// Computes the gap decomposition, its preference-term bound, retrieval
/// quality under each group and the shared space, and the utility surface
/// over a 21-per-axis weight grid for every group.
pub fn diagnose(
    world: &World,
    policy: &RetrievalPolicy,
    weights: &ServingWeights,
) -> Result<(Diagnostics, Vec<GridScanRow>)> {
    let gap = decompose_gap(world, policy, weights)?;
    let bound = preference_gap_bound(world, policy, weights)?;

    let cfg = world.config();
    let shared = shared_space(&cfg.context_dist[1], &cfg.context_dist[0])?;
    let retrieval_quality_group = (0..world.n_groups())
        .map(|g| retrieval_quality(world, policy, &cfg.context_dist[g]))
        .collect::<Result<Vec<_>>>()?;
    let retrieval_quality_shared = retrieval_quality(world, policy, shared.weights())?;

    let mut grid = Vec::new();
    for group in 0..world.n_groups() {
        let dist = &cfg.context_dist[group];
        for alpha in alpha_grid(world.n_labels(), DIAGNOSE_GRID_POINTS) {
            let w = ServingWeights::new(alpha.clone())?;
            let profile = utility_profile(world, policy, &w, group)?;
            let utility = dist.iter().zip(&profile).map(|(p, u)| p * u).sum();
            grid.push(GridScanRow {
                group,
                alpha,
                utility,
            });
        }
    }

    Ok((
        Diagnostics {
            alpha: weights.values().to_vec(),
            term_x_shift_1: gap.term_x_shift_1,
            term_preference: gap.term_preference,
            term_x_shift_2: gap.term_x_shift_2,
            total_gap: gap.total_gap,
            theorem1_bound: bound,
            retrieval_quality_group,
            retrieval_quality_shared,
        },
        grid,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(master_seed: u64) -> ExperimentConfig {
        let mut config = ExperimentConfig::default_synthetic(master_seed);
        config.n_trials = 2;
        config.n_iterations = 7;
        config.batch_size = 40;
        if let WorldSource::Generate(w) = &mut config.world {
            w.n_items = 20;
        }
        config.policy = RetrievalPolicy::oracle_top_m(8);
        config.search.pool_size = 64;
        config.search.n_mc = 16;
        config
    }

    #[test]
    fn identical_seeds_give_identical_logs() {
        let config = tiny_config(9);
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn record_counts_match_the_protocol() {
        let config = tiny_config(10);
        let log = run_experiment(&config).unwrap();
        assert_eq!(
            log.records.len(),
            config.strategies.len() * config.n_trials * config.n_iterations
        );
        for r in &log.records {
            assert!(r.der >= 0.0 && r.der <= 1.0, "der {}", r.der);
            assert!(r.utility >= 0.0 && r.utility <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn strategies_share_the_first_five_iterations_per_trial() {
        let config = tiny_config(11);
        let log = run_experiment(&config).unwrap();
        for trial in 0..config.n_trials {
            for iteration in 0..config.search.n_init.min(config.n_iterations) {
                let alphas: Vec<&Vec<f64>> = log
                    .records
                    .iter()
                    .filter(|r| r.trial == trial && r.iteration == iteration)
                    .map(|r| &r.alpha)
                    .collect();
                assert_eq!(alphas.len(), config.strategies.len());
                assert!(alphas.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }

    #[test]
    fn diagnostics_are_consistent_on_a_symmetric_world() {
        let mut config = ExperimentConfig::default_synthetic(3);
        if let WorldSource::Generate(w) = &mut config.world {
            w.true_prefs = vec![vec![0.5, 0.5]; 2];
            w.n_items = 15;
        }
        let world = config.build_world().unwrap();
        let policy = RetrievalPolicy::oracle_top_m(6);
        let weights = ServingWeights::new(vec![0.5, 0.5]).unwrap();
        let (diag, grid) = diagnose(&world, &policy, &weights).unwrap();
        assert_eq!(diag.term_x_shift_1, 0.0);
        assert_eq!(diag.term_preference, 0.0);
        assert_eq!(diag.term_x_shift_2, 0.0);
        assert_eq!(diag.total_gap, 0.0);
        let sum = diag.term_x_shift_1 + diag.term_preference + diag.term_x_shift_2;
        assert!((sum - diag.total_gap).abs() < 1e-10);
        assert_eq!(grid.len(), 2 * (21 * 21 - 1));
    }
}
