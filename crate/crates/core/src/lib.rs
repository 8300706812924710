//! Desk-scale testbed for system-level fairness in compositional
//! recommender pipelines.
//!
//! The crate simulates the retrieve -> score -> weighted-sum-serve pipeline
//! over finite synthetic worlds where every expectation is exactly
//! computable, measures group-wise utility disparities, verifies the
//! structural bounds relating scorer calibration, preference
//! misspecification, and retrieval quality to those disparities, and runs
//! fairness-aware Bayesian optimization over the serving weights.
//!
//! Module map:
//!
//! - [`world`]: synthetic world generation, user/label sampling.
//! - [`score_table`]: dense CSV export/ingestion for offline replay.
//! - [`pipeline`]: retrieval policies, serving, exact and realized utility.
//! - [`metrics`]: DER, shared space, gap decomposition, structural bounds.
//! - [`gp`]: Gaussian-process surrogate over the weight box.
//! - [`pareto`] / [`optim`]: front maintenance, hypervolume, acquisition
//!   functions, and the three weight-search strategies.
//! - [`stats`]: exact Wilcoxon signed-rank testing.
//! - [`experiment`] / [`report`] / [`svg`]: the trial protocol and its
//!   emitted artifacts.

pub mod config;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod metrics;
pub mod optim;
pub mod pareto;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod score_table;
pub mod seeding;
pub mod stats;
pub mod svg;
pub mod world;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, TrialLog, WorldSource};
pub use gp::{GpModel, Kernel};
pub use metrics::{der, shared_space, GapDecomposition, GroupOutcome};
pub use optim::{expected_improvement, next_alpha, Observation, SearchSettings, Strategy};
pub use pareto::{hypervolume_2d, pareto_front, ParetoArchive};
pub use pipeline::{RetrievalKind, RetrievalPolicy, ServingWeights};
pub use stats::{wilcoxon_signed_rank, Alternative};
pub use world::{World, WorldConfig};
