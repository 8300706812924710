//! Python surface of the fairness testbed: worlds, the serving pipeline,
//! the equity metrics and bounds, the acquisition functions, and the full
//! experiment harness.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use fairbo_core::config::{parse_experiment_config, parse_world_config};
use fairbo_core::error::Error;
use fairbo_core::experiment::WorldSource;
use fairbo_core::{metrics, optim, pareto, pipeline, report, score_table, stats, svg, world};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPyResult<T> {
    fn into_py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for Result<T, Error> {
    fn into_py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// A finite recommendation universe with exact outcome probabilities.
#[pyclass(name = "World")]
pub struct PyWorld {
    inner: world::World,
}

#[pymethods]
impl PyWorld {
    /// Builds a world from a flat key=value config string.
    #[staticmethod]
    fn generate(config_text: &str) -> PyResult<Self> {
        let config = parse_world_config(config_text).into_py()?;
        Ok(PyWorld {
            inner: world::World::generate(&config).into_py()?,
        })
    }

    /// Loads a world from an exported score table and its sidecar config.
    #[staticmethod]
    fn ingest(table: PathBuf, sidecar: PathBuf) -> PyResult<Self> {
        Ok(PyWorld {
            inner: score_table::ingest_score_table(&table, &sidecar).into_py()?,
        })
    }

    fn export(&self, table: PathBuf, sidecar: PathBuf) -> PyResult<()> {
        score_table::export_score_table(&self.inner, &table).into_py()?;
        score_table::export_sidecar_config(&self.inner, &sidecar).into_py()
    }

    #[getter]
    fn n_contexts(&self) -> usize {
        self.inner.n_contexts()
    }

    #[getter]
    fn n_items(&self) -> usize {
        self.inner.n_items()
    }

    #[getter]
    fn n_labels(&self) -> usize {
        self.inner.n_labels()
    }

    #[getter]
    fn n_groups(&self) -> usize {
        self.inner.n_groups()
    }

    #[getter]
    fn true_prefs(&self) -> Vec<Vec<f64>> {
        self.inner.config().true_prefs.clone()
    }

    fn outcome_prob(&self, context: usize, item: usize, label: usize) -> PyResult<f64> {
        check_indices(&self.inner, context, item, label)?;
        Ok(self.inner.outcome_prob(context, item, label))
    }

    fn scorer_output(&self, context: usize, item: usize, label: usize) -> PyResult<f64> {
        check_indices(&self.inner, context, item, label)?;
        Ok(self.inner.scorer_output(context, item, label))
    }

    fn __repr__(&self) -> String {
        format!(
            "World(contexts={}, items={}, labels={}, groups={})",
            self.inner.n_contexts(),
            self.inner.n_items(),
            self.inner.n_labels(),
            self.inner.n_groups()
        )
    }
}

fn check_indices(w: &world::World, context: usize, item: usize, label: usize) -> PyResult<()> {
    if context >= w.n_contexts() || item >= w.n_items() || label >= w.n_labels() {
        return Err(PyValueError::new_err(format!(
            "index ({context},{item},{label}) outside ({},{},{})",
            w.n_contexts(),
            w.n_items(),
            w.n_labels()
        )));
    }
    Ok(())
}

/// First-pass retrieval policy.
#[pyclass(name = "RetrievalPolicy")]
pub struct PyRetrievalPolicy {
    inner: pipeline::RetrievalPolicy,
}

#[pymethods]
impl PyRetrievalPolicy {
    #[staticmethod]
    fn oracle_top_m(m: usize) -> Self {
        PyRetrievalPolicy {
            inner: pipeline::RetrievalPolicy::oracle_top_m(m),
        }
    }

    #[staticmethod]
    fn single_label_top_m(m: usize, label: usize) -> Self {
        PyRetrievalPolicy {
            inner: pipeline::RetrievalPolicy::single_label_top_m(m, label),
        }
    }

    #[staticmethod]
    fn random(m: usize) -> Self {
        PyRetrievalPolicy {
            inner: pipeline::RetrievalPolicy::random(m),
        }
    }

    #[staticmethod]
    fn group_degraded(m: usize, target_contexts: Vec<usize>, keep_fraction: f64) -> Self {
        PyRetrievalPolicy {
            inner: pipeline::RetrievalPolicy::group_degraded(m, target_contexts, keep_fraction),
        }
    }

    fn __repr__(&self) -> String {
        format!("RetrievalPolicy({}, m={})", self.inner.kind.name(), self.inner.m)
    }
}

#[pyfunction]
#[pyo3(signature = (world, n, seed=0))]
fn sample_user_batch(world: &PyWorld, n: usize, seed: u64) -> PyResult<Vec<(usize, usize)>> {
    Ok(world::sample_user_batch(&world.inner, n, seed)
        .into_py()?
        .entries)
}

#[pyfunction]
#[pyo3(signature = (world, context, item, seed=0))]
fn sample_outcomes(world: &PyWorld, context: usize, item: usize, seed: u64) -> PyResult<Vec<u8>> {
    world::sample_outcomes(&world.inner, context, item, seed).into_py()
}

#[pyfunction]
#[pyo3(signature = (world, policy, context, seed=0))]
fn retrieve(
    world: &PyWorld,
    policy: &PyRetrievalPolicy,
    context: usize,
    seed: u64,
) -> PyResult<Vec<usize>> {
    pipeline::retrieve(&world.inner, &policy.inner, context, seed).into_py()
}

#[pyfunction]
fn serve(world: &PyWorld, context: usize, candidates: Vec<usize>, alpha: Vec<f64>) -> PyResult<usize> {
    let weights = pipeline::ServingWeights::new(alpha).into_py()?;
    pipeline::serve(&world.inner, context, &candidates, &weights).into_py()
}

#[pyfunction]
fn expected_utility(world: &PyWorld, context: usize, group: usize, item: usize) -> PyResult<f64> {
    pipeline::expected_utility(&world.inner, context, group, item).into_py()
}

#[pyfunction]
#[pyo3(signature = (world, policy, alpha, batch, seed=0))]
fn run_batch<'py>(
    py: Python<'py>,
    world: &PyWorld,
    policy: &PyRetrievalPolicy,
    alpha: Vec<f64>,
    batch: Vec<(usize, usize)>,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let weights = pipeline::ServingWeights::new(alpha).into_py()?;
    let user_batch = world::UserBatch {
        entries: batch,
        seed: 0,
    };
    let outcome = pipeline::run_batch(&world.inner, &policy.inner, &weights, &user_batch, seed)
        .into_py()?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("mean_expected_utility", outcome.mean_expected_utility)?;
    dict.set_item("mean_realized_utility", outcome.mean_realized_utility)?;
    dict.set_item("counts", outcome.counts)?;
    dict.set_item("empty_flags", outcome.empty_flags)?;
    Ok(dict)
}

#[pyfunction]
fn exact_group_utility(
    world: &PyWorld,
    policy: &PyRetrievalPolicy,
    alpha: Vec<f64>,
    group: usize,
) -> PyResult<f64> {
    let weights = pipeline::ServingWeights::new(alpha).into_py()?;
    pipeline::exact_group_utility(&world.inner, &policy.inner, &weights, group).into_py()
}

#[pyfunction]
fn der(mu: Vec<f64>) -> PyResult<f64> {
    metrics::der(&mu).into_py()
}

#[pyfunction]
fn shared_space(p1: Vec<f64>, p0: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(metrics::shared_space(&p1, &p0).into_py()?.weights().to_vec())
}

#[pyfunction]
fn decompose_gap(
    world: &PyWorld,
    policy: &PyRetrievalPolicy,
    alpha: Vec<f64>,
) -> PyResult<HashMap<String, f64>> {
    let weights = pipeline::ServingWeights::new(alpha).into_py()?;
    let gap = metrics::decompose_gap(&world.inner, &policy.inner, &weights).into_py()?;
    Ok(HashMap::from([
        ("term_x_shift_1".to_string(), gap.term_x_shift_1),
        ("term_preference".to_string(), gap.term_preference),
        ("term_x_shift_2".to_string(), gap.term_x_shift_2),
        ("total_gap".to_string(), gap.total_gap),
    ]))
}

#[pyfunction]
fn preference_gap_bound(
    world: &PyWorld,
    policy: &PyRetrievalPolicy,
    alpha: Vec<f64>,
) -> PyResult<f64> {
    let weights = pipeline::ServingWeights::new(alpha).into_py()?;
    metrics::preference_gap_bound(&world.inner, &policy.inner, &weights).into_py()
}

#[pyfunction]
fn retrieval_quality(
    world: &PyWorld,
    policy: &PyRetrievalPolicy,
    context_weights: Vec<f64>,
) -> PyResult<f64> {
    metrics::retrieval_quality(&world.inner, &policy.inner, &context_weights).into_py()
}

#[pyfunction]
fn retrieval_degradation_check(
    world: &PyWorld,
    policy: &PyRetrievalPolicy,
    epsilon_target: f64,
) -> PyResult<HashMap<String, f64>> {
    let r = metrics::retrieval_degradation_check(&world.inner, &policy.inner, epsilon_target)
        .into_py()?;
    Ok(HashMap::from([
        ("epsilon".to_string(), r.epsilon),
        ("sup_difference".to_string(), r.sup_difference),
        ("bound".to_string(), r.bound),
        ("bound_satisfied".to_string(), f64::from(u8::from(r.bound_satisfied))),
        (
            "meets_epsilon_target".to_string(),
            f64::from(u8::from(r.meets_epsilon_target)),
        ),
    ]))
}

#[pyfunction]
fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    optim::expected_improvement(mean, sd, best)
}

#[pyfunction]
fn constrained_ei(mean: f64, sd: f64, best: f64, c_mean: f64, c_sd: f64, gamma: f64) -> f64 {
    optim::constrained_ei(mean, sd, best, c_mean, c_sd, gamma)
}

#[pyfunction]
fn pareto_front(points: Vec<(f64, f64)>) -> Vec<usize> {
    pareto::pareto_front(&points)
}

#[pyfunction]
#[pyo3(signature = (front, reference=(0.0, 0.0)))]
fn hypervolume_2d(front: Vec<(f64, f64)>, reference: (f64, f64)) -> PyResult<f64> {
    pareto::hypervolume_2d(&front, reference).into_py()
}

#[pyfunction]
#[pyo3(signature = (diffs, alternative="greater"))]
fn wilcoxon_signed_rank(diffs: Vec<f64>, alternative: &str) -> PyResult<(f64, f64)> {
    let alt = match alternative {
        "greater" => stats::Alternative::Greater,
        "two_sided" => stats::Alternative::TwoSided,
        other => {
            return Err(PyValueError::new_err(format!(
                "alternative must be `greater` or `two_sided`, got `{other}`"
            )))
        }
    };
    let r = stats::wilcoxon_signed_rank(&diffs, alt).into_py()?;
    Ok((r.statistic, r.p_value))
}

/// Runs the full experiment protocol from a config string and writes
/// trials.csv, summary.json, fronts.csv, and pareto.svg into `out_dir`.
/// Returns the parsed summary as JSON text.
#[pyfunction]
#[pyo3(signature = (config_text, out_dir, seed=None))]
fn run_experiment(config_text: &str, out_dir: PathBuf, seed: Option<u64>) -> PyResult<String> {
    let mut config = parse_experiment_config(config_text).into_py()?;
    if let Some(seed) = seed {
        config.master_seed = seed;
        if let WorldSource::Generate(w) = &mut config.world {
            w.seed = fairbo_core::seeding::derive_seed(seed, &[1]);
        }
    }
    let log = fairbo_core::experiment::run_experiment(&config).into_py()?;
    let rep = report::build_report(&log).into_py()?;
    std::fs::create_dir_all(&out_dir).map_err(|e| PyIOError::new_err(e.to_string()))?;
    report::write_trials_csv(&log, &out_dir.join("trials.csv")).into_py()?;
    report::write_summary_json(&rep.summary, &out_dir.join("summary.json")).into_py()?;
    report::write_fronts_csv(&rep, &out_dir.join("fronts.csv")).into_py()?;
    std::fs::write(out_dir.join("pareto.svg"), svg::pareto_scatter_svg(&rep))
        .map_err(|e| PyIOError::new_err(e.to_string()))?;
    serde_json::to_string(&rep.summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWorld>()?;
    m.add_class::<PyRetrievalPolicy>()?;
    m.add_function(wrap_pyfunction!(sample_user_batch, m)?)?;
    m.add_function(wrap_pyfunction!(sample_outcomes, m)?)?;
    m.add_function(wrap_pyfunction!(retrieve, m)?)?;
    m.add_function(wrap_pyfunction!(serve, m)?)?;
    m.add_function(wrap_pyfunction!(expected_utility, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(exact_group_utility, m)?)?;
    m.add_function(wrap_pyfunction!(der, m)?)?;
    m.add_function(wrap_pyfunction!(shared_space, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_gap, m)?)?;
    m.add_function(wrap_pyfunction!(preference_gap_bound, m)?)?;
    m.add_function(wrap_pyfunction!(retrieval_quality, m)?)?;
    m.add_function(wrap_pyfunction!(retrieval_degradation_check, m)?)?;
    m.add_function(wrap_pyfunction!(expected_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_ei, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_front, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume_2d, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_signed_rank, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
