//! Python bindings for the mdevm optimizer: benchmark functions, single
//! runs, diversity metrics and simulations, rank-sum verdicts, and the
//! experiment-matrix harness.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mdevm::benchmarks::{self, BenchmarkFunction, Category};
use mdevm::diversity::{
    self, monte_carlo_mutants as mc_mutants, monte_carlo_trials, TrialDiversityConfig,
};
use mdevm::engine::{self, RunConfig, TerminationCriteria};
use mdevm::error::Error;
use mdevm::harness::{self, ExperimentConfig};
use mdevm::mutation::{FactorMode, MutationConfig, MutationScheme};
use mdevm::stats;

fn to_py_err(error: Error) -> PyErr {
    match error {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Json(_) => {
            PyValueError::new_err(error.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_scheme(name: &str) -> PyResult<MutationScheme> {
    name.parse().map_err(to_py_err)
}

fn parse_mode(name: &str, cmf_value: f64, factor_range: (f64, f64)) -> PyResult<FactorMode> {
    FactorMode::from_name(name, cmf_value, factor_range).map_err(to_py_err)
}

/// A registered benchmark objective with exact optimum metadata.
#[pyclass(name = "Benchmark")]
struct PyBenchmark {
    inner: BenchmarkFunction,
}

#[pymethods]
impl PyBenchmark {
    /// Benchmark(name, dimension, seed=0)
    ///
    /// `seed` drives the shift/rotation data of the composite functions.
    #[new]
    #[pyo3(signature = (name, dimension, seed = 0))]
    fn new(name: &str, dimension: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: benchmarks::by_name(name, dimension, seed).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn optimum_value(&self) -> f64 {
        self.inner.optimum_value()
    }

    #[getter]
    fn category(&self) -> &'static str {
        match self.inner.category() {
            Category::UniModal => "uni_modal",
            Category::MultiModal => "multi_modal",
            Category::Composite => "composite",
        }
    }

    fn optimizer(&self) -> Vec<f64> {
        self.inner.optimizer().to_vec()
    }

    /// Lower and upper bounds as two lists.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.inner.bounds().lower().to_vec(),
            self.inner.bounds().upper().to_vec(),
        )
    }

    fn evaluate(&self, position: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&position).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Benchmark(name={:?}, dimension={})",
            self.inner.name(),
            self.inner.dimension()
        )
    }
}

/// Trace of one optimization run.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    #[pyo3(get)]
    final_best_value: f64,
    #[pyo3(get)]
    final_best_position: Vec<f64>,
    #[pyo3(get)]
    terminated_by: String,
    #[pyo3(get)]
    generations: usize,
    #[pyo3(get)]
    final_nfc: u64,
    /// Per-generation rows (nfc, best_value_so_far, centroid_diversity,
    /// pairwise_diversity).
    #[pyo3(get)]
    history: Vec<(u64, f64, f64, f64)>,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(final_best_value={:e}, generations={}, terminated_by={:?})",
            self.final_best_value, self.generations, self.terminated_by
        )
    }
}

/// Run micro-DE on a benchmark.
#[pyfunction]
#[pyo3(signature = (
    function, scheme, mode, n_p,
    cr = 0.9, evtr = 1e-8, nfc_max = None, seed = 0,
    cmf_value = 0.9, factor_range = (0.1, 1.5),
    shared_factor_draws = false, parallel_eval = false
))]
#[allow(clippy::too_many_arguments)]
fn run(
    function: &PyBenchmark,
    scheme: &str,
    mode: &str,
    n_p: usize,
    cr: f64,
    evtr: f64,
    nfc_max: Option<u64>,
    seed: u64,
    cmf_value: f64,
    factor_range: (f64, f64),
    shared_factor_draws: bool,
    parallel_eval: bool,
) -> PyResult<PyRunResult> {
    let mut mutation = MutationConfig::new(
        parse_scheme(scheme)?,
        parse_mode(mode, cmf_value, factor_range)?,
    );
    mutation.shared_draws = shared_factor_draws;
    let config = RunConfig {
        mutation,
        crossover_rate: cr,
        population_size: n_p,
        termination: TerminationCriteria::new(
            function.inner.optimum_value(),
            evtr,
            nfc_max.unwrap_or(1000 * function.inner.dimension() as u64),
        )
        .map_err(to_py_err)?,
        seed,
        parallel_eval,
    };
    let record =
        engine::run(&config, function.inner.bounds(), &function.inner).map_err(to_py_err)?;
    Ok(PyRunResult {
        final_best_value: record.final_best_value(),
        final_best_position: record.final_best.position().to_vec(),
        terminated_by: record.terminated_by.to_string(),
        generations: record.generations(),
        final_nfc: record.final_nfc(),
        history: record
            .history
            .iter()
            .map(|s| {
                (
                    s.nfc,
                    s.best_value_so_far,
                    s.centroid_diversity,
                    s.pairwise_diversity,
                )
            })
            .collect(),
    })
}

/// Mean Euclidean distance of points from their centroid.
#[pyfunction]
fn centroid_distance(points: Vec<Vec<f64>>) -> PyResult<f64> {
    if points.is_empty() {
        return Err(PyValueError::new_err("points must not be empty"));
    }
    Ok(diversity::centroid_distance(&points))
}

/// Mean Euclidean distance over ordered point pairs.
#[pyfunction]
fn pairwise_distance(points: Vec<Vec<f64>>) -> PyResult<f64> {
    diversity::pairwise_distance(&points).map_err(to_py_err)
}

/// Two-sided Wilcoxon rank-sum verdict: "better", "equal", or "worse" for
/// the first sample under minimization.
#[pyfunction]
#[pyo3(signature = (sample_a, sample_b, alpha = 0.05))]
fn rank_sum_test(sample_a: Vec<f64>, sample_b: Vec<f64>, alpha: f64) -> PyResult<&'static str> {
    let outcome = stats::rank_sum_test(&sample_a, &sample_b, alpha).map_err(to_py_err)?;
    Ok(match outcome {
        stats::Outcome::Better => "better",
        stats::Outcome::Equal => "equal",
        stats::Outcome::Worse => "worse",
    })
}

/// Two-sided rank-sum p-value (exact enumeration below 10 per side).
#[pyfunction]
fn rank_sum_p(sample_a: Vec<f64>, sample_b: Vec<f64>) -> PyResult<f64> {
    stats::rank_sum_p(&sample_a, &sample_b).map_err(to_py_err)
}

/// Monte-Carlo diversity of rand1 trial populations under a factor mode.
///
/// Returns a dict with keys d, n_p, mode, samples, c_d_mean, p_d_mean,
/// c_d_se, p_d_se.
#[pyfunction]
#[pyo3(signature = (
    d, n_p, mode,
    samples = 10_000, factor_range = (0.0, 2.0), cmf_value = 0.5,
    crossover = true, cr = 0.9, seed = 2024
))]
#[allow(clippy::too_many_arguments)]
fn simulate_diversity(
    py: Python<'_>,
    d: usize,
    n_p: usize,
    mode: &str,
    samples: usize,
    factor_range: (f64, f64),
    cmf_value: f64,
    crossover: bool,
    cr: f64,
    seed: u64,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let config = TrialDiversityConfig {
        dimension: d,
        population_size: n_p,
        mode: parse_mode(mode, cmf_value, factor_range)?,
        samples,
        crossover_rate: cr,
        with_crossover: crossover,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = monte_carlo_trials(&config, &mut rng).map_err(to_py_err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("d", sample.dimension)?;
    dict.set_item("n_p", sample.population_size)?;
    dict.set_item("mode", sample.mode.id())?;
    dict.set_item("samples", sample.samples)?;
    dict.set_item("c_d_mean", sample.c_d_mean)?;
    dict.set_item("p_d_mean", sample.p_d_mean)?;
    dict.set_item("c_d_se", sample.c_d_se)?;
    dict.set_item("p_d_se", sample.p_d_se)?;
    Ok(dict.into())
}

/// Sample the scaled-vector cloud `F * base` for a factor mode.
#[pyfunction]
#[pyo3(signature = (base, mode, samples = 100, factor_range = (0.0, 2.0), cmf_value = 0.5, seed = 2024))]
fn monte_carlo_mutants(
    base: Vec<f64>,
    mode: &str,
    samples: usize,
    factor_range: (f64, f64),
    cmf_value: f64,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let mode = parse_mode(mode, cmf_value, factor_range)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(mc_mutants(&base, &mode, samples, &mut rng))
}

/// Execute a JSON experiment config into an archive directory; returns the
/// number of failed cells (0 means full success).
#[pyfunction]
fn run_matrix(config_json: &str, out_dir: &str) -> PyResult<usize> {
    let config = ExperimentConfig::from_json(config_json).map_err(to_py_err)?;
    let outcome = harness::run_matrix(&config, Path::new(out_dir)).map_err(to_py_err)?;
    Ok(outcome.failed_cells)
}

/// Registered benchmark function names.
#[pyfunction]
fn benchmark_names() -> Vec<&'static str> {
    benchmarks::names().to_vec()
}

/// Mutation scheme identifiers.
#[pyfunction]
fn mutation_schemes() -> Vec<&'static str> {
    MutationScheme::ALL.iter().map(|s| s.id()).collect()
}

#[pymodule]
fn mdevm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBenchmark>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(centroid_distance, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise_distance, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sum_test, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sum_p, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_diversity, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_mutants, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark_names, m)?)?;
    m.add_function(wrap_pyfunction!(mutation_schemes, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
