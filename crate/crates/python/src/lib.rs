//! Python bindings for `stabilizer-core`.
//!
//! Distributions are plain lists indexed little-endian (qubit `j` is bit `j`
//! of the index), counts are dicts keyed by bitstrings whose character `j`
//! is qubit `j`, and every stochastic call takes an explicit integer seed.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use stabilizer_core as core;
use stabilizer_core::inference::{
    infer_register as core_infer, ChainConfig, PriorSpec, QubitPosterior,
};
use stabilizer_core::seed::rng_from_seed;
use stabilizer_core::simulator::{OutcomeDistribution, ShotCounts};

create_exception!(stabilizer, StabilizerError, PyValueError);

fn err(e: core::Error) -> PyErr {
    StabilizerError::new_err(e.to_string())
}

/// Readout flip probabilities `e0`, `e1` and rotation offset `e2` (radians).
#[pyclass(name = "ErrorParams", frozen, from_py_object, module = "stabilizer")]
#[derive(Clone, Copy)]
struct PyErrorParams(core::ErrorParams);

#[pymethods]
impl PyErrorParams {
    #[new]
    fn new(e0: f64, e1: f64, e2: f64) -> PyResult<Self> {
        core::ErrorParams::new(e0, e1, e2).map(Self).map_err(err)
    }

    #[getter]
    fn e0(&self) -> f64 {
        self.0.e0()
    }

    #[getter]
    fn e1(&self) -> f64 {
        self.0.e1()
    }

    #[getter]
    fn e2(&self) -> f64 {
        self.0.e2()
    }

    /// Probability of reading 0 from a Hadamard-prepared qubit.
    fn p_zero(&self) -> f64 {
        core::p_zero(&self.0)
    }

    fn as_tuple(&self) -> (f64, f64, f64) {
        let [a, b, c] = self.0.to_array();
        (a, b, c)
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "ErrorParams(e0={}, e1={}, e2={})",
            self.0.e0(),
            self.0.e1(),
            self.0.e2()
        )
    }
}

#[pyclass(name = "BetaSpec", frozen, from_py_object, module = "stabilizer")]
#[derive(Clone, Copy)]
struct PyBetaSpec(core::BetaSpec);

#[pymethods]
impl PyBetaSpec {
    #[new]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        core::BetaSpec::new(alpha, beta).map(Self).map_err(err)
    }

    #[staticmethod]
    fn uniform() -> Self {
        Self(core::BetaSpec::uniform())
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn std(&self) -> f64 {
        self.0.std()
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        self.0.ln_pdf(x)
    }

    /// `n` independent draws from a generator seeded with `seed`.
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| self.0.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("BetaSpec(alpha={}, beta={})", self.0.alpha(), self.0.beta())
    }
}

fn params_vec(noise: &[PyRef<'_, PyErrorParams>]) -> Vec<core::ErrorParams> {
    noise.iter().map(|p| p.0).collect()
}

fn prior_triple(prior: Option<Vec<PyRef<'_, PyBetaSpec>>>) -> PyResult<[core::BetaSpec; 3]> {
    match prior {
        None => Ok([core::BetaSpec::uniform(); 3]),
        Some(v) if v.len() == 3 => Ok([v[0].0, v[1].0, v[2].0]),
        Some(v) => Err(PyValueError::new_err(format!(
            "prior needs 3 BetaSpecs, got {}",
            v.len()
        ))),
    }
}

fn counts_from_dict(counts: BTreeMap<String, u64>) -> PyResult<ShotCounts> {
    let n = counts
        .keys()
        .next()
        .map(String::len)
        .ok_or_else(|| PyValueError::new_err("counts dict is empty"))?;
    ShotCounts::from_strings(n, counts.iter().map(|(k, v)| (k.as_str(), *v))).map_err(err)
}

fn distribution(probs: Vec<f64>) -> PyResult<OutcomeDistribution> {
    let n = probs.len().trailing_zeros() as usize;
    OutcomeDistribution::new(n, probs).map_err(err)
}

fn chain_config(steps: usize, proposal_scales: Option<[f64; 3]>) -> ChainConfig {
    let defaults = ChainConfig::default();
    ChainConfig {
        steps,
        proposal_scales: proposal_scales.unwrap_or(defaults.proposal_scales),
        ..defaults
    }
}

#[pyfunction]
fn beta_from_mean_std(mean: f64, std: f64) -> PyResult<PyBetaSpec> {
    core::beta_from_mean_std(mean, std)
        .map(PyBetaSpec)
        .map_err(err)
}

#[pyfunction]
fn fit_beta_moments(samples: Vec<f64>) -> PyResult<PyBetaSpec> {
    core::fit_beta_moments(&samples)
        .map(PyBetaSpec)
        .map_err(err)
}

#[pyfunction]
fn p_zero(params: PyRef<'_, PyErrorParams>) -> f64 {
    core::p_zero(&params.0)
}

#[pyfunction]
fn ideal_distribution(n: usize) -> PyResult<Vec<f64>> {
    core::ideal_distribution(n)
        .map(|d| d.into_probs())
        .map_err(err)
}

/// Samples `shots` outcomes of the Hadamard register under `noise`, with
/// optional per-qubit rotation compensation.
#[pyfunction]
#[pyo3(signature = (noise, shots, seed, compensation=None))]
fn execute(
    noise: Vec<PyRef<'_, PyErrorParams>>,
    shots: u64,
    seed: u64,
    compensation: Option<Vec<f64>>,
) -> PyResult<BTreeMap<String, u64>> {
    let noise = params_vec(&noise);
    let comp = compensation.unwrap_or_else(|| vec![0.0; noise.len()]);
    core::execute(&noise, &comp, shots, &mut rng_from_seed(seed))
        .map(|c| c.to_map())
        .map_err(err)
}

#[pyfunction]
fn counts_to_distribution(counts: BTreeMap<String, u64>) -> PyResult<Vec<f64>> {
    let counts = counts_from_dict(counts)?;
    core::counts_to_distribution(&counts)
        .map(|d| d.into_probs())
        .map_err(err)
}

/// Unnormalized log-posterior of one qubit's parameters given its zero count.
#[pyfunction]
#[pyo3(signature = (zeros, shots, params, prior=None))]
fn log_posterior(
    zeros: u64,
    shots: u64,
    params: PyRef<'_, PyErrorParams>,
    prior: Option<Vec<PyRef<'_, PyBetaSpec>>>,
) -> PyResult<f64> {
    let target = QubitPosterior::new(zeros, shots, prior_triple(prior)?).map_err(err)?;
    Ok(target.log_density(&params.0.to_array()))
}

/// Runs one random-walk chain for a single qubit. Returns a dict with
/// `samples`, `log_post`, `accepted`, `burn_in` and `acceptance_rate`.
#[pyfunction]
#[pyo3(signature = (zeros, shots, init, seed, steps=10_000, proposal_scales=None, prior=None))]
#[allow(clippy::too_many_arguments)]
fn metropolis_hastings<'py>(
    py: Python<'py>,
    zeros: u64,
    shots: u64,
    init: PyRef<'py, PyErrorParams>,
    seed: u64,
    steps: usize,
    proposal_scales: Option<[f64; 3]>,
    prior: Option<Vec<PyRef<'py, PyBetaSpec>>>,
) -> PyResult<Bound<'py, PyDict>> {
    let target = QubitPosterior::new(zeros, shots, prior_triple(prior)?).map_err(err)?;
    let config = chain_config(steps, proposal_scales);
    let init = init.0;
    let chain = py
        .detach(|| core::metropolis_hastings(&target, &config, &init, &mut rng_from_seed(seed)))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("samples", chain.samples().to_vec())?;
    out.set_item("log_post", chain.log_post().to_vec())?;
    out.set_item("accepted", chain.accepted())?;
    out.set_item("burn_in", chain.burn_in())?;
    out.set_item("acceptance_rate", chain.acceptance_rate())?;
    Ok(out)
}

/// Per-qubit MAP estimates from register counts. `prior` is an optional
/// list of `[BetaSpec; 3]` per qubit. Returns a dict with `params`,
/// `acceptance` and `log_post`.
#[pyfunction]
#[pyo3(signature = (counts, seed, steps=10_000, proposal_scales=None, prior=None))]
fn infer_register<'py>(
    py: Python<'py>,
    counts: BTreeMap<String, u64>,
    seed: u64,
    steps: usize,
    proposal_scales: Option<[f64; 3]>,
    prior: Option<Vec<Vec<PyRef<'py, PyBetaSpec>>>>,
) -> PyResult<Bound<'py, PyDict>> {
    let counts = counts_from_dict(counts)?;
    let prior = match prior {
        None => PriorSpec::uniform(counts.n()),
        Some(qs) => PriorSpec::configured(
            qs.into_iter()
                .map(|q| prior_triple(Some(q)))
                .collect::<PyResult<Vec<_>>>()?,
        ),
    };
    let config = chain_config(steps, proposal_scales);
    let result = py
        .detach(|| core_infer(&counts, &prior, &config, seed))
        .map_err(err)?;
    let est = result.estimate;
    let out = PyDict::new(py);
    let params: Vec<PyErrorParams> = est.params.into_iter().map(PyErrorParams).collect();
    out.set_item("params", params)?;
    out.set_item("acceptance", est.acceptance)?;
    out.set_item("log_post", est.log_post)?;
    Ok(out)
}

/// Readout-error inversion with negative entries clipped and renormalized.
#[pyfunction]
fn invert_readout(dist: Vec<f64>, estimates: Vec<PyRef<'_, PyErrorParams>>) -> PyResult<Vec<f64>> {
    let dist = distribution(dist)?;
    core::invert_readout(&dist, &params_vec(&estimates))
        .map(|d| d.into_probs())
        .map_err(err)
}

#[pyfunction]
fn compensation_offsets(estimates: Vec<PyRef<'_, PyErrorParams>>) -> Vec<f64> {
    core::mitigation::offsets_from_params(&params_vec(&estimates))
}

#[pyfunction]
fn hellinger(f: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
    core::hellinger(&distribution(f)?, &distribution(g)?).map_err(err)
}

#[pyfunction]
fn bhattacharyya(f: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
    core::bhattacharyya(&distribution(f)?, &distribution(g)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (distances, observables=None))]
fn stability_report<'py>(
    py: Python<'py>,
    distances: Vec<f64>,
    observables: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core::stability_report(&distances, observables.as_deref()).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("distances", r.distances)?;
    out.set_item("mean", r.mean)?;
    out.set_item("std", r.std)?;
    out.set_item("observable_variance", r.observable_variance)?;
    Ok(out)
}

/// Runs the three-arm experiment. The configuration comes from a TOML
/// string, a TOML file, or the defaults when neither is given. With `out`
/// set, `results.csv`, `summary.json` and `comparison.svg` are written there.
#[pyfunction]
#[pyo3(signature = (config=None, path=None, out=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: Option<&str>,
    path: Option<PathBuf>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = match (config, path) {
        (Some(_), Some(_)) => {
            return Err(PyValueError::new_err(
                "pass either config or path, not both",
            ))
        }
        (Some(text), None) => core::ExperimentConfig::from_toml_str(text),
        (None, Some(p)) => core::ExperimentConfig::from_path(&p),
        (None, None) => Ok(core::ExperimentConfig::default()),
    }
    .map_err(err)?;
    let result = py
        .detach(|| {
            let r = core::run_experiment(&cfg)?;
            if let Some(dir) = &out {
                r.write_outputs(dir)?;
            }
            Ok::<_, core::Error>(r)
        })
        .map_err(err)?;

    let arms = PyDict::new(py);
    for s in &result.summaries {
        let d = PyDict::new(py);
        d.set_item("mean", s.report.as_ref().map(|r| r.mean))?;
        d.set_item("std", s.report.as_ref().map(|r| r.std))?;
        d.set_item("completed", s.completed)?;
        d.set_item("failed", s.failed)?;
        arms.set_item(s.arm.name(), d)?;
    }
    let rows = PyList::empty(py);
    for row in &result.rows {
        let d = PyDict::new(py);
        d.set_item("arm", row.arm.name())?;
        d.set_item("run", row.run)?;
        d.set_item("hellinger", row.hellinger)?;
        let truth: Vec<PyErrorParams> = row.truth.iter().copied().map(PyErrorParams).collect();
        d.set_item("truth", truth)?;
        let map: Option<Vec<PyErrorParams>> = row
            .estimate
            .as_ref()
            .map(|e| e.params.iter().copied().map(PyErrorParams).collect());
        d.set_item("map", map)?;
        d.set_item(
            "acceptance",
            row.estimate.as_ref().map(|e| e.acceptance.clone()),
        )?;
        d.set_item("error", row.error.clone())?;
        rows.append(d)?;
    }
    let res = PyDict::new(py);
    res.set_item("arms", arms)?;
    res.set_item("rows", rows)?;
    res.set_item("warnings", result.warnings.clone())?;
    res.set_item("csv", core::harness::to_csv_string(&result).map_err(err)?)?;
    Ok(res)
}

#[pymodule]
fn stabilizer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StabilizerError", m.py().get_type::<StabilizerError>())?;
    m.add_class::<PyErrorParams>()?;
    m.add_class::<PyBetaSpec>()?;
    m.add_function(wrap_pyfunction!(beta_from_mean_std, m)?)?;
    m.add_function(wrap_pyfunction!(fit_beta_moments, m)?)?;
    m.add_function(wrap_pyfunction!(p_zero, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    m.add_function(wrap_pyfunction!(counts_to_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(log_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(metropolis_hastings, m)?)?;
    m.add_function(wrap_pyfunction!(infer_register, m)?)?;
    m.add_function(wrap_pyfunction!(invert_readout, m)?)?;
    m.add_function(wrap_pyfunction!(compensation_offsets, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(bhattacharyya, m)?)?;
    m.add_function(wrap_pyfunction!(stability_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
