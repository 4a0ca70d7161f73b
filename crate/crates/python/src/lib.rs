//! Python module `polymer_lab`: thin wrappers over the Rust library.

use polymer_lab::brownian::{small_ball_bounds as bounds, small_ball_series as series};
use polymer_lab::charges::{ChargeFeed, ChargeModel, ChargeModelSpec, ChargeStream, DurationMode};
use polymer_lab::experiments::{self, ExperimentConfig, Profile};
use polymer_lab::hamiltonian::{run_polymer, Checkpoints};
use polymer_lab::lattice;
use polymer_lab::oracle::direct_sums;
use polymer_lab::walk::{Site, WalkConfig};
use polymer_lab::LabError;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: LabError) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn model_from_name(name: &str) -> PyResult<ChargeModel> {
    ChargeModelSpec { kind: name.to_string(), support: vec![], declared_moment_order: None }
        .build()
        .map_err(to_py)
}

/// κ in dimension `dim` as `(series, quadrature)`.
#[pyfunction]
#[pyo3(signature = (dim = 3, tol = 1e-4))]
fn kappa(dim: usize, tol: f64) -> PyResult<(f64, f64)> {
    Ok((lattice::kappa_series(dim, tol).map_err(to_py)?, lattice::kappa_quadrature(dim).map_err(to_py)?))
}

/// Exact E[I_n] for the simple walk in Z^dim.
#[pyfunction]
fn intersection_count_expect(n: usize, dim: usize) -> PyResult<f64> {
    Ok(lattice::intersection_count_expect(n, dim).map_err(to_py)?.value)
}

/// H, I, V, Ξ and the clock decomposition of an explicit walk, by direct
/// summation. `sites` is a list of coordinate lists.
#[pyfunction]
#[pyo3(signature = (sites, charges, durations = None))]
fn hamiltonian<'py>(
    py: Python<'py>,
    sites: Vec<Vec<i64>>,
    charges: Vec<f64>,
    durations: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let sites: Vec<Site> = sites.into_iter().map(Site::new).collect();
    let stream = match durations {
        None => ChargeStream::unit(&charges),
        Some(dt) if dt.len() == charges.len() => ChargeStream::from_pairs(charges.into_iter().zip(dt).collect()).map_err(to_py)?,
        Some(_) => return Err(PyValueError::new_err("charges and durations differ in length")),
    };
    let s = direct_sums(&sites, &stream).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("H", s.h)?;
    d.set_item("I", s.i)?;
    d.set_item("V", s.v)?;
    d.set_item("Xi", s.xi)?;
    d.set_item("M", s.m)?;
    d.set_item("N", s.n)?;
    d.set_item("Xi1", s.xi1)?;
    d.set_item("Xi2", s.xi2)?;
    d.set_item("a", s.a)?;
    d.set_item("b", s.b)?;
    Ok(d)
}

/// Streamed run; returns checkpoint columns `k, H, V, Xi, I`.
#[pyfunction]
#[pyo3(signature = (dim, steps, seed, replicate = 0, charges = "rademacher", checkpoints = None))]
fn simulate<'py>(
    py: Python<'py>,
    dim: usize,
    steps: u64,
    seed: u64,
    replicate: u64,
    charges: &str,
    checkpoints: Option<Vec<u64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let model = model_from_name(charges)?;
    model.validate_for_dimension(dim).map_err(to_py)?;
    let cp = checkpoints.map_or_else(|| Checkpoints::default_geometric(steps), Checkpoints::new);
    let trace = py
        .detach(|| {
            let mut feed = ChargeFeed::new(&model, DurationMode::Unit, seed, replicate)?;
            run_polymer(&WalkConfig::new(dim, steps, seed).replicate(replicate), &mut feed, &cp)
        })
        .map_err(to_py)?
        .trace;
    let d = PyDict::new(py);
    d.set_item("k", trace.checkpoints.iter().map(|c| c.k).collect::<Vec<_>>())?;
    d.set_item("H", trace.checkpoints.iter().map(|c| c.h).collect::<Vec<_>>())?;
    d.set_item("V", trace.checkpoints.iter().map(|c| c.v).collect::<Vec<_>>())?;
    d.set_item("Xi", trace.checkpoints.iter().map(|c| c.xi).collect::<Vec<_>>())?;
    d.set_item("I", trace.checkpoints.iter().map(|c| c.i).collect::<Vec<_>>())?;
    Ok(d)
}

/// `(lower, upper)` small-ball bounds at level `y`.
#[pyfunction]
fn small_ball_bounds(y: f64) -> (f64, f64) {
    bounds(y)
}

/// P{sup_{s<=t}|W_s| < y} by the reflection series.
#[pyfunction]
#[pyo3(signature = (y, t = 1.0))]
fn small_ball_series(y: f64, t: f64) -> f64 {
    series(y, t)
}

/// Run one experiment; returns `{"passed", "summary", "csv"}`.
#[pyfunction]
#[pyo3(signature = (name, profile = "quick", seed = None))]
fn run_experiment<'py>(py: Python<'py>, name: &str, profile: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let profile: Profile = profile.parse().map_err(to_py)?;
    let mut cfg = ExperimentConfig::for_experiment(name.parse().map_err(to_py)?);
    cfg.master_seed = seed;
    let report = py.detach(|| experiments::run(&cfg, profile)).map_err(to_py)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let d = PyDict::new(py);
    d.set_item("passed", report.passed())?;
    d.set_item("summary", report.summary())?;
    d.set_item("csv", String::from_utf8(csv).expect("CSV is UTF-8"))?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "polymer_lab")]
fn polymer_lab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CSV_HEADER", experiments::CSV_HEADER)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_count_expect, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(small_ball_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(small_ball_series, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
