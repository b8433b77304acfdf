//! Python bindings: scenarios, analytic metrics and the simulator.

use pyo3::exceptions::{PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sleepcell_cli::config::parse_scenario;
use sleepcell_core::association::{best_case_access_rr, AccessModel};
use sleepcell_core::metrics::{analyze_with, network_power as power_of, PowerModel};
use sleepcell_core::montecarlo::{run, Moments, SimConfig};
use sleepcell_core::scenario::{Association, Scenario, Scheduling, Scheme};
use sleepcell_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Unsupported(m) => PyNotImplementedError::new_err(m),
        Error::NonConvergence { .. } | Error::SeriesTruncation { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_scheduling(name: &str) -> PyResult<Scheduling> {
    match name {
        "greedy" => Ok(Scheduling::Greedy),
        "round-robin" | "rr" => Ok(Scheduling::RoundRobin),
        _ => Err(PyValueError::new_err(format!("unknown scheduler {name:?}"))),
    }
}

fn parse_scheme(association: &str, scheduling: &str) -> PyResult<Scheme> {
    let association = match association {
        "mmap" => Association::Mmap,
        "mrsp" => Association::Mrsp,
        "hybrid" => Association::Hybrid,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown association {association:?}"
            )))
        }
    };
    Ok(Scheme::new(association, parse_scheduling(scheduling)?))
}

/// A network snapshot law.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    /// The bundled 19-cell scenario with sleeping threshold `threshold`.
    #[staticmethod]
    fn bundled(threshold: u32) -> PyResult<Self> {
        Scenario::bundled(threshold)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Hexagonal layout with an explicit sleeping set.
    #[staticmethod]
    fn with_sleep_set(
        tiers: usize,
        radius: f64,
        loads: Vec<u32>,
        sleeping: Vec<usize>,
    ) -> PyResult<Self> {
        Scenario::with_sleep_set(tiers, radius, loads, &sleeping)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Hexagonal layout in which cells at or below `threshold` users sleep.
    #[staticmethod]
    fn with_threshold(
        tiers: usize,
        radius: f64,
        loads: Vec<u32>,
        threshold: u32,
    ) -> PyResult<Self> {
        Scenario::with_threshold(tiers, radius, loads, threshold)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Parses a scenario file in the command-line TOML format.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        parse_scenario(text)
            .map(|l| Self { inner: l.scenario })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn set_load(&mut self, cell: usize, load: u32) -> PyResult<()> {
        self.inner.set_load(cell, load).map_err(py_err)
    }

    fn set_zoom(&mut self, zoom: f64) -> PyResult<()> {
        self.inner.set_zoom(zoom).map_err(py_err)
    }

    #[getter]
    fn loads(&self) -> Vec<u32> {
        self.inner.loads.clone()
    }

    #[getter]
    fn sleeping(&self) -> Vec<usize> {
        self.inner.sleeping()
    }

    #[getter]
    fn active(&self) -> Vec<usize> {
        self.inner.active()
    }

    #[getter]
    fn focus(&self) -> usize {
        self.inner.focus
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(cells={}, sleeping={:?}, focus={})",
            self.inner.loads.len(),
            self.inner.sleeping(),
            self.inner.focus
        )
    }
}

fn with_scheme(scenario: &PyScenario, scheme: Scheme) -> Scenario {
    let mut s = scenario.inner.clone();
    s.scheme = scheme;
    s
}

fn moments<'py>(py: Python<'py>, m: &Moments) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", m.mean)?;
    d.set_item("std_error", m.std_error)?;
    d.set_item("samples", m.samples)?;
    Ok(d)
}

/// `1/(U + 1)`.
#[pyfunction]
fn round_robin_best_case(local_users: u32) -> f64 {
    best_case_access_rr(local_users)
}

/// Best-case access of a user of sleeping cell `cell` at active BS `bs`.
#[pyfunction]
#[pyo3(signature = (scenario, cell, bs, scheduling = "greedy"))]
fn best_case_access(
    scenario: &PyScenario,
    cell: usize,
    bs: usize,
    scheduling: &str,
) -> PyResult<f64> {
    let model = AccessModel::build(&scenario.inner).map_err(py_err)?;
    model
        .best_case_access(cell, bs, parse_scheduling(scheduling)?)
        .map_err(py_err)
}

/// MMAP choice of every populated sleeping cell.
#[pyfunction]
#[pyo3(signature = (scenario, scheduling = "greedy"))]
fn mmap_choice(scenario: &PyScenario, scheduling: &str) -> PyResult<Vec<(usize, usize)>> {
    let model = AccessModel::build(&scenario.inner).map_err(py_err)?;
    let a = model
        .mmap_associate(parse_scheduling(scheduling)?)
        .map_err(py_err)?;
    Ok(a.chosen.into_iter().collect())
}

/// Analytic metrics of a focus-cell user.
#[pyfunction]
#[pyo3(signature = (scenario, association, scheduling, thresholds = vec![]))]
fn analyze<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    association: &str,
    scheduling: &str,
    thresholds: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme = parse_scheme(association, scheduling)?;
    let s = with_scheme(scenario, scheme);
    let (report, curve) = py
        .detach(|| {
            let model = AccessModel::build(&s)?;
            analyze_with(&model, scheme, &thresholds)
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("scheme", scheme.to_string())?;
    d.set_item("se_nats", report.se_nats)?;
    d.set_item("se_bits", report.se_bits)?;
    d.set_item("outage", report.outage)?;
    d.set_item("access", report.access)?;
    d.set_item("expected_zooming", report.expected_zooming)?;
    d.set_item("outage_curve", curve)?;
    let serving = report
        .serving
        .iter()
        .map(|m| {
            let e = PyDict::new(py);
            e.set_item("bs", m.bs)?;
            e.set_item("association", m.association)?;
            e.set_item("access", m.access)?;
            e.set_item("se_nats", m.se_nats)?;
            e.set_item("outage", m.outage)?;
            Ok(e)
        })
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("serving", serving)?;
    Ok(d)
}

/// Monte-Carlo estimates with standard errors.
#[pyfunction]
#[pyo3(signature = (scenario, association, scheduling, iterations = 100_000, seed = 1, thresholds = vec![1.0]))]
fn simulate<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    association: &str,
    scheduling: &str,
    iterations: u64,
    seed: u64,
    thresholds: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = with_scheme(scenario, parse_scheme(association, scheduling)?);
    let cfg = SimConfig {
        iterations,
        seed,
        outage_thresholds: thresholds,
        ..Default::default()
    };
    let r = py.detach(|| run(&s, &cfg)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("access", moments(py, &r.access)?)?;
    d.set_item("se_nats", moments(py, &r.se_nats)?)?;
    d.set_item("network_se_nats", moments(py, &r.network_se_nats)?)?;
    d.set_item("network_power", moments(py, &r.network_power)?)?;
    d.set_item("energy_efficiency", moments(py, &r.energy_efficiency)?)?;
    let outage = r
        .outage
        .iter()
        .map(|(q, m)| Ok((*q, moments(py, m)?)))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("outage", outage)?;
    Ok(d)
}

/// Network power before sleeping, after sleeping and after zooming.
#[pyfunction]
#[pyo3(signature = (cells, sleeping, zooming, zoom = 1.0, transmit = 1.0, static_power = 200.0, sleep_power = 2.0, dynamic_slope = 3.77))]
#[allow(clippy::too_many_arguments)]
fn network_power(
    cells: usize,
    sleeping: usize,
    zooming: f64,
    zoom: f64,
    transmit: f64,
    static_power: f64,
    sleep_power: f64,
    dynamic_slope: f64,
) -> PyResult<(f64, f64, f64)> {
    let p = power_of(&PowerModel {
        transmit_power: transmit,
        static_power,
        sleep_power,
        dynamic_slope,
        zoom,
        cells,
        active: cells.saturating_sub(sleeping),
        sleeping,
        zooming,
        constituents: None,
    })
    .map_err(py_err)?;
    Ok((p.total, p.after_sleep, p.after_zoom))
}

#[pymodule]
fn sleepcell(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(round_robin_best_case, m)?)?;
    m.add_function(wrap_pyfunction!(best_case_access, m)?)?;
    m.add_function(wrap_pyfunction!(mmap_choice, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(network_power, m)?)?;
    Ok(())
}
