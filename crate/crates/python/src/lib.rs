//! Python bindings: `import leland_fem`.

use std::path::PathBuf;

use leland_core::convergence::{self, RatioRule, Reference, StudyConfig};
use leland_core::experiment::{self, RunConfig};
use leland_core::{oracles, ElementOrder, Error, MassVariant};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Domain(_) | Error::OutOfRange { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

#[pyclass(name = "MarketParams", module = "leland_fem", from_py_object)]
#[derive(Clone)]
struct PyMarketParams {
    inner: leland_core::MarketParams,
}

#[pymethods]
impl PyMarketParams {
    #[new]
    #[pyo3(signature = (rate = 0.1, sigma = 0.2, maturity = 1.0, strike = 100.0, cost = 0.01, dt_hedge = 0.01))]
    fn new(rate: f64, sigma: f64, maturity: f64, strike: f64, cost: f64, dt_hedge: f64) -> PyResult<Self> {
        let inner = leland_core::MarketParams::new(rate, sigma, maturity, strike, cost, dt_hedge).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }
    #[getter]
    fn maturity(&self) -> f64 {
        self.inner.maturity
    }
    #[getter]
    fn strike(&self) -> f64 {
        self.inner.strike
    }
    #[getter]
    fn cost(&self) -> f64 {
        self.inner.cost
    }
    #[getter]
    fn dt_hedge(&self) -> f64 {
        self.inner.dt_hedge
    }

    fn leland_number(&self) -> PyResult<f64> {
        self.inner.leland_number().map_err(to_py)
    }

    /// `(x, tau)` for a spot and physical time.
    fn to_transformed(&self, spot: f64, t: f64) -> PyResult<(f64, f64)> {
        leland_core::model::to_transformed(spot, t, &self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "MarketParams(rate={}, sigma={}, maturity={}, strike={}, cost={}, dt_hedge={})",
            p.rate, p.sigma, p.maturity, p.strike, p.cost, p.dt_hedge
        )
    }
}

#[pyclass(name = "Mesh", module = "leland_fem", from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: leland_core::Mesh1D,
}

#[pymethods]
impl PyMesh {
    /// Uniform mesh on `[-half_width, half_width]`.
    #[staticmethod]
    #[pyo3(signature = (half_width, n_elements, order = "P1"))]
    fn uniform(half_width: f64, n_elements: usize, order: &str) -> PyResult<Self> {
        let inner = leland_core::Mesh1D::build_uniform(half_width, n_elements, parse(order)?).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Uniform mesh with a vertex on `anchor`.
    #[staticmethod]
    #[pyo3(signature = (anchor, h, min_half_width, order = "P1"))]
    fn aligned(anchor: f64, h: f64, min_half_width: f64, order: &str) -> PyResult<Self> {
        let inner = leland_core::Mesh1D::build_aligned(anchor, h, min_half_width, parse(order)?).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }
    #[getter]
    fn element_edges(&self) -> Vec<f64> {
        self.inner.element_edges().to_vec()
    }
    #[getter]
    fn order(&self) -> String {
        self.inner.order().to_string()
    }
    #[getter]
    fn half_width(&self) -> f64 {
        self.inner.half_width()
    }
    fn __len__(&self) -> usize {
        self.inner.n_nodes()
    }
    fn __repr__(&self) -> String {
        format!(
            "Mesh(order={}, n_elements={}, half_width={})",
            self.inner.order(),
            self.inner.n_elements(),
            self.inner.half_width()
        )
    }
}

/// Result of `solve`: curves at the requested times plus the stability report.
#[pyclass(name = "Solution", module = "leland_fem")]
struct PySolution {
    result: experiment::ExperimentResult,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn leland_number(&self) -> f64 {
        self.result.leland
    }
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.result.curves.iter().map(|c| c.t).collect()
    }
    #[getter]
    fn oscillation_index(&self) -> f64 {
        self.result.stability.oscillation_index
    }
    #[getter]
    fn flagged(&self) -> bool {
        self.result.stability.flagged
    }
    #[getter]
    fn per_level_index(&self) -> Vec<f64> {
        self.result.stability.per_level_index.clone()
    }
    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh { inner: self.result.mesh.clone() }
    }

    /// `{"S": [...], "V_fem": [...], ...}` at time `t` (default the first sample time).
    #[pyo3(signature = (t = None))]
    fn curve<'py>(&self, py: Python<'py>, t: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let table = match t {
            None => self.result.curves.first(),
            Some(t) => self.result.curves.iter().find(|c| c.t == t),
        }
        .ok_or_else(|| PyValueError::new_err("time was not sampled"))?;
        let d = PyDict::new(py);
        d.set_item("S", table.spots.clone())?;
        d.set_item("V_fem", table.fem.clone())?;
        if let Some(v) = &table.fdm {
            d.set_item("V_fdm", v.clone())?;
        }
        if let Some(v) = &table.bs_linear {
            d.set_item("V_bs_linear", v.clone())?;
        }
        if let Some(v) = &table.bs_adjusted {
            d.set_item("V_bs_adjusted", v.clone())?;
        }
        Ok(d)
    }

    /// FEM price at `spot`, interpolated linearly between nodes.
    #[pyo3(signature = (spot, t = None))]
    fn price(&self, spot: f64, t: Option<f64>) -> PyResult<f64> {
        let t = t.unwrap_or_else(|| self.result.curves[0].t);
        let curve = self.result.curve(t).ok_or_else(|| PyValueError::new_err("time was not sampled"))?;
        curve.value_at(spot).ok_or_else(|| PyValueError::new_err("spot outside the mesh"))
    }

    /// The stability report as a JSON string.
    fn report_json(&self) -> String {
        self.result.report_json().to_string()
    }

    /// Writes the CSV and JSON artifacts to `out_dir`; returns their paths.
    fn write(&self, out_dir: PathBuf) -> PyResult<Vec<String>> {
        let paths = self.result.write(&out_dir).map_err(to_py)?;
        Ok(paths.into_iter().map(|p| p.display().to_string()).collect())
    }
}

/// Runs a preset (default `le04-coarse`) with `key=value` overrides, e.g.
/// `solve("le12-p1-stable", h=0.1, times="0,0.5", oracles="off")`.
#[pyfunction]
#[pyo3(signature = (preset = None, **overrides))]
fn solve(preset: Option<&str>, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<PySolution> {
    let mut cfg = match preset {
        Some(name) => experiment::preset(name).map_err(to_py)?,
        None => RunConfig::default(),
    };
    if let Some(kw) = overrides {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            let value = v.str()?.to_string();
            cfg.set(&key, &value).map_err(to_py)?;
        }
    }
    let result = experiment::compute_experiment(&cfg).map_err(to_py)?;
    Ok(PySolution { result })
}

/// `[(name, cost, order, h, d_tau, provenance), ...]`
#[pyfunction]
fn list_presets() -> Vec<(String, f64, String, f64, f64, String)> {
    experiment::list_presets()
        .iter()
        .map(|p| {
            let el = match (p.order, p.variant) {
                (ElementOrder::P1, _) => "P1",
                (ElementOrder::P2, MassVariant::Version1) => "P2",
                (ElementOrder::P2, MassVariant::Version2) => "P2v2",
            };
            (p.name.to_string(), p.cost, el.to_string(), p.h, p.d_tau, p.provenance.to_string())
        })
        .collect()
}

#[pyfunction]
fn leland_number(cost: f64, sigma: f64, dt_hedge: f64) -> PyResult<f64> {
    leland_core::model::leland_number(cost, sigma, dt_hedge).map_err(to_py)
}

#[pyfunction]
fn norm_cdf(x: f64) -> f64 {
    oracles::norm_cdf(x)
}

#[pyfunction]
fn bs_call(spot: f64, strike: f64, rate: f64, sigma: f64, time_to_expiry: f64) -> f64 {
    oracles::bs_call_closed_form(spot, strike, rate, sigma, time_to_expiry)
}

#[pyfunction]
fn bs_call_adjusted(spot: f64, strike: f64, rate: f64, sigma: f64, leland: f64, time_to_expiry: f64) -> f64 {
    oracles::bs_call_adjusted(spot, strike, rate, sigma, leland, time_to_expiry)
}

/// Element matrices `{"mass", "stiffness", "convection", "abs_mass"}` as nested lists.
#[pyfunction]
#[pyo3(signature = (h, order = "P1"))]
fn element_matrices<'py>(py: Python<'py>, h: f64, order: &str) -> PyResult<Bound<'py, PyDict>> {
    let em = leland_core::ElementMatrices::new(parse(order)?, h).map_err(to_py)?;
    let d = PyDict::new(py);
    for (name, m) in [("mass", &em.mass), ("stiffness", &em.stiffness), ("convection", &em.convection), ("abs_mass", &em.abs_mass)] {
        d.set_item(name, m.rows())?;
    }
    Ok(d)
}

/// Refinement study; returns `{"h": [...], "d_tau": [...], "error": [...], "orders": [...]}`.
#[pyfunction]
#[pyo3(signature = (cost = 0.0, order = "P1", levels = 3, base_h = 0.2, ratio = 0.1, reference = "adjusted"))]
fn refinement_study<'py>(
    py: Python<'py>,
    cost: f64,
    order: &str,
    levels: usize,
    base_h: f64,
    ratio: f64,
    reference: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = StudyConfig::new(parse(order)?, levels, base_h, RatioRule::Parabolic(ratio));
    cfg.reference = match reference {
        "adjusted" => Reference::AdjustedVolatility,
        "linear" => Reference::ClosedForm,
        other => return Err(PyValueError::new_err(format!("unknown reference `{other}`"))),
    };
    let s = convergence::study(&leland_core::MarketParams::reference(cost), &cfg).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("h", s.levels.iter().map(|l| l.h).collect::<Vec<_>>())?;
    d.set_item("d_tau", s.levels.iter().map(|l| l.d_tau).collect::<Vec<_>>())?;
    d.set_item("error", s.levels.iter().map(|l| l.error).collect::<Vec<_>>())?;
    d.set_item("orders", s.observed_orders)?;
    Ok(d)
}

#[pymodule]
fn leland_fem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarketParams>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(list_presets, m)?)?;
    m.add_function(wrap_pyfunction!(leland_number, m)?)?;
    m.add_function(wrap_pyfunction!(norm_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(bs_call, m)?)?;
    m.add_function(wrap_pyfunction!(bs_call_adjusted, m)?)?;
    m.add_function(wrap_pyfunction!(element_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(refinement_study, m)?)?;
    Ok(())
}
