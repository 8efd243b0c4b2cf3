//! Python bindings. Matrices cross the boundary as lists of lists of
//! `complex`; reports as dicts.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use intops::config::{family_from, ModelConfig};
use intops::dynamics::{integrate, isospectrality_report, IntegratorConfig};
use intops::model::{self, PhaseState};
use intops::rmatrix::{certify, RMatrixFamily};
use intops::specfun::{scalar_identity_report, Flavor};
use intops::tensor::ComplexMatrix;

fn err(e: intops::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.rows()
}

fn to_py_json<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(PyModule::import(py, "json")?.call_method1("loads", (text,))?.unbind())
}

/// Scalar function flavor: "rational", "trig" or "elliptic" (needs `tau`).
#[pyclass(name = "Flavor", frozen)]
struct PyFlavor {
    inner: Flavor,
}

#[pymethods]
impl PyFlavor {
    #[new]
    #[pyo3(signature = (kind, tau=None))]
    fn new(kind: &str, tau: Option<Complex64>) -> PyResult<Self> {
        let inner = match kind {
            "rational" => Flavor::rational(),
            "trig" => Flavor::trigonometric(),
            "elliptic" => {
                let tau = tau.ok_or_else(|| PyValueError::new_err("tau is required for the elliptic flavor"))?;
                Flavor::elliptic(tau).map_err(err)?
            }
            other => return Err(PyValueError::new_err(format!("unknown flavor `{other}`"))),
        };
        Ok(Self { inner })
    }

    fn phi(&self, eta: Complex64, z: Complex64) -> PyResult<Complex64> {
        self.inner.phi(eta, z).map_err(err)
    }

    fn e1(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.e1(z).map_err(err)
    }

    fn e2(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.e2(z).map_err(err)
    }

    fn wp(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.wp(z).map_err(err)
    }

    fn f(&self, z: Complex64, u: Complex64) -> PyResult<Complex64> {
        self.inner.f(z, u).map_err(err)
    }

    #[pyo3(signature = (samples=100, seed=0))]
    fn identity_report(&self, py: Python<'_>, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
        to_py_json(py, &scalar_identity_report(&self.inner, samples, seed))
    }
}

/// R-matrix family by short name: xxx, 11v, xxz, 7v, bb.
#[pyclass(name = "RMatrixFamily", frozen)]
struct PyFamily {
    inner: Arc<RMatrixFamily>,
}

#[pymethods]
impl PyFamily {
    #[new]
    #[pyo3(signature = (name, n=None, tau=None, c=None))]
    fn new(name: &str, n: Option<usize>, tau: Option<Complex64>, c: Option<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(family_from(name, n, tau, c).map_err(err)?),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.short_name()
    }

    /// `R^hbar(z)` as an `N^2 x N^2` matrix.
    fn r_matrix(&self, hbar: Complex64, z: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows(self.inner.r_matrix(hbar, z).map_err(err)?.mat()))
    }

    /// Classical r-matrix `r(z)`.
    fn r(&self, z: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows(self.inner.r(z).map_err(err)?.mat()))
    }

    fn m(&self, z: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows(self.inner.m(z).map_err(err)?.mat()))
    }

    #[pyo3(signature = (samples=50, seed=0, tol=1e-8))]
    fn certify(&self, py: Python<'_>, samples: usize, seed: u64, tol: f64) -> PyResult<Py<PyAny>> {
        to_py_json(py, &certify(&self.inner, samples, seed, tol))
    }

    /// Residual of the R-matrix-valued Calogero-Moser Lax equation.
    fn cm_residual(&self, q: Vec<Complex64>, p: Vec<Complex64>, nu: Complex64, z: Complex64) -> PyResult<f64> {
        model::cm_rmx_residual(&q, &p, nu, &self.inner, z).map_err(err)
    }
}

/// A phase-space point of the interacting-tops model.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    state: PhaseState,
}

#[pymethods]
impl PyModel {
    /// Builds the state from a model configuration JSON string.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let cfg = ModelConfig::from_json_str(text).map_err(err)?;
        Ok(Self {
            state: cfg.build_state().map_err(err)?,
        })
    }

    #[getter]
    fn q(&self) -> Vec<Complex64> {
        self.state.q().to_vec()
    }

    #[getter]
    fn p(&self) -> Vec<Complex64> {
        self.state.p().to_vec()
    }

    #[getter]
    fn spin(&self) -> Vec<Vec<Complex64>> {
        rows(self.state.spin().big())
    }

    fn hamiltonian(&self) -> PyResult<Complex64> {
        model::hamiltonian(&self.state).map_err(err)
    }

    fn lax(&self, z: Complex64) -> PyResult<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
        let pair = model::lax_pair(&self.state, z).map_err(err)?;
        Ok((rows(&pair.l), rows(&pair.m)))
    }

    fn lax_residual(&self, z: Complex64) -> PyResult<f64> {
        model::lax_residual(&self.state, z).map_err(err)
    }

    fn exchange_residual(&self, z: Complex64, w: Complex64) -> PyResult<f64> {
        model::exchange_residual(&self.state, z, w).map_err(err)
    }

    /// `(dq, dp, dS)` from the explicit equations of motion.
    fn eom(&self) -> PyResult<(Vec<Complex64>, Vec<Complex64>, Vec<Vec<Complex64>>)> {
        let v = model::eom_rhs(&self.state).map_err(err)?;
        Ok((v.dq, v.dp, rows(&v.ds)))
    }

    /// RK4 run; returns the drift report as a dict.
    #[pyo3(signature = (dt, steps, monitor_z, monitor_every=10))]
    fn simulate(
        &self,
        py: Python<'_>,
        dt: f64,
        steps: usize,
        monitor_z: Vec<Complex64>,
        monitor_every: usize,
    ) -> PyResult<Py<PyAny>> {
        let cfg = IntegratorConfig::new(dt, steps, monitor_z, monitor_every).map_err(err)?;
        let rec = integrate(&self.state, &cfg).map_err(err)?;
        to_py_json(py, &isospectrality_report(&rec).map_err(err)?)
    }
}

#[pymodule]
fn intops_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFlavor>()?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PyModel>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
