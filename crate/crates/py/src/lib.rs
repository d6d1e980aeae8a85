//! Python bindings: families, closed-form immersions, the obstruction analyzer and
//! surface construction.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pss_core::catalog::{self, FKind, FamilyId, FamilyParams, FamilySpec};
use pss_core::expr::{self, ZeroTest};
use pss_core::forms::verify_family_with;
use pss_core::frame::{export_mesh, integrate_frame, validate_surface, FrameOptions, SurfaceMesh};
use pss_core::sff::{self, ImmersionParams, SecondFundamentalForm};
use pss_core::solutions::{self, GridSpec, SolutionGrid};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Hand a serializable value to Python as plain dicts and lists.
fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A family instance with validated parameters.
#[pyclass(name = "Family", module = "pss", frozen)]
struct PyFamily {
    spec: FamilySpec,
}

#[pymethods]
impl PyFamily {
    #[new]
    #[pyo3(signature = (id, params = None, fkind = None, coefficients = None))]
    fn new(id: &str, params: Option<BTreeMap<String, f64>>, fkind: Option<&str>, coefficients: Option<BTreeMap<String, String>>) -> PyResult<Self> {
        let id: FamilyId = id.parse().map_err(value_err)?;
        let mut input = FamilyParams { values: params.unwrap_or_default(), ..FamilyParams::default() };
        if let Some(k) = fkind {
            input.fkind = Some(k.parse::<FKind>().map_err(value_err)?);
        }
        for (k, text) in coefficients.unwrap_or_default() {
            input.exprs.insert(k, expr::parse(&text).map_err(value_err)?);
        }
        Ok(PyFamily { spec: catalog::build(id, &input).map_err(value_err)? })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.spec.id.name()
    }

    #[getter]
    fn params(&self) -> BTreeMap<String, f64> {
        self.spec.params.clone()
    }

    #[getter]
    fn rhs(&self) -> String {
        self.spec.rhs.to_string()
    }

    /// Constraint notes collected while building.
    #[getter]
    fn notes(&self) -> Vec<String> {
        self.spec.report.clone()
    }

    /// Coefficients `f_ij` as strings, rows `i = 1..3`.
    fn forms(&self) -> Vec<Vec<String>> {
        self.spec.f.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect()
    }

    /// Structure-equation report as a dict.
    #[pyo3(signature = (seed = None))]
    fn verify<'py>(&self, py: Python<'py>, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
        let mut zt = self.spec.zero_test();
        if let Some(s) = seed {
            zt = zt.with_seed(s);
        }
        to_py(py, &verify_family_with(&self.spec.triple(), &zt))
    }

    fn __repr__(&self) -> String {
        format!("Family({:?}, params={:?})", self.spec.id.cli_name(), self.spec.params)
    }
}

/// Second fundamental form `(a, b, c)` of a closed-form immersion.
#[pyclass(name = "SecondFundamentalForm", module = "pss", frozen)]
struct PySff {
    inner: SecondFundamentalForm,
}

#[pymethods]
impl PySff {
    #[getter]
    fn a(&self) -> String {
        self.inner.a.to_string()
    }

    #[getter]
    fn b(&self) -> String {
        self.inner.b.to_string()
    }

    #[getter]
    fn c(&self) -> String {
        self.inner.c.to_string()
    }

    /// Verdicts for the Gauss equation and both Codazzi equations.
    #[pyo3(signature = (family, seed = None))]
    fn check(&self, family: &PyFamily, seed: Option<u64>) -> PyResult<Vec<String>> {
        let tr = family.spec.triple();
        let mut zt = self.inner.zero_test(&tr).map_err(value_err)?;
        if let Some(s) = seed {
            zt = zt.with_seed(s);
        }
        let [e1, e2] = sff::codazzi_residuals(&tr, &self.inner).map_err(runtime_err)?;
        [sff::gauss_residual(&self.inner), e1, e2].iter().map(|e| zt.check(e).map(|v| v.to_string()).map_err(runtime_err)).collect()
    }

    fn __repr__(&self) -> String {
        format!("SecondFundamentalForm(a={}, b={}, c={})", self.inner.a, self.inner.b, self.inner.c)
    }
}

/// Jet values of a solution sampled on a grid.
#[pyclass(name = "Grid", module = "pss", frozen)]
struct PyGrid {
    inner: SolutionGrid,
}

fn grid_spec(text: &str) -> PyResult<GridSpec> {
    text.parse().map_err(value_err)
}

#[pymethods]
impl PyGrid {
    /// Sine-Gordon kink on `grid` (`"x0:x1:t0:t1:h"`).
    #[staticmethod]
    #[pyo3(signature = (grid, a = 1.0))]
    fn kink(grid: &str, a: f64) -> PyResult<Self> {
        let sol = solutions::sg_kink(a).map_err(value_err)?;
        Ok(PyGrid { inner: sol.sample(&grid_spec(grid)?, &[]).map_err(value_err)? })
    }

    /// `C·e^{p x + q t}` plus a particular solution of `u_xt = λu + ξu_x + τ`.
    #[staticmethod]
    #[pyo3(signature = (grid, lam, xi, tau, p, amplitude = 1.0))]
    fn linear(grid: &str, lam: f64, xi: f64, tau: f64, p: f64, amplitude: f64) -> PyResult<Self> {
        let sol = solutions::linear_solution(lam, xi, tau, p, amplitude).map_err(value_err)?;
        Ok(PyGrid { inner: sol.sample(&grid_spec(grid)?, &[]).map_err(value_err)? })
    }

    /// Read a `.csv` or binary grid file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let g = if csv { SolutionGrid::read_csv(&path) } else { SolutionGrid::read_binary(&path) };
        Ok(PyGrid { inner: g.map_err(value_err)? })
    }

    fn save_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_csv(&path).map_err(runtime_err)
    }

    /// `(nx, nt)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.spec.nx, self.inner.spec.nt)
    }

    /// `u` in row-major order with `t` as the slow index.
    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u().to_vec()
    }
}

/// Parse and simplify an expression.
#[pyfunction]
fn simplify(text: &str) -> PyResult<String> {
    Ok(expr::parse(text).map_err(value_err)?.simplify().to_string())
}

/// Randomized zero test of an expression with numeric `params`.
#[pyfunction]
#[pyo3(signature = (text, params = None, seed = None))]
fn is_zero(text: &str, params: Option<BTreeMap<String, f64>>, seed: Option<u64>) -> PyResult<bool> {
    let e = expr::parse(text).map_err(value_err)?;
    let mut zt = ZeroTest::default().with_params(&params.unwrap_or_default());
    if let Some(s) = seed {
        zt = zt.with_seed(s);
    }
    Ok(zt.check(&e).map_err(runtime_err)?.is_zero())
}

/// Closed-form second fundamental form of `family`.
#[pyfunction]
#[pyo3(signature = (family, l = 3.0, gamma_im = 1.0, sign = 1.0))]
fn closed_form(family: &PyFamily, l: f64, gamma_im: f64, sign: f64) -> PyResult<PySff> {
    let inner = sff::closed_form(&family.spec, &ImmersionParams { sign, l, gamma_im }).map_err(value_err)?;
    Ok(PySff { inner })
}

/// Finite-jet obstruction verdict with its trace, as a dict.
#[pyfunction]
#[pyo3(signature = (family, order = 1, l = 3.0, gamma_im = 1.0, sign = 1.0))]
fn obstruct<'py>(py: Python<'py>, family: &PyFamily, order: u32, l: f64, gamma_im: f64, sign: f64) -> PyResult<Bound<'py, PyAny>> {
    let imm = ImmersionParams { sign, l, gamma_im };
    let v = sff::finite_jet_obstruction(&family.spec.triple(), order, &imm).map_err(value_err)?;
    to_py(py, &v.to_json())
}

/// Integrate the frame over `grid` and return the surface diagnostics; with `out`, also
/// write the OBJ mesh and its diagnostics file.
#[pyfunction]
#[pyo3(signature = (family, form, grid, eps_deg = 0.1, out = None))]
fn immerse<'py>(py: Python<'py>, family: &PyFamily, form: &PySff, grid: &PyGrid, eps_deg: f64, out: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let opts = FrameOptions { eps_deg, ..FrameOptions::default() };
    let field = py
        .detach(|| integrate_frame(&family.spec.triple(), &form.inner, &grid.inner, &opts))
        .map_err(runtime_err)?;
    let diag = validate_surface(&field);
    if let Some(path) = out {
        export_mesh(&SurfaceMesh::from_field(&field), &diag, &path).map_err(runtime_err)?;
    }
    to_py(py, &diag)
}

#[pymodule]
fn pss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PySff>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(simplify, m)?)?;
    m.add_function(wrap_pyfunction!(is_zero, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(obstruct, m)?)?;
    m.add_function(wrap_pyfunction!(immerse, m)?)?;
    m.add("FAMILIES", FamilyId::ALL.map(|id| id.cli_name()).to_vec())?;
    Ok(())
}
