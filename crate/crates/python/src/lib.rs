//! Python bindings for `star_coupling`.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use star_coupling::interface::{self, to_normal_form};
use star_coupling::numeric::{CMatrix, RankTolerance};
use star_coupling::oracle::{assemble, eig_clusters, GridSpec};
use star_coupling::{coupling, limits, point, weyl, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        Error::Input(_)
        | Error::Json(_)
        | Error::D3Violation { .. }
        | Error::D4Violation(_)
        | Error::D5Violation { .. }
        | Error::Precondition(_)
        | Error::Unsupported(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn tol(value: f64) -> PyResult<RankTolerance> {
    RankTolerance::new(value).map_err(py_err)
}

fn to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: Vec<Vec<Complex64>>, name: &str) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(format!("{name} must be square")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Interface condition `A·u(0) + B·u'(0) = 0`.
#[pyclass(
    name = "InterfaceCondition",
    module = "star_coupling_py",
    from_py_object
)]
#[derive(Clone)]
pub struct PyInterface {
    inner: interface::InterfaceCondition,
}

#[pymethods]
impl PyInterface {
    #[new]
    #[pyo3(signature = (a, b, tol=1e-8))]
    fn new(a: Vec<Vec<Complex64>>, b: Vec<Vec<Complex64>>, tol: f64) -> PyResult<Self> {
        let inner = interface::validate(from_rows(a, "A")?, from_rows(b, "B")?, self::tol(tol)?)
            .map_err(py_err)?;
        Ok(PyInterface { inner })
    }

    #[staticmethod]
    fn preset(name: &str, n: usize) -> PyResult<Self> {
        let inner = interface::InterfaceCondition::preset(name, n).map_err(py_err)?;
        Ok(PyInterface { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (text, tol=1e-8))]
    fn from_json(text: &str, tol: f64) -> PyResult<Self> {
        let inner =
            interface::InterfaceCondition::from_json_str(text, self::tol(tol)?).map_err(py_err)?;
        Ok(PyInterface { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_json()).map_err(|e| py_err(e.into()))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn rank_b(&self) -> usize {
        self.inner.rank_b()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.a())
    }

    #[getter]
    fn b(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.b())
    }

    #[pyo3(signature = (tol=1e-8))]
    fn satisfies_d4(&self, tol: f64) -> PyResult<bool> {
        interface::satisfies_d4(&self.inner, self::tol(tol)?).map_err(py_err)
    }

    /// `{"permutation", "A1", "A2"}`.
    #[pyo3(signature = (tol=1e-8))]
    fn normal_form<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let nf = to_normal_form(&self.inner, self::tol(tol)?).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("permutation", nf.permutation.clone())?;
        d.set_item("A1", to_rows(&nf.a1))?;
        d.set_item("A2", to_rows(&nf.a2))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "InterfaceCondition(n={}, rank_b={})",
            self.inner.n(),
            self.inner.rank_b()
        )
    }
}

/// Star graph with one edge per interface coordinate.
#[pyclass(name = "StarGraph", module = "star_coupling_py", from_py_object)]
#[derive(Clone)]
pub struct PyGraph {
    inner: weyl::StarGraph,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = weyl::StarGraph::from_json_str(text).map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    /// Edges of the given lengths, `q = 0`, Dirichlet at the far ends.
    #[staticmethod]
    fn dirichlet(lengths: Vec<f64>) -> PyResult<Self> {
        let inner = weyl::StarGraph::dirichlet(&lengths).map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    #[staticmethod]
    fn free_half_lines(n: usize) -> PyResult<Self> {
        let inner = weyl::StarGraph::free_half_lines(n).map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_json()).map_err(|e| py_err(e.into()))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Diagonal of `M₀(z)`.
    fn m0(&self, z: Complex64) -> PyResult<Vec<Complex64>> {
        Ok(weyl::eval_m0(&self.inner, z).map_err(py_err)?.m)
    }

    fn __repr__(&self) -> String {
        format!("StarGraph(n={})", self.inner.n())
    }
}

/// `M_w(z)` as a list of rows.
#[pyfunction]
#[pyo3(signature = (graph, ic, z, tol=1e-8))]
fn eval_mw(
    graph: &PyGraph,
    ic: &PyInterface,
    z: Complex64,
    tol: f64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let s = coupling::eval_mw(&graph.inner, &ic.inner, z, self::tol(tol)?).map_err(py_err)?;
    Ok(to_rows(&s.mw))
}

/// Eigenvalue multiplicities at `x`: `{"np_0", "np_ab", "jp", "jp_star", "jm", "lemma5_case"}`.
#[pyfunction]
#[pyo3(signature = (graph, ic, x, tol=1e-8))]
fn point_multiplicity<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    ic: &PyInterface,
    x: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let g = point::point_multiplicity(&graph.inner, &ic.inner, x, point::U0_TOL, self::tol(tol)?)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("np_0", g.np_0)?;
    d.set_item("np_ab", g.np_ab)?;
    d.set_item("jp", g.jp.clone())?;
    d.set_item("jp_star", g.jp_star.clone())?;
    d.set_item("jm", g.jm.clone())?;
    d.set_item("lemma5_case", g.lemma5_case)?;
    Ok(d)
}

/// Rank of the boundary limit of `Im M_w/Im tr M_w` at `x`.
#[pyfunction]
fn estimate_nab(graph: &PyGraph, ic: &PyInterface, x: f64) -> PyResult<usize> {
    let est = limits::estimate_nab(
        &graph.inner,
        &ic.inner,
        x,
        &limits::EpsSchedule::default(),
        limits::STABILITY_TOL,
    )
    .map_err(py_err)?;
    Ok(est.nab)
}

#[pyfunction]
#[pyo3(signature = (ic, k, seed=0, tol=1e-8))]
fn reduce_rank(ic: &PyInterface, k: usize, seed: u64, tol: f64) -> PyResult<PyInterface> {
    let inner = interface::reduce_rank(&ic.inner, k, self::tol(tol)?, seed).map_err(py_err)?;
    Ok(PyInterface { inner })
}

#[pyfunction]
#[pyo3(signature = (ic1, ic2, tol=1e-8))]
fn coupling_codim(ic1: &PyInterface, ic2: &PyInterface, tol: f64) -> PyResult<usize> {
    interface::coupling_codim(&ic1.inner, &ic2.inner, self::tol(tol)?).map_err(py_err)
}

/// Finite-difference eigenvalue clusters `(center, multiplicity)` in `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (graph, ic, lo, hi, points_per_edge=2000, cluster_radius=1e-3))]
fn oracle_clusters(
    graph: &PyGraph,
    ic: &PyInterface,
    lo: f64,
    hi: f64,
    points_per_edge: usize,
    cluster_radius: f64,
) -> PyResult<Vec<(f64, usize)>> {
    let grid = GridSpec::new(points_per_edge, GridSpec::default().truncation).map_err(py_err)?;
    let op = assemble(&graph.inner, &ic.inner, &grid).map_err(py_err)?;
    let report = eig_clusters(&op, (lo, hi), cluster_radius).map_err(py_err)?;
    Ok(report
        .clusters
        .iter()
        .map(|c| (c.center, c.multiplicity))
        .collect())
}

#[pymodule]
fn star_coupling_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterface>()?;
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(eval_mw, m)?)?;
    m.add_function(wrap_pyfunction!(point_multiplicity, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_nab, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_rank, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_codim, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_clusters, m)?)?;
    Ok(())
}
