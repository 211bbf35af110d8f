use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::reynolds_fem::driver::{run_adaptive, RunConfig};
use ::reynolds_fem::mesh::{build_rect_mesh, MarkSet, Mesh, Rect};
use ::reynolds_fem::problem::ProblemSpec;
use ::reynolds_fem::solver::{fixed_point_solve, Method, SolverConfig};
use ::reynolds_fem::space::DofMap;
use ::reynolds_fem::error::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Config { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(to_py)
}

#[pyclass(name = "ProblemSpec", from_py_object)]
#[derive(Clone)]
struct PyProblemSpec {
    inner: ProblemSpec,
}

#[pymethods]
impl PyProblemSpec {
    #[new]
    #[pyo3(signature = (theta_max, eccentricity, phase, aspect, cavitation_pressure = 0.0))]
    fn new(theta_max: f64, eccentricity: f64, phase: f64, aspect: f64, cavitation_pressure: f64) -> PyResult<Self> {
        let inner = ProblemSpec {
            domain: Rect::new(0.0, theta_max, 0.0, 1.0).map_err(to_py)?,
            eccentricity,
            phase,
            aspect,
            cavitation_pressure,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyProblemSpec { inner })
    }

    #[staticmethod]
    fn benchmark() -> Self {
        PyProblemSpec {
            inner: ProblemSpec::benchmark(),
        }
    }

    #[getter]
    fn eccentricity(&self) -> f64 {
        self.inner.eccentricity
    }

    #[getter]
    fn phase(&self) -> f64 {
        self.inner.phase
    }

    #[getter]
    fn aspect(&self) -> f64 {
        self.inner.aspect
    }

    #[getter]
    fn domain(&self) -> (f64, f64, f64, f64) {
        let d = self.inner.domain;
        (d.x0, d.x1, d.y0, d.y1)
    }

    fn d_value(&self, theta: f64, y: f64) -> f64 {
        self.inner.d_value([theta, y])
    }

    fn f_value(&self, theta: f64, y: f64) -> f64 {
        self.inner.f_value([theta, y])
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Mesh", from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: Mesh,
}

#[pymethods]
impl PyMesh {
    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles().iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    fn min_angle(&self) -> f64 {
        self.inner.min_angle()
    }

    fn refine(&self, marked: Vec<usize>) -> PyResult<Self> {
        let marks = MarkSet::new(&self.inner, marked).map_err(to_py)?;
        Ok(PyMesh {
            inner: self.inner.refine(&marks),
        })
    }

    fn refine_uniform(&self) -> Self {
        PyMesh {
            inner: self.inner.refine_uniform(),
        }
    }
}

#[pyfunction]
#[pyo3(name = "build_rect_mesh")]
fn py_build_rect_mesh(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> PyResult<PyMesh> {
    let domain = Rect::new(x0, x1, y0, y1).map_err(to_py)?;
    Ok(PyMesh {
        inner: build_rect_mesh(domain, nx, ny).map_err(to_py)?,
    })
}

#[pyclass(name = "Solution", skip_from_py_object)]
struct PySolution {
    #[pyo3(get)]
    values: Vec<f64>,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    active_points: usize,
    #[pyo3(get)]
    ndofs: usize,
}

#[pymethods]
impl PySolution {
    fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Fixed-point solve of the constrained problem on one mesh.
#[pyfunction]
#[pyo3(signature = (problem, mesh, degree = 1, method = "nitsche", alpha = 1e-2, penalty_eps = 10.0))]
fn solve(py: Python<'_>, problem: PyProblemSpec, mesh: PyMesh, degree: usize, method: &str, alpha: f64, penalty_eps: f64) -> PyResult<PySolution> {
    let cfg = SolverConfig {
        method: self::method(method)?,
        alpha,
        penalty_eps,
        ..Default::default()
    };
    let sol = py
        .detach(|| {
            let dm = Arc::new(DofMap::new(&mesh.inner, degree)?);
            fixed_point_solve(&problem.inner, &cfg, &mesh.inner, dm)
        })
        .map_err(to_py)?;
    Ok(PySolution {
        ndofs: sol.field.dofmap.n_free(),
        values: sol.field.values,
        iterations: sol.log.len(),
        active_points: sol.state.count(),
    })
}

/// Adaptive benchmark-style run; returns one dict per round.
#[pyfunction]
#[pyo3(signature = (problem = None, method = "nitsche", degree = 1, rounds = 7, beta = 0.5, alpha = 1e-2, penalty_eps = 10.0, nx = 12, ny = 8))]
#[allow(clippy::too_many_arguments)]
fn adaptive<'py>(
    py: Python<'py>,
    problem: Option<PyProblemSpec>,
    method: &str,
    degree: usize,
    rounds: usize,
    beta: f64,
    alpha: f64,
    penalty_eps: f64,
    nx: usize,
    ny: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = RunConfig::benchmark(self::method(method)?, degree, rounds);
    if let Some(p) = problem {
        cfg.problem = p.inner;
    }
    cfg.beta = beta;
    cfg.solver.alpha = alpha;
    cfg.solver.penalty_eps = penalty_eps;
    cfg.nx = nx;
    cfg.ny = ny;
    let run = py.detach(|| run_adaptive(&cfg)).map_err(to_py)?;
    run.report
        .rounds
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("round", r.round)?;
            d.set_item("ndofs", r.ndofs)?;
            d.set_item("eta_total", r.eta_total)?;
            d.set_item("p_max", r.p_max)?;
            d.set_item("p_min", r.p_min)?;
            d.set_item("iterations", r.iterations)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "reynolds_fem")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblemSpec>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(py_build_rect_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive, m)?)?;
    Ok(())
}
