//! Python bindings for `fracocp`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fracocp::harness::{run_spatial_study, run_temporal_study};
use fracocp::{
    emit_table, fixed_point_solve, DiscreteProblem, Error, ExperimentConfig, FixedPointOptions, Grading,
    ProblemSpec, SpatialGrid, TableFormat, TemporalGrid,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Problem data: fractional order, bounds, cost weight and the data functions.
#[pyclass(name = "Problem", module = "fracocp_py")]
struct Problem {
    spec: ProblemSpec,
}

#[pymethods]
impl Problem {
    /// The experiment instance for `alpha` and initial-datum parameter `r`.
    #[staticmethod]
    #[pyo3(signature = (alpha, r = 0.0))]
    fn experiment(alpha: f64, r: f64) -> PyResult<Self> {
        Ok(Problem { spec: fracocp::default_experiment_spec(alpha, r).map_err(py_err)? })
    }

    /// Parse `key = value` configuration text.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(Problem { spec: ProblemSpec::from_config_str(text).map_err(py_err)? })
    }

    fn to_config(&self) -> String {
        self.spec.to_config_string()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.spec.nu
    }

    #[getter]
    fn bounds(&self) -> (f64, f64) {
        (self.spec.u_lo, self.spec.u_hi)
    }

    #[getter]
    fn final_time(&self) -> f64 {
        self.spec.final_time
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(alpha={}, nu={}, bounds=({}, {}), T={})",
            self.spec.alpha, self.spec.nu, self.spec.u_lo, self.spec.u_hi, self.spec.final_time
        )
    }
}

fn config(problem: &Problem, sigmas: Option<(f64, f64)>, uniform: bool, opts: FixedPointOptions) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(problem.spec.clone());
    cfg.grading = match (uniform, sigmas) {
        (true, _) => Grading::Uniform,
        (false, Some((sigma1, sigma2))) => Grading::Custom { sigma1, sigma2 },
        (false, None) => Grading::Default,
    };
    cfg.optimizer = opts;
    cfg
}

fn table_format(format: &str) -> PyResult<TableFormat> {
    match format {
        "text" => Ok(TableFormat::Text),
        "csv" => Ok(TableFormat::Csv),
        other => Err(PyValueError::new_err(format!("unknown table format `{other}`"))),
    }
}

/// Default grading exponents `(sigma1, sigma2)`.
#[pyfunction]
#[pyo3(signature = (alpha, r = 0.0))]
fn default_sigmas(alpha: f64, r: f64) -> PyResult<(f64, f64)> {
    fracocp::default_sigmas(alpha, r).map_err(py_err)
}

/// Nodes of the graded temporal grid with `2 * half_steps` slabs.
#[pyfunction]
#[pyo3(signature = (half_steps, sigma1, sigma2, final_time = 1.0))]
fn temporal_nodes(half_steps: usize, sigma1: f64, sigma2: f64, final_time: f64) -> PyResult<Vec<f64>> {
    Ok(TemporalGrid::graded(half_steps, sigma1, sigma2, final_time).map_err(py_err)?.nodes().to_vec())
}

/// Nodes of the uniform spatial grid on [0, 1].
#[pyfunction]
fn spatial_nodes(cells: usize) -> PyResult<Vec<f64>> {
    Ok(SpatialGrid::uniform(cells).map_err(py_err)?.nodes())
}

/// Two-parameter Mittag-Leffler function for `z <= 0`.
#[pyfunction]
fn ml(beta: f64, gamma: f64, z: f64) -> PyResult<f64> {
    fracocp::ml(beta, gamma, z).map_err(py_err)
}

#[pyfunction]
fn estimate_order(e1: f64, e2: f64, p1: f64, p2: f64) -> f64 {
    fracocp::estimate_order(e1, e2, p1, p2)
}

/// Solve the discrete control problem with `2^m` steps per half interval and `n` cells.
///
/// Returns a dict with the iteration history, the cost, the optimality
/// residual and the nodal values of state, adjoint and control per slab.
#[pyfunction]
#[pyo3(signature = (problem, m, n, tol = 1e-13, max_iter = 200, theta = 1.0, sigmas = None, uniform = false))]
#[allow(clippy::too_many_arguments)]
fn solve_ocp<'py>(
    py: Python<'py>,
    problem: &Problem,
    m: u32,
    n: usize,
    tol: f64,
    max_iter: usize,
    theta: f64,
    sigmas: Option<(f64, f64)>,
    uniform: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(problem, sigmas, uniform, FixedPointOptions { tol, max_iter, theta });
    let (t, x) = (cfg.temporal_grid(m).map_err(py_err)?, SpatialGrid::uniform(n).map_err(py_err)?);
    let (sol, ocp) = py
        .detach(|| {
            let ocp = DiscreteProblem::new(&cfg.spec, t.clone(), x)?;
            let sol = fixed_point_solve(&ocp, &cfg.optimizer)?;
            Ok::<_, Error>((sol, ocp))
        })
        .map_err(py_err)?;
    let residual = ocp.optimality_residual(&sol.control, &sol.adjoint).map_err(py_err)?;
    let slab_rows = |f: &fracocp::SpaceTimeField| -> Vec<Vec<f64>> {
        (0..f.slabs())
            .map(|k| {
                let mut row = Vec::with_capacity(n + 1);
                row.push(0.0);
                row.extend_from_slice(f.slab(k));
                row.push(0.0);
                row
            })
            .collect()
    };
    let d = PyDict::new(py);
    d.set_item("iterations", sol.iterations)?;
    d.set_item("increments", sol.increments.clone())?;
    d.set_item("costs", sol.costs.clone())?;
    d.set_item("cost", *sol.costs.last().unwrap_or(&f64::NAN))?;
    d.set_item("residual", residual)?;
    d.set_item("control_range", sol.control.range())?;
    d.set_item("time_nodes", t.nodes().to_vec())?;
    d.set_item("space_nodes", x.nodes())?;
    d.set_item("state", slab_rows(&sol.state))?;
    d.set_item("adjoint", slab_rows(&sol.adjoint))?;
    d.set_item("control", sol.control.node_samples().chunks(n + 1).map(<[f64]>::to_vec).collect::<Vec<_>>())?;
    Ok(d)
}

/// Spatial convergence table at fixed `m`, as text or CSV.
#[pyfunction]
#[pyo3(signature = (problem, m, n_values, n_ref, format = "csv", sigmas = None, uniform = false))]
#[allow(clippy::too_many_arguments)]
fn spatial_study(
    py: Python<'_>,
    problem: &Problem,
    m: u32,
    n_values: Vec<usize>,
    n_ref: usize,
    format: &str,
    sigmas: Option<(f64, f64)>,
    uniform: bool,
) -> PyResult<String> {
    let fmt = table_format(format)?;
    let cfg = config(problem, sigmas, uniform, FixedPointOptions::default());
    let table = py.detach(|| run_spatial_study(&cfg, m, &n_values, n_ref)).map_err(py_err)?;
    Ok(emit_table(&table, fmt))
}

/// Temporal convergence table at fixed `n`, as text or CSV.
#[pyfunction]
#[pyo3(signature = (problem, n, m_values, m_ref, format = "csv", sigmas = None, uniform = false))]
#[allow(clippy::too_many_arguments)]
fn temporal_study(
    py: Python<'_>,
    problem: &Problem,
    n: usize,
    m_values: Vec<u32>,
    m_ref: u32,
    format: &str,
    sigmas: Option<(f64, f64)>,
    uniform: bool,
) -> PyResult<String> {
    let fmt = table_format(format)?;
    let cfg = config(problem, sigmas, uniform, FixedPointOptions::default());
    let table = py.detach(|| run_temporal_study(&cfg, n, &m_values, m_ref)).map_err(py_err)?;
    Ok(emit_table(&table, fmt))
}

#[pymodule]
fn fracocp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_function(wrap_pyfunction!(default_sigmas, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(ml, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_order, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ocp, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_study, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_study, m)?)?;
    Ok(())
}
