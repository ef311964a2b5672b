//! Python bindings for `intervalcg`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use intervalcg::bench::{self, Metric, ProfileData};
use intervalcg::problems::{self, ProblemSpec};
use intervalcg::qp::QpSolver;
use intervalcg::subproblem::{self, DirectionResult, LinearizationData};
use intervalcg::{BetaKind, BetaVariant, Error, SolverConfig, WolfeMode};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInterval { .. }
        | Error::NonFiniteInterval { .. }
        | Error::IntervalParse(_)
        | Error::DimensionMismatch { .. }
        | Error::UnknownProblem(_)
        | Error::InvalidConfig(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn problem(name: &str) -> PyResult<ProblemSpec> {
    problems::lookup(name).map_err(to_py)
}

/// Closed interval `[lo, hi]`.
#[pyclass(name = "Interval", module = "intervalcg_py", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
pub struct PyInterval(intervalcg::Interval);

#[pymethods]
impl PyInterval {
    #[new]
    fn new(lo: f64, hi: f64) -> PyResult<Self> {
        intervalcg::Interval::new(lo, hi).map(PyInterval).map_err(to_py)
    }

    #[staticmethod]
    fn point(x: f64) -> Self {
        PyInterval(intervalcg::Interval::point(x))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(PyInterval).map_err(to_py)
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi()
    }

    fn width(&self) -> f64 {
        self.0.width()
    }

    fn midpoint(&self) -> f64 {
        self.0.midpoint()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn scale(&self, alpha: f64) -> Self {
        PyInterval(self.0.scale(alpha))
    }

    fn gh_diff(&self, other: &PyInterval) -> Self {
        PyInterval(self.0.gh_diff(&other.0))
    }

    /// True when `self` is below `other` in both endpoints.
    fn dominates(&self, other: &PyInterval) -> bool {
        self.0.dominates(&other.0)
    }

    fn __add__(&self, other: &PyInterval) -> Self {
        PyInterval(self.0 + other.0)
    }

    fn __neg__(&self) -> Self {
        PyInterval(-self.0)
    }

    fn __repr__(&self) -> String {
        format!("Interval({}, {})", self.0.lo(), self.0.hi())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

fn direction_dict<'py>(py: Python<'py>, r: &DirectionResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("v", r.v.clone())?;
    d.set_item("xi", r.xi)?;
    d.set_item("psi_at_v", r.psi_at_v)?;
    d.set_item("norm_v", r.norm_v())?;
    d.set_item("multipliers", r.multipliers.clone())?;
    d.set_item("qp_iterations", r.qp_iterations)?;
    Ok(d)
}

/// Registered problems as a list of dicts.
#[pyfunction]
fn list_problems(py: Python<'_>) -> PyResult<Vec<Bound<'_, PyDict>>> {
    problems::registry()
        .into_iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("name", &p.name)?;
            d.set_item("description", &p.description)?;
            d.set_item("dim", p.dim())?;
            d.set_item("num_objectives", p.num_objectives())?;
            d.set_item("convex", p.convex)?;
            d.set_item("lower", p.lower.clone())?;
            d.set_item("upper", p.upper.clone())?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn sample_start(name: &str, seed: u64) -> PyResult<Vec<f64>> {
    Ok(problems::sample_start(&problem(name)?, seed))
}

/// Objective values of a registered problem at `x`.
#[pyfunction]
fn evaluate(name: &str, x: Vec<f64>) -> PyResult<Vec<PyInterval>> {
    let p = problem(name)?;
    let values = p.mo.eval(&x).map_err(to_py)?;
    Ok(values.into_iter().map(PyInterval).collect())
}

/// Steepest-descent-type direction of a registered problem at `x`.
#[pyfunction]
fn solve_direction<'py>(py: Python<'py>, name: &str, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let p = problem(name)?;
    let r = subproblem::solve_direction(&p.mo, &x, &QpSolver::default()).map_err(to_py)?;
    direction_dict(py, &r)
}

/// Direction subproblem for explicit gradient sums and widths, one row per objective.
#[pyfunction]
fn direction_from_data<'py>(py: Python<'py>, sums: Vec<Vec<f64>>, widths: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let data = LinearizationData::new(sums, widths).map_err(to_py)?;
    let r = subproblem::solve_direction_data(&data, &QpSolver::default()).map_err(to_py)?;
    direction_dict(py, &r)
}

fn json_loads<'py>(py: Python<'py>, text: String) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Runs the conjugate gradient solver and returns the run record as a dict.
#[pyfunction]
#[pyo3(signature = (name, variant = "fr", seed = None, x0 = None, rho = 1e-3, sigma = 0.1, eps = 1e-6, max_iter = 10_000, strong = true))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    name: &str,
    variant: &str,
    seed: Option<u64>,
    x0: Option<Vec<f64>>,
    rho: f64,
    sigma: f64,
    eps: f64,
    max_iter: usize,
    strong: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let p = problem(name)?;
    let kind: BetaKind = variant.parse().map_err(to_py)?;
    let mut cfg = SolverConfig::new(kind);
    cfg.rho = rho;
    cfg.sigma = sigma;
    cfg.eps = eps;
    cfg.max_iter = max_iter;
    cfg.wolfe_mode = if strong { WolfeMode::Strong } else { WolfeMode::Standard };
    let (x0, seed) = match (x0, seed) {
        (Some(x), s) => (x, s),
        (None, s) => {
            let s = s.unwrap_or(0);
            (problems::sample_start(&p, s), Some(s))
        }
    };
    let record = py
        .detach(|| intervalcg::cg::run_seeded(&p.mo, &x0, &cfg, seed))
        .map_err(to_py)?;
    let text = serde_json::to_string(&record).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_loads(py, text)
}

/// Runs the full problem x variant x seed matrix; returns one dict per run.
#[pyfunction]
#[pyo3(signature = (problems = None, variants = None, seeds = "0..9", parallelism = 1))]
fn run_bench<'py>(
    py: Python<'py>,
    problems: Option<Vec<String>>,
    variants: Option<Vec<String>>,
    seeds: &str,
    parallelism: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let problems = problems.unwrap_or_else(problems::names);
    let variants = match variants {
        Some(v) => v
            .iter()
            .map(|s| s.parse().map(BetaVariant::standard))
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py)?,
        None => BetaKind::ALL.into_iter().map(BetaVariant::standard).collect(),
    };
    let seeds = bench::parse_seeds(seeds).map_err(to_py)?;
    let matrix = bench::BenchMatrix::new(problems, variants, seeds, SolverConfig::default()).map_err(to_py)?;
    let records = py.detach(|| bench::run_matrix(&matrix, parallelism)).map_err(to_py)?;
    let rows: Vec<bench::RunRow> = records.iter().map(bench::RunRow::from).collect();
    let text = serde_json::to_string(&rows).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_loads(py, text)
}

/// Performance profile of a problem x solver cost table; `None` marks a failure.
#[pyfunction]
#[pyo3(signature = (values, problems = None, solvers = None))]
fn performance_profile<'py>(
    py: Python<'py>,
    values: Vec<Vec<Option<f64>>>,
    problems: Option<Vec<String>>,
    solvers: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let width = values.first().map_or(0, Vec::len);
    if values.iter().any(|row| row.len() != width) {
        return Err(PyValueError::new_err("rows of the cost table differ in length"));
    }
    let problems = problems.unwrap_or_else(|| (0..values.len()).map(|i| format!("p{i}")).collect());
    let solvers = solvers.unwrap_or_else(|| (0..width).map(|j| format!("s{j}")).collect());
    if problems.len() != values.len() || solvers.len() != width {
        return Err(PyValueError::new_err("labels do not match the cost table"));
    }
    let prof = ProfileData::from_table(Metric::Iterations, problems, solvers, &values);
    let d = PyDict::new(py);
    d.set_item("solvers", prof.solvers.clone())?;
    d.set_item("ratios", prof.ratios.clone())?;
    d.set_item("breakpoints", prof.breakpoints.clone())?;
    d.set_item("curves", prof.curves.clone())?;
    Ok(d)
}

#[pymodule]
fn intervalcg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_function(wrap_pyfunction!(list_problems, m)?)?;
    m.add_function(wrap_pyfunction!(sample_start, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_direction, m)?)?;
    m.add_function(wrap_pyfunction!(direction_from_data, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(performance_profile, m)?)?;
    let variants: Vec<&str> = BetaKind::ALL.iter().map(|k| k.name()).collect();
    m.add("BETA_VARIANTS", variants)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyList;

    #[test]
    fn module_round_trip() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "intervalcg_py").unwrap();
            intervalcg_py(&m).unwrap();
            let a = m.getattr("Interval").unwrap().call1((1.0, 2.0)).unwrap();
            let s: String = a.repr().unwrap().extract().unwrap();
            assert_eq!(s, "Interval(1, 2)");
            let probs = m.getattr("list_problems").unwrap().call0().unwrap();
            assert_eq!(probs.cast::<PyList>().unwrap().len(), 6);
            let rec = m.getattr("solve").unwrap().call1(("iq-shared-min",)).unwrap();
            let status: String = rec.get_item("status").unwrap().extract().unwrap();
            assert_eq!(status, "Critical");
            let err = m.getattr("sample_start").unwrap().call1(("nope", 0u64)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
        });
    }
}
