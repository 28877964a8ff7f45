//! Python bindings: `import betatree`.
//!
//! Functions take plain floats, ints and lists; level functions are lists
//! indexed by level, tree functions are lists in breadth-first node order.

use betatree::evolution::{self, EvolutionConfig, Scheme};
use betatree::spectrum;
use betatree::{io, operator, verify, BetaWeight, LevelFunction, TreeFunction, TruncatedTree};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: betatree::Error) -> PyErr {
    match e {
        betatree::Error::IterationLimit { .. } | betatree::Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn weight(beta: f64) -> PyResult<BetaWeight> {
    BetaWeight::new(beta).map_err(to_py)
}

/// The regular `m`-ary tree truncated at depth `L`, numbered breadth first.
#[pyclass(name = "Tree", frozen)]
struct PyTree {
    inner: TruncatedTree,
}

#[pymethods]
impl PyTree {
    #[new]
    fn new(m: usize, depth: usize) -> PyResult<Self> {
        Ok(Self { inner: TruncatedTree::new(m, depth).map_err(to_py)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn level_of(&self, index: usize) -> PyResult<usize> {
        self.check(index)?;
        Ok(self.inner.level_of(index))
    }

    fn parent(&self, index: usize) -> PyResult<Option<usize>> {
        self.check(index)?;
        Ok(self.inner.parent_index(index))
    }

    fn children(&self, index: usize) -> PyResult<Vec<usize>> {
        self.check(index)?;
        Ok(self.inner.child_indices(index).collect())
    }

    /// Dot-separated digit path of a node; the root is `""`.
    fn path(&self, index: usize) -> PyResult<String> {
        Ok(self.inner.index_node(index).map_err(to_py)?.to_string())
    }

    fn index(&self, path: &str) -> PyResult<usize> {
        let node = betatree::NodeId::parse(path, self.inner.m()).map_err(to_py)?;
        self.inner.node_index(&node).map_err(to_py)
    }

    /// Boundary coordinate `ψ` of the node at `index`.
    fn psi(&self, index: usize) -> PyResult<f64> {
        Ok(self.inner.index_node(index).map_err(to_py)?.psi(self.inner.m()))
    }

    fn __repr__(&self) -> String {
        format!("Tree(m={}, depth={})", self.inner.m(), self.inner.depth())
    }
}

impl PyTree {
    fn check(&self, index: usize) -> PyResult<()> {
        if index >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node index {index} out of range")));
        }
        Ok(())
    }
}

#[pyclass(name = "EigenResult", frozen, get_all)]
struct PyEigenResult {
    beta: f64,
    lambda1: f64,
    eigenfunction: Vec<f64>,
    depth: usize,
    bracket: (f64, f64),
    lower_bound: f64,
    upper_bound: f64,
    interior_residual: f64,
    sum_identity_gap: f64,
    report_json: String,
}

#[pymethods]
impl PyEigenResult {
    fn __repr__(&self) -> String {
        format!("EigenResult(beta={:?}, depth={}, lambda1={:?})", self.beta, self.depth, self.lambda1)
    }
}

/// Principal eigenvalue for `beta` in (0, 1/2); `depth` defaults to min(400, overflow limit).
#[pyfunction]
#[pyo3(signature = (beta, depth = None, tol = spectrum::DEFAULT_TOL))]
fn principal_eigenvalue(beta: f64, depth: Option<usize>, tol: f64) -> PyResult<PyEigenResult> {
    let bw = weight(beta)?;
    let depth = depth.unwrap_or_else(|| spectrum::default_depth(&bw));
    let r = spectrum::principal_eigenvalue(&bw, depth, tol).map_err(to_py)?;
    let report_json = io::to_json_pretty(&io::EigenReport::new(&r, None)).map_err(to_py)?;
    Ok(PyEigenResult {
        beta: r.beta,
        lambda1: r.lambda1,
        eigenfunction: r.eigenfunction.values().to_vec(),
        depth: r.depth,
        bracket: r.bracket,
        lower_bound: r.bounds.lower,
        upper_bound: r.bounds.upper,
        interior_residual: r.interior_residual,
        sum_identity_gap: r.sum_identity_gap,
        report_json,
    })
}

/// `(lower, upper)` closed-form bounds on the principal eigenvalue.
#[pyfunction]
fn bounds(beta: f64) -> PyResult<(f64, f64)> {
    let b = spectrum::bounds(beta).map_err(to_py)?;
    Ok((b.lower, b.upper))
}

/// Level recurrence from `u_0 = 1`; returns `(values, first_nonpositive)`.
#[pyfunction]
fn shoot(beta: f64, lam: f64, depth: usize) -> PyResult<(Vec<f64>, Option<usize>)> {
    let t = spectrum::shoot(&weight(beta)?, lam, depth).map_err(to_py)?;
    Ok((t.values, t.first_nonpositive))
}

#[pyfunction]
fn apply_laplacian_level(beta: f64, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let u = LevelFunction::new(values).map_err(to_py)?;
    Ok(operator::apply_laplacian_level(&weight(beta)?, &u).map_err(to_py)?.into_values())
}

#[pyfunction]
fn apply_laplacian_tree(beta: f64, tree: &PyTree, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let u = TreeFunction::new(&tree.inner, values).map_err(to_py)?;
    Ok(operator::apply_laplacian_tree(&weight(beta)?, &u).map_err(to_py)?.into_values())
}

/// Averages a tree function over each level.
#[pyfunction]
fn level_average(tree: &PyTree, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let u = TreeFunction::new(&tree.inner, values).map_err(to_py)?;
    Ok(operator::level_average(&u).into_values())
}

/// `(1 - lam)^k` for `k = 0..=depth`, the `beta = 0` eigenfunctions.
#[pyfunction]
fn closed_form_beta0(lam: f64, depth: usize) -> PyResult<Vec<f64>> {
    Ok(spectrum::closed_form_beta0(lam, depth).map_err(to_py)?.into_values())
}

/// `1 + (k + a) p^k`; returns `(values, root_defect, warning)`.
#[pyfunction]
fn build_supersolution(beta: f64, a: f64, depth: usize) -> PyResult<(Vec<f64>, f64, Option<String>)> {
    let s = spectrum::build_supersolution(&weight(beta)?, a, depth).map_err(to_py)?;
    Ok((s.v.into_values(), s.root_defect, s.warning))
}

#[pyclass(name = "SupersolutionCertificate", frozen, get_all)]
struct PyCertificate {
    lam: f64,
    lower: f64,
    upper: f64,
    max_defect: f64,
    last_level_defect: f64,
    valid: bool,
}

#[pyfunction]
fn check_supersolution(beta: f64, lam: f64, values: Vec<f64>) -> PyResult<PyCertificate> {
    let v = LevelFunction::new(values).map_err(to_py)?;
    let c = spectrum::check_supersolution(&weight(beta)?, lam, &v).map_err(to_py)?;
    Ok(PyCertificate {
        lam: c.lambda,
        lower: c.lower,
        upper: c.upper,
        max_defect: c.max_defect,
        last_level_defect: c.last_level_defect,
        valid: c.is_valid(),
    })
}

/// Solves `Δ_β φ + lam φ = -1` on levels `0..=depth`.
#[pyfunction]
fn solve_resolvent(beta: f64, lam: f64, depth: usize) -> PyResult<Vec<f64>> {
    Ok(spectrum::solve_resolvent(&weight(beta)?, lam, depth).map_err(to_py)?.into_values())
}

/// `[(depth, lambda1), ...]` for `beta` in [1/2, 1).
#[pyfunction]
#[pyo3(signature = (beta, depths, tol = spectrum::DEFAULT_TOL))]
fn supercritical_diagnostic(beta: f64, depths: Vec<usize>, tol: f64) -> PyResult<Vec<(usize, f64)>> {
    let table = spectrum::supercritical_diagnostic(&weight(beta)?, &depths, tol).map_err(to_py)?;
    Ok(table.into_iter().map(|r| (r.depth, r.lambda1)).collect())
}

#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    inner: evolution::Trajectory,
    beta: f64,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn supnorms(&self) -> Vec<f64> {
        self.inner.supnorms.clone()
    }

    /// States per grid time: one value per node, or per level for level-constant data.
    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.states.clone()
    }

    #[getter]
    fn on_levels(&self) -> bool {
        matches!(self.inner.support, evolution::Support::Levels { .. })
    }

    #[pyo3(signature = (t_lo = 0.0, t_hi = None))]
    fn decay_rate(&self, t_lo: f64, t_hi: Option<f64>) -> PyResult<f64> {
        let t_hi = t_hi.unwrap_or_else(|| self.inner.t_end());
        evolution::decay_rate(&self.inner, (t_lo, t_hi)).map_err(to_py)
    }

    /// `max |u - K u|` over the grid, with `quad_points` trapezoid points per step (0: exact kernel).
    #[pyo3(signature = (quad_points = 1))]
    fn fixed_point_residual(&self, quad_points: usize) -> PyResult<f64> {
        evolution::fixed_point_residual(&weight(self.beta)?, &self.inner, quad_points).map_err(to_py)
    }

    fn supnorm_csv(&self) -> String {
        io::supnorm_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.times.len()
    }
}

/// Solves `u_t = Δ_β u` from the tree function `initial`. Level-constant data run
/// on the level chain unless `full_tree` is set.
#[pyfunction]
#[pyo3(signature = (beta, tree, initial, t_end, dt, scheme = "implicit", picard_tol = 1e-10,
                    picard_max_iter = 200, quad_points = 1, extrapolation = 1, full_tree = false))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    beta: f64,
    tree: &PyTree,
    initial: Vec<f64>,
    t_end: f64,
    dt: f64,
    scheme: &str,
    picard_tol: f64,
    picard_max_iter: usize,
    quad_points: usize,
    extrapolation: usize,
    full_tree: bool,
) -> PyResult<PyTrajectory> {
    let scheme = match scheme {
        "implicit" => Scheme::Implicit,
        "picard" => Scheme::Picard,
        other => return Err(PyValueError::new_err(format!("scheme must be 'implicit' or 'picard', got {other:?}"))),
    };
    let bw = weight(beta)?;
    let f = TreeFunction::new(&tree.inner, initial).map_err(to_py)?;
    let config = EvolutionConfig {
        scheme,
        dt,
        t_end,
        picard_tol,
        picard_max_iter,
        quad_points_per_dt: quad_points,
        extrapolation,
    };
    let inner = py
        .detach(|| {
            if full_tree {
                evolution::solve_on_tree(&bw, &f, &config)
            } else {
                evolution::solve(&bw, &f, &config)
            }
        })
        .map_err(to_py)?;
    Ok(PyTrajectory { inner, beta })
}

/// Runs the property suites; returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (seed = 0, operator_cases = 20, comparison_pairs = 100))]
fn run_verify(py: Python<'_>, seed: u64, operator_cases: usize, comparison_pairs: usize) -> PyResult<String> {
    let config = verify::VerifyConfig { seed, operator_cases, comparison_pairs, ..Default::default() };
    let report = py.detach(|| verify::run_all(&config)).map_err(to_py)?;
    io::to_json_pretty(&report).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "betatree")]
fn betatree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PyEigenResult>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(principal_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(shoot, m)?)?;
    m.add_function(wrap_pyfunction!(apply_laplacian_level, m)?)?;
    m.add_function(wrap_pyfunction!(apply_laplacian_tree, m)?)?;
    m.add_function(wrap_pyfunction!(level_average, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_beta0, m)?)?;
    m.add_function(wrap_pyfunction!(build_supersolution, m)?)?;
    m.add_function(wrap_pyfunction!(check_supersolution, m)?)?;
    m.add_function(wrap_pyfunction!(solve_resolvent, m)?)?;
    m.add_function(wrap_pyfunction!(supercritical_diagnostic, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
