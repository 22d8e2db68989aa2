//! Python bindings: `import hadamard_resurgence`.

use std::sync::Arc;

use hadamard_core::acceptance::{self, AcceptanceConfig, Scale};
use hadamard_core::borel::{self, FormalSeries};
use hadamard_core::deformation::FieldVariant;
use hadamard_core::geometry::{self, SingularSet};
use hadamard_core::hadamard::{self as core_hadamard, ContinuationOptions};
use hadamard_core::{germ, io, Error, ErrorKind};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(hadamard_resurgence, HadamardError, PyException);
create_exception!(hadamard_resurgence, InputError, HadamardError);
create_exception!(hadamard_resurgence, ValidationError, HadamardError);
create_exception!(hadamard_resurgence, NumericalError, HadamardError);

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.kind() {
        ErrorKind::Input => InputError::new_err(msg),
        ErrorKind::Validation => ValidationError::new_err(msg),
        ErrorKind::Numerical => NumericalError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for hadamard_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A germ of analytic function at 0 together with its singular set.
#[pyclass(frozen, module = "hadamard_resurgence")]
struct Germ {
    inner: Arc<germ::Germ>,
}

impl Germ {
    fn wrap(g: germ::Germ) -> Self {
        Germ { inner: Arc::new(g) }
    }
}

#[pymethods]
impl Germ {
    /// Parse a germ spec such as `geometric(2+0i)` or `rational([1],[1,-3,2])`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        io::parse_germ(spec).py().map(Germ::wrap)
    }

    #[staticmethod]
    fn geometric(alpha: Complex64) -> PyResult<Self> {
        germ::Germ::geometric(alpha).py().map(Germ::wrap)
    }

    #[staticmethod]
    fn log_f0() -> Self {
        Germ::wrap(germ::Germ::log_f0())
    }

    #[staticmethod]
    fn f1() -> Self {
        Germ::wrap(germ::Germ::f1())
    }

    #[staticmethod]
    fn li2() -> Self {
        Germ::wrap(germ::Germ::li2())
    }

    #[staticmethod]
    fn power(lam: Complex64) -> PyResult<Self> {
        germ::Germ::power(lam).py().map(Germ::wrap)
    }

    #[staticmethod]
    fn exp_e1_borel() -> Self {
        Germ::wrap(germ::Germ::exp_e1_borel())
    }

    /// `num/den` from ascending coefficient lists.
    #[staticmethod]
    fn rational(num: Vec<Complex64>, den: Vec<Complex64>) -> PyResult<Self> {
        germ::Germ::rational(num, den).py().map(Germ::wrap)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius_of_convergence()
    }

    fn taylor_coeffs(&self, n: usize) -> Vec<Complex64> {
        self.inner.taylor_coeffs().iter().take(n).copied().collect()
    }

    /// Points of the singular set in `|z| ≤ r`.
    fn singular_points(&self, r: f64) -> Vec<Complex64> {
        self.inner.singular_set().enumerate(r)
    }

    /// Principal branch at `z`, by Taylor series or along the ray from 0.
    fn __call__(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.eval_principal(z).py()
    }

    /// The branch reached by continuing along `path` from its start.
    fn continue_along(&self, path: &Path) -> PyResult<Complex64> {
        let mut t = germ::BranchTracker::init(&self.inner, path.inner.start()).py()?;
        t.follow_path(&path.inner).py()
    }

    fn __repr__(&self) -> String {
        format!("Germ({})", self.inner.name())
    }
}

/// A piecewise-smooth path `γ: [0, 1] → ℂ`.
#[pyclass(frozen, module = "hadamard_resurgence")]
struct Path {
    inner: geometry::Path,
}

#[pymethods]
impl Path {
    /// Polyline through the waypoints with corners rounded by `rounding`.
    #[new]
    #[pyo3(signature = (waypoints, rounding = None))]
    fn new(waypoints: Vec<Complex64>, rounding: Option<f64>) -> PyResult<Self> {
        let inner = geometry::smooth_waypoints(&waypoints, rounding).py()?;
        Ok(Path { inner })
    }

    #[staticmethod]
    fn circle(center: Complex64, start: Complex64, turns: f64) -> PyResult<Self> {
        geometry::Path::circle(center, start, turns).py().map(|inner| Path { inner })
    }

    /// `{"waypoints": [[re, im], ...], "rounding": r}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        io::parse_path(text).py().map(|inner| Path { inner })
    }

    fn then(&self, other: &Path) -> PyResult<Self> {
        geometry::Path::concat(&[self.inner.clone(), other.inner.clone()])
            .py()
            .map(|inner| Path { inner })
    }

    fn __call__(&self, t: f64) -> Complex64 {
        self.inner.eval(t)
    }

    #[getter]
    fn start(&self) -> Complex64 {
        self.inner.start()
    }

    #[getter]
    fn end(&self) -> Complex64 {
        self.inner.end()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }
}

/// Outcome of a continuation.
#[pyclass(frozen, module = "hadamard_resurgence")]
struct ContinuationResult {
    inner: core_hadamard::ContinuationResult,
}

#[pymethods]
impl ContinuationResult {
    #[getter]
    fn value(&self) -> Complex64 {
        self.inner.value
    }

    #[getter]
    fn endpoint(&self) -> Complex64 {
        self.inner.endpoint
    }

    /// Coefficients in powers of `ξ − γ(1)`.
    #[getter]
    fn local_taylor(&self) -> Vec<Complex64> {
        self.inner.local_taylor.clone()
    }

    #[getter]
    fn error_estimate(&self) -> f64 {
        self.inner.diagnostics.quadrature_error_estimate
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.diagnostics.node_count
    }

    /// Snapshot times with the node positions at each.
    #[getter]
    fn snapshots(&self) -> Vec<(f64, Vec<Complex64>)> {
        self.inner.snapshots.iter().map(|s| (s.t, s.nodes.clone())).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_json(&self.inner).py()
    }

    fn __repr__(&self) -> String {
        format!(
            "ContinuationResult(value={}, error_estimate={:e}, nodes={})",
            self.inner.value, self.inner.diagnostics.quadrature_error_estimate, self.inner.diagnostics.node_count
        )
    }
}

fn options(tolerance: f64, n_nodes: usize, field: &str, snapshots: Option<Vec<f64>>) -> PyResult<ContinuationOptions> {
    Ok(ContinuationOptions {
        tolerance,
        n_nodes,
        field: field.parse::<FieldVariant>().py()?,
        snapshots: snapshots.unwrap_or_default(),
        ..Default::default()
    })
}

/// Points of `Ω = {0} ∪ A·B` in `|z| ≤ radius` for finite `A`, `B`.
#[pyfunction]
fn omega(a: Vec<Complex64>, b: Vec<Complex64>, radius: f64) -> Vec<Complex64> {
    geometry::product_set(&SingularSet::finite(a), &SingularSet::finite(b)).enumerate(radius)
}

/// Principal value of `f ⊙ g` at `xi` from the circle integral.
#[pyfunction]
#[pyo3(signature = (f, g, xi, rho = None))]
fn hadamard_principal(f: &Germ, g: &Germ, xi: Complex64, rho: Option<f64>) -> PyResult<Complex64> {
    core_hadamard::hadamard_principal(&f.inner, &g.inner, xi, rho, 64).py()
}

/// Continue the principal branch of `f ⊙ g` along `path`.
#[pyfunction]
#[pyo3(signature = (f, g, path, tolerance = 1e-10, n_nodes = 256, field = "cutoff", snapshots = None))]
#[allow(clippy::too_many_arguments)]
fn continue_hadamard(
    py: Python<'_>,
    f: &Germ,
    g: &Germ,
    path: &Path,
    tolerance: f64,
    n_nodes: usize,
    field: &str,
    snapshots: Option<Vec<f64>>,
) -> PyResult<ContinuationResult> {
    let opts = options(tolerance, n_nodes, field, snapshots)?;
    let (f, g, p) = (f.inner.clone(), g.inner.clone(), path.inner.clone());
    let inner = py.detach(move || core_hadamard::continue_hadamard(&f, &g, &p, &opts)).py()?;
    Ok(ContinuationResult { inner })
}

/// `(before, after, difference, loop_kind)` for `turns` loops around `omega`.
#[pyfunction]
#[pyo3(signature = (f, g, basepoint, omega, pre_path = None, turns = 1, tolerance = 1e-10, n_nodes = 256))]
#[allow(clippy::too_many_arguments)]
fn monodromy(
    py: Python<'_>,
    f: &Germ,
    g: &Germ,
    basepoint: Complex64,
    omega: Complex64,
    pre_path: Option<&Path>,
    turns: i32,
    tolerance: f64,
    n_nodes: usize,
) -> PyResult<(Complex64, Complex64, Complex64, &'static str)> {
    let opts = options(tolerance, n_nodes, "cutoff", None)?;
    let (f, g) = (f.inner.clone(), g.inner.clone());
    let pre = pre_path.map(|p| p.inner.clone());
    let r = py
        .detach(move || core_hadamard::monodromy(&f, &g, basepoint, omega, pre.as_ref(), turns, &opts))
        .py()?;
    Ok((r.before, r.after, r.difference, r.loop_kind))
}

/// Residuals of the bridging and convolution identities up to `x^order`,
/// computed exactly from the given float coefficients of `x^offset, ...`.
#[pyfunction]
#[pyo3(signature = (f, g, offset = 1))]
fn borel_check(f: Vec<Complex64>, g: Vec<Complex64>, offset: usize) -> PyResult<(f64, f64)> {
    let order = offset + f.len().min(g.len());
    let fr = borel::to_rational(&FormalSeries::with_order(f, offset, order).py()?).py()?;
    let gr = borel::to_rational(&FormalSeries::with_order(g, offset, order).py()?).py()?;
    let n = order.saturating_sub(1);
    Ok((
        borel::bridge_identity_check(&fr, &gr, n).py()?,
        borel::convolution_residual(&fr, &gr, n).py()?,
    ))
}

/// Run acceptance criteria at reduced scale: `[(id, passed, detail), ...]`.
#[pyfunction]
#[pyo3(signature = (criteria = None))]
fn selftest(py: Python<'_>, criteria: Option<Vec<u8>>) -> PyResult<Vec<(u8, bool, String)>> {
    let ids = criteria.unwrap_or_else(|| (1..=9).collect());
    if let Some(bad) = ids.iter().find(|&&i| !(1..=9).contains(&i)) {
        return Err(InputError::new_err(format!("no criterion {bad}")));
    }
    let cfg = AcceptanceConfig::new(Scale::Reduced);
    Ok(py.detach(move || {
        ids.iter()
            .map(|&id| {
                let r = acceptance::run_criterion(id, &cfg);
                (r.id, r.passed, r.detail)
            })
            .collect()
    }))
}

#[pymodule]
fn hadamard_resurgence(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Germ>()?;
    m.add_class::<Path>()?;
    m.add_class::<ContinuationResult>()?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(hadamard_principal, m)?)?;
    m.add_function(wrap_pyfunction!(continue_hadamard, m)?)?;
    m.add_function(wrap_pyfunction!(monodromy, m)?)?;
    m.add_function(wrap_pyfunction!(borel_check, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    let py = m.py();
    m.add("HadamardError", py.get_type::<HadamardError>())?;
    m.add("InputError", py.get_type::<InputError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    Ok(())
}
