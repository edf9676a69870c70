use nonlocal_core::const_solver;
use nonlocal_core::kernels::{self, KernelSpec};
use nonlocal_core::plap_lab;
use nonlocal_core::symbolics::{self, compute_symbol, default_truncation, periodize};
use nonlocal_core::torus_field::{self, GridFunction, TorusGrid};
use nonlocal_core::Error;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use std::path::{Path, PathBuf};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyIOError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid {
    inner: TorusGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize, size: usize) -> PyResult<Self> {
        Ok(PyGrid { inner: TorusGrid::new(n, size).map_err(py_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Grid points in flat order.
    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len()).map(|i| self.inner.point(i)[..self.inner.dim()].to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, size={})", self.inner.dim(), self.inner.size())
    }
}

#[pyclass(name = "Field", from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: GridFunction,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(PyField { inner: GridFunction::new(grid.inner, values).map_err(py_err)? })
    }

    #[staticmethod]
    fn standard(grid: PyGrid, seed: u64) -> Self {
        PyField { inner: nonlocal_core::estimate_verifier::standard_field(&grid.inner, seed) }
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid }
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn lp_norm(&self, p: f64) -> f64 {
        torus_field::lp_norm(&self.inner, p)
    }

    fn frac_laplacian(&self, order: f64) -> PyResult<PyField> {
        Ok(PyField { inner: torus_field::frac_laplacian(&self.inner, order).map_err(py_err)? })
    }

    fn gagliardo_seminorm(&self, order: f64, p: f64) -> PyResult<f64> {
        torus_field::gagliardo_seminorm(&self.inner, order, p).map_err(py_err)
    }

    fn bessel_seminorm(&self, order: f64, p: f64) -> PyResult<f64> {
        torus_field::bessel_seminorm(&self.inner, order, p).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }
}

#[pyclass(name = "Kernel", frozen)]
struct PyKernel {
    inner: kernels::Kernel,
}

#[pymethods]
impl PyKernel {
    /// Builds a kernel from the TOML kernel description used by the CLI.
    #[staticmethod]
    #[pyo3(signature = (text, base_dir=None))]
    fn from_toml(text: &str, base_dir: Option<PathBuf>) -> PyResult<Self> {
        let spec = KernelSpec::parse(text).map_err(py_err)?;
        let base = base_dir.unwrap_or_default();
        Ok(PyKernel { inner: spec.build(&base).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (s, n, value=1.0))]
    fn constant(s: f64, n: usize, value: f64) -> PyResult<Self> {
        Ok(PyKernel { inner: kernels::constant_kernel(value, s, n).map_err(py_err)? })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family.clone()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    fn __call__(&self, x: Vec<f64>, r: f64, h: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim || h.len() != self.inner.dim {
            return Err(PyValueError::new_err("point and direction must match the kernel dimension"));
        }
        Ok(self.inner.eval(&x, r, &h))
    }
}

#[pyclass(name = "Symbol", frozen)]
struct PySymbol {
    inner: symbolics::Symbol,
    cone: kernels::Cone,
    eta: f64,
}

#[pymethods]
impl PySymbol {
    /// Symbol of the periodized kernel frozen at the origin on `grid`.
    #[new]
    fn new(kernel: &PyKernel, grid: PyGrid) -> PyResult<Self> {
        let k = &kernel.inner;
        if k.dim != grid.inner.dim() {
            return Err(PyValueError::new_err("kernel and grid dimensions differ"));
        }
        let mu = periodize(k, &vec![0.0; k.dim], k.s, default_truncation(k.dim)).map_err(py_err)?;
        let inner = compute_symbol(&mu, &grid.inner, grid.inner.size() / 2).map_err(py_err)?;
        Ok(PySymbol { inner, cone: k.cone.clone(), eta: k.eta })
    }

    fn __call__(&self, k: Vec<i64>) -> f64 {
        self.inner.value(&k)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    /// `(pass, report)` of the coercivity certificate.
    fn certificate(&self) -> PyResult<(bool, String)> {
        let c = symbolics::verify_coercivity(&self.inner, &self.cone, self.eta).map_err(py_err)?;
        Ok((c.pass, c.report()))
    }

    fn solve(&self, rhs: &PyField) -> PyResult<PyField> {
        Ok(PyField { inner: const_solver::solve_const(&self.inner, &rhs.inner).map_err(py_err)?.u })
    }
}

/// Both sides of the scalar p-Laplacian FTC identity.
#[pyfunction]
fn scalar_identity(a: f64, b: f64, p: f64) -> (f64, f64) {
    plap_lab::scalar_identity(a, b, p)
}

/// Runs a CLI command such as `"verify log"` and returns its exit code.
#[pyfunction]
fn run(command: &str, config: PathBuf, output: PathBuf) -> PyResult<i32> {
    let cmd: nonlocal_cli::Command = command.parse().map_err(py_err)?;
    let cfg = nonlocal_cli::RunConfig::load(Path::new(&config)).map_err(py_err)?;
    Ok(nonlocal_cli::run(cmd, &cfg, &output).map_err(py_err)?.exit_code())
}

#[pymodule]
fn nonlocal_torus(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PySymbol>()?;
    m.add_function(wrap_pyfunction!(scalar_identity, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
