use ftau::cli::{self, Command, Format};
use ftau::radial::{
    branch_catalog, build_solution, expansion_coefficients, measure_remainder_slope, select_branch,
    FirstIntegral, RadialSolution, DEFAULT_R_MIN,
};
use ftau::{Error, Operator};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    let msg = match &e {
        Error::Range { bound, .. } => format!("{}: {e} (bound {bound})", e.kind()),
        _ => format!("{}: {e}", e.kind()),
    };
    match e {
        Error::Numerical(_) | Error::Singularity { .. } => PyArithmeticError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

#[pyclass(name = "Operator", frozen)]
#[derive(Clone)]
struct PyOperator {
    inner: Operator,
}

#[pymethods]
impl PyOperator {
    #[new]
    #[pyo3(signature = (tau, n, C0 = 0.0))]
    #[allow(non_snake_case)]
    fn new(tau: f64, n: usize, C0: f64) -> PyResult<Self> {
        Ok(PyOperator {
            inner: Operator::new(tau, n, C0).map_err(to_py)?,
        })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }
    #[getter(C0)]
    fn big_c0(&self) -> f64 {
        self.inner.c0()
    }
    #[getter]
    fn case(&self) -> &'static str {
        self.inner.case().name()
    }
    /// Normalized constant C' of the radial first integral.
    #[getter]
    fn cprime(&self) -> f64 {
        self.inner.cprime()
    }

    /// F_tau of a spectrum.
    fn evaluate(&self, eigenvalues: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&eigenvalues).map_err(to_py)
    }

    fn term(&self, lam: f64) -> PyResult<f64> {
        self.inner.term(lam).map_err(to_py)
    }

    fn term_inverse(&self, value: f64) -> PyResult<f64> {
        self.inner.term_inverse(value).map_err(to_py)
    }

    /// Branches of the radial first integral, as dicts.
    fn branches<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let fi = FirstIntegral::new(&self.inner).map_err(to_py)?;
        branch_catalog(&fi)
            .map_err(to_py)?
            .into_iter()
            .map(|b| {
                let d = PyDict::new(py);
                d.set_item("p", b.p)?;
                d.set_item("w_interval", (b.w_interval.lo, b.w_interval.hi))?;
                d.set_item("xi_interval", (b.xi_interval.lo, b.xi_interval.hi))?;
                d.set_item("xi_names", b.xi_names.clone())?;
                d.set_item("w_at_zero", b.w_at_zero)?;
                d.set_item("analytic", b.analytic_at_zero)?;
                d.set_item("tagged", b.tagged)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Operator(tau={}, n={}, C0={}, case={})",
            self.inner.tau(),
            self.inner.n(),
            self.inner.c0(),
            self.inner.case().name()
        )
    }
}

#[pyclass(name = "RadialSolution", frozen)]
struct PySolution {
    inner: RadialSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn operator(&self) -> PyOperator {
        PyOperator {
            inner: *self.inner.op(),
        }
    }
    #[getter]
    fn branch(&self) -> usize {
        self.inner.branch().p
    }
    #[getter]
    fn c(&self) -> f64 {
        self.inner.c()
    }
    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0()
    }
    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2()
    }

    fn u(&self, r: f64) -> PyResult<f64> {
        self.inner.u(r).map_err(to_py)
    }
    fn du(&self, r: f64) -> PyResult<f64> {
        self.inner.du(r).map_err(to_py)
    }
    fn d2u(&self, r: f64) -> PyResult<f64> {
        self.inner.d2u(r).map_err(to_py)
    }
    fn w(&self, r: f64) -> PyResult<f64> {
        self.inner.w(r).map_err(to_py)
    }
    fn xi(&self, r: f64) -> f64 {
        self.inner.xi(r)
    }
    /// `(u'', u'/r)`.
    fn eigenvalues(&self, r: f64) -> PyResult<(f64, f64)> {
        self.inner.eigenvalues(r).map_err(to_py)
    }
    fn first_integral_defect(&self, r: f64) -> PyResult<f64> {
        self.inner.first_integral_defect(r).map_err(to_py)
    }
    /// u at a point of R^n.
    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&x).map_err(to_py)
    }

    /// `{"c2", "c0", "tail"}` with `tail[j-1] = c_{-j}`.
    #[pyo3(signature = (order = 3))]
    fn expansion<'py>(&self, py: Python<'py>, order: usize) -> PyResult<Bound<'py, PyDict>> {
        let e = expansion_coefficients(self.inner.branch(), self.inner.op(), self.inner.c(), order)
            .map_err(to_py)?
            .with_c0(self.inner.c0());
        let d = PyDict::new(py);
        d.set_item("c2", e.c2)?;
        d.set_item("c0", e.c0)?;
        d.set_item("tail", e.tail_coeffs)?;
        Ok(d)
    }

    /// `(slope, expected)` of `u - u_J` on a log-log scale.
    fn remainder_slope(&self, order: usize) -> PyResult<(f64, f64)> {
        let e = expansion_coefficients(self.inner.branch(), self.inner.op(), self.inner.c(), order)
            .map_err(to_py)?
            .with_c0(self.inner.c0());
        let fit = measure_remainder_slope(&self.inner, &e).map_err(to_py)?;
        Ok((fit.slope, fit.expected))
    }

    /// Largest pointwise residual of the PDE at `points` in R^n.
    fn pde_residual(&self, points: Vec<Vec<f64>>) -> PyResult<f64> {
        cli::max_pde_residual(self.inner.op(), &self.inner, &points).map_err(to_py)
    }
}

/// Radial solution on the tagged branch (or branch `p`).
#[pyfunction]
#[pyo3(signature = (tau, n, c, C0 = 0.0, c0 = 0.0, branch = None, r_min = DEFAULT_R_MIN))]
#[allow(non_snake_case)]
fn solve(
    tau: f64,
    n: usize,
    c: f64,
    C0: f64,
    c0: f64,
    branch: Option<usize>,
    r_min: f64,
) -> PyResult<PySolution> {
    let op = Operator::new(tau, n, C0).map_err(to_py)?;
    let br = select_branch(&op, branch).map_err(to_py)?;
    let inner = build_solution(&br, &op, c, c0, r_min).map_err(to_py)?;
    Ok(PySolution { inner })
}

/// Runs a CLI command on a JSON config; returns one JSON report per job.
#[pyfunction]
#[pyo3(signature = (command, config, tolerance_scale = 1.0))]
fn run(command: &str, config: &str, tolerance_scale: f64) -> PyResult<Vec<String>> {
    let command = match command {
        "radial" => Command::Radial,
        "expand" => Command::Expand,
        "verify" => Command::Verify,
        "theorem2" => Command::Theorem2,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let jobs = cli::parse_config(config).map_err(to_py)?;
    jobs.iter()
        .map(|j| {
            cli::run_job(command, j, tolerance_scale)
                .map(|rep| rep.render(Format::Json))
                .map_err(to_py)
        })
        .collect()
}

#[pymodule]
fn ftau_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
