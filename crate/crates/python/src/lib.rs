use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spde_uniq_lab::admissibility::{self, rational_from_f64, Family, ScenarioParams, Verdict};
use spde_uniq_lab::config::{parse_scenario_unchecked, ScenarioFile};
use spde_uniq_lab::galerkin::simulate_path;
use spde_uniq_lab::kolmogorov::{self, Drift, Observable, ProjectedProblem, SolveOptions};
use spde_uniq_lab::law_compare::{compare_laws, LawObservable};
use spde_uniq_lab::noise::{self, NoiseSpec};
use spde_uniq_lab::{BoundaryCondition, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::BlowUp { .. } | Error::NonContraction { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn family_from(name: &str) -> PyResult<Family> {
    Ok(match name {
        "heat-perturb" => Family::HeatPerturb,
        "heat-polynomial" => Family::HeatPolynomial,
        "divergence-sub" => Family::DivergenceSub,
        "divergence-super" => Family::DivergenceSuper,
        "non-divergence" => Family::NonDivergence,
        "burgers" => Family::Burgers,
        "cahn-hilliard" => Family::CahnHilliard,
        other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    })
}

fn boundary_from(name: &str) -> PyResult<BoundaryCondition> {
    match name {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "neumann" => Ok(BoundaryCondition::NeumannZeroMean),
        other => Err(PyValueError::new_err(format!("unknown boundary condition {other:?}"))),
    }
}

fn exact(x: f64) -> PyResult<admissibility::Rational> {
    rational_from_f64(x).map_err(py_err)
}

fn verdict_dict<'py>(py: Python<'py>, v: &Verdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("admissible", v.admissible)?;
    d.set_item("route", v.route.to_string())?;
    d.set_item("attempted", v.attempted.to_string())?;
    d.set_item("delta_interval", v.delta_interval.map(|i| i.to_string()))?;
    d.set_item("gamma_interval", v.gamma_interval.map(|i| i.to_string()))?;
    d.set_item("boundary_excluded", v.boundary_excluded)?;
    d.set_item("initial_datum", &v.initial_datum)?;
    d.set_item("reason", v.reason())?;
    Ok(d)
}

/// Admissibility verdict for a family and its exponents.
#[pyfunction]
#[pyo3(signature = (family, d, delta=0.0, alpha=None, beta=None, gamma=None, p=None, bounded=None))]
#[allow(clippy::too_many_arguments)]
fn classify<'py>(
    py: Python<'py>,
    family: &str,
    d: u32,
    delta: f64,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    p: Option<u32>,
    bounded: Option<bool>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut params = ScenarioParams::new(family_from(family)?, d).with_delta(exact(delta)?);
    if let Some(a) = alpha {
        params = params.with_alpha(exact(a)?);
    }
    if let Some(b) = beta {
        params = params.with_beta(exact(b)?);
    }
    if let Some(g) = gamma {
        params = params.with_gamma(exact(g)?);
    }
    if let Some(p) = p {
        params = params.with_p(p);
    }
    if let Some(b) = bounded {
        params = params.bounded(b);
    }
    let v = admissibility::classify(&params).map_err(py_err)?;
    verdict_dict(py, &v)
}

/// Eigenpairs of the Dirichlet or Neumann Laplacian (or its powers) on a box.
#[pyclass(skip_from_py_object, name = "Spectrum", module = "spde_uniq_lab")]
#[derive(Clone)]
struct PySpectrum {
    inner: spde_uniq_lab::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[new]
    #[pyo3(signature = (d, n, bc="dirichlet", lengths=vec![1.0], power=1))]
    fn new(d: usize, n: usize, bc: &str, lengths: Vec<f64>, power: u32) -> PyResult<Self> {
        let inner = spde_uniq_lab::Spectrum::build(d, boundary_from(bc)?, &lengths, n, power).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    #[getter]
    fn modes(&self) -> Vec<Vec<u32>> {
        self.inner.modes().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn basis_value(&self, k: usize, x: Vec<f64>) -> PyResult<f64> {
        if k >= self.inner.len() || x.len() != self.inner.dim() {
            return Err(PyValueError::new_err("mode index or point dimension out of range"));
        }
        Ok(self.inner.basis_value(k, &x))
    }

    /// Diagonal of `Q_t` for colored noise `A^{-δ}`.
    fn covariance(&self, delta: f64, t: f64) -> PyResult<Vec<f64>> {
        Ok(noise::qt_diagonal(&self.inner, &NoiseSpec::colored(delta), t).map_err(py_err)?.q)
    }

    /// `(partial sum, tail bound, converges)` of `Tr Q_∞`.
    fn q_infinity_trace(&self, delta: f64) -> (f64, f64, bool) {
        let t = noise::q_infinity_trace(&self.inner, &NoiseSpec::colored(delta));
        (t.partial_sum, t.tail_bound, t.converges)
    }

    /// Sharp constant `C_γ` of the gradient smoothing bound.
    fn smoothing_constant(&self, delta: f64, gamma: f64) -> PyResult<f64> {
        Ok(noise::smoothing_constant(&self.inner, &NoiseSpec::colored(delta), gamma).map_err(py_err)?.value)
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(d={}, n={})", self.inner.dim(), self.inner.len())
    }
}

/// A parsed and validated scenario file.
#[pyclass(skip_from_py_object, name = "Scenario", module = "spde_uniq_lab")]
#[derive(Clone)]
struct PyScenario {
    inner: ScenarioFile,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_scenario_unchecked(text).map_err(py_err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::from_toml(&text)
    }

    fn verdict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let v = self.inner.verdict().map_err(py_err)?;
        verdict_dict(py, &v)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    /// Initial Galerkin coefficients.
    fn initial_datum(&self) -> PyResult<Vec<f64>> {
        let spec = self.inner.spectrum().map_err(py_err)?;
        self.inner.initial_datum(&spec).map_err(py_err)
    }

    /// One path as `(times, states)`.
    #[pyo3(signature = (path=0, record_every=None))]
    fn simulate(&self, path: u64, record_every: Option<usize>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let problem = self.inner.problem().map_err(py_err)?;
        let x0 = self.inner.initial_datum(&problem.spectrum).map_err(py_err)?;
        let every = record_every.unwrap_or_else(|| self.inner.record_every());
        let (traj, _) = simulate_path(&problem, &x0, self.inner.seed(), path, &self.inner.run_settings(), every)
            .map_err(py_err)?;
        Ok((traj.times, traj.states))
    }

    /// Laplace-functional comparison against the `[compare]` configuration.
    #[pyo3(signature = (lam=1.0, level=0.01, paths=None))]
    fn compare<'py>(&self, py: Python<'py>, lam: f64, level: f64, paths: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let mut a = self.inner.law_config().map_err(py_err)?;
        let mut b = self.inner.compare_config().map_err(py_err)?;
        if let Some(p) = paths {
            a.paths = p;
            b.paths = p;
        }
        let catalog = LawObservable::standard_catalog(&a.problem.spectrum, &a.problem.noise).map_err(py_err)?;
        let rep = py.detach(|| compare_laws(&a, &b, &catalog, lam, level)).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("passed", rep.passed)?;
        d.set_item("max_abs_z", rep.max_abs_z)?;
        d.set_item("threshold", rep.threshold)?;
        d.set_item("observables", rep.rows.iter().map(|r| r.observable.clone()).collect::<Vec<_>>())?;
        d.set_item("z", rep.rows.iter().map(|r| r.z).collect::<Vec<_>>())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Scenario(digest={})", &self.inner.digest()[..12])
    }
}

/// Contraction threshold `λ₀`.
#[pyfunction]
fn lambda0(c_r: f64, drift_bound: f64, delta: f64, beta: f64) -> PyResult<f64> {
    kolmogorov::lambda0(c_r, drift_bound, delta, beta).map_err(py_err)
}

/// Grid solution of the one-mode Kolmogorov equation for `f = cos(w x)` and
/// the clipped cubic drift `clamp(c x³, -clip, clip)`, returned as
/// `(nodes, values, factors)`.
#[pyfunction]
#[pyo3(signature = (lam, delta=0.0, weight=1.0, coefficient=0.0, clip=1.0, points=161, tol=1e-8))]
#[allow(clippy::too_many_arguments)]
fn solve_kolmogorov_1d(
    py: Python<'_>,
    lam: f64,
    delta: f64,
    weight: f64,
    coefficient: f64,
    clip: f64,
    points: usize,
    tol: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let spec = spde_uniq_lab::Spectrum::dirichlet_1d(1);
    let drift = if coefficient == 0.0 { Drift::Zero } else { Drift::ClippedCubic { coefficient, clip } };
    let problem = ProjectedProblem::new(&spec, &NoiseSpec::colored(delta), 1, drift, Observable::cosine(vec![weight]), lam)
        .map_err(py_err)?;
    let opts = SolveOptions::for_dim(1).with_points(points).with_tol(tol);
    let sol = py.detach(|| kolmogorov::solve_mild(&problem, &opts)).map_err(py_err)?;
    let nodes = (0..sol.grid.len()).map(|j| sol.grid.point(j)[0]).collect();
    Ok((nodes, sol.u, sol.factors))
}

#[pymodule]
#[pyo3(name = "spde_uniq_lab")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(lambda0, m)?)?;
    m.add_function(wrap_pyfunction!(solve_kolmogorov_1d, m)?)?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyScenario>()?;
    Ok(())
}
