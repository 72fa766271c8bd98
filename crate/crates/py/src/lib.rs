//! Python module `vise`: closed-form expectations, the optimal claims
//! threshold, Monte Carlo runs, and pit maps for egoists plus one group.
//!
//! Structured results that have no dedicated class come back as plain
//! dicts and lists, converted through their JSON form.

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use vise_core::sweep::{self, default_mu_over_sigma_grid, lattice_delta_grid, SweepSpec, TMode};
use vise_core::{
    expected_society_increment, optimal_threshold, validate, Configuration, EnvironmentParams, ExpectationReport,
    OptimalThresholdResult, Probability, SimulationConfig, SocietyParams, TailSpec, ViseError,
};

create_exception!(
    vise,
    DegenerateRuleError,
    PyValueError,
    "The group's vote never changes the outcome."
);

fn py_err(e: ViseError) -> PyErr {
    match e {
        ViseError::DegenerateRule(_) => DegenerateRuleError::new_err(e.to_string()),
        ViseError::Overflow { .. } => PyArithmeticError::new_err(e.to_string()),
        ViseError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn t_mode(name: &str) -> PyResult<TMode> {
    match name {
        "fixed" => Ok(TMode::Fixed),
        "optimal" => Ok(TMode::Optimal),
        _ => Err(PyValueError::new_err(format!(
            "t_mode must be 'fixed' or 'optimal', got {name:?}"
        ))),
    }
}

/// Analytic one-step expected increments.
#[pyclass(frozen, skip_from_py_object, get_all, module = "vise")]
#[derive(Clone)]
pub struct Expectations {
    /// Per egoist; None without egoists.
    egoist: Option<f64>,
    /// Per group member; None without a group.
    group_member: Option<f64>,
    society: f64,
    /// Probability that the group votes yes.
    support_prob: Option<f64>,
    t_tilde: Option<f64>,
}

impl From<ExpectationReport> for Expectations {
    fn from(r: ExpectationReport) -> Self {
        Expectations {
            egoist: r.egoist,
            group_member: r.group_member,
            society: r.society,
            support_prob: r.support_prob.map(Probability::value),
            t_tilde: r.t_tilde,
        }
    }
}

#[pymethods]
impl Expectations {
    fn __repr__(&self) -> String {
        format!(
            "Expectations(egoist={:?}, group_member={:?}, society={})",
            self.egoist, self.group_member, self.society
        )
    }
}

/// Optimal claims threshold and the regime it falls in.
#[pyclass(frozen, skip_from_py_object, get_all, module = "vise")]
#[derive(Clone)]
pub struct OptimalThreshold {
    t0: f64,
    /// "general", "group-decisive", "egoists-insufficient" or "both".
    case: &'static str,
    society_value: f64,
    general_t0: f64,
    special_t0: Option<f64>,
}

impl From<OptimalThresholdResult> for OptimalThreshold {
    fn from(r: OptimalThresholdResult) -> Self {
        OptimalThreshold {
            t0: r.t0,
            case: r.case_tag.as_str(),
            society_value: r.society_value_at_t0,
            general_t0: r.general_t0,
            special_t0: r.special_t0,
        }
    }
}

#[pymethods]
impl OptimalThreshold {
    fn __repr__(&self) -> String {
        format!("OptimalThreshold(t0={}, case={:?})", self.t0, self.case)
    }
}

/// A validated society with its environment and claims threshold `t`.
#[pyclass(frozen, skip_from_py_object, module = "vise")]
#[derive(Clone)]
pub struct Society {
    cfg: Configuration,
}

#[pymethods]
impl Society {
    /// Give exactly one of `ell` (egoist count) and `delta` (egoist share).
    #[new]
    #[pyo3(signature = (n, alpha, mu, sigma, *, ell=None, delta=None, t=0.0))]
    fn new(n: u32, alpha: f64, mu: f64, sigma: f64, ell: Option<u32>, delta: Option<f64>, t: f64) -> PyResult<Self> {
        let society = match (ell, delta) {
            (Some(ell), None) => SocietyParams::new(n, ell, alpha, t),
            (None, Some(delta)) => SocietyParams::from_delta(n, delta, alpha, t).map_err(py_err)?,
            _ => return Err(PyValueError::new_err("give exactly one of ell and delta")),
        };
        let env = EnvironmentParams::new(mu, sigma).map_err(py_err)?;
        Ok(Society {
            cfg: validate(society, env).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.cfg.society.n
    }
    #[getter]
    fn ell(&self) -> u32 {
        self.cfg.society.ell
    }
    #[getter]
    fn g(&self) -> u32 {
        self.cfg.derived.g
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.cfg.derived.delta
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.cfg.society.alpha
    }
    #[getter]
    fn beta(&self) -> Option<f64> {
        self.cfg.derived.beta
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.cfg.derived.gamma
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.cfg.env.mu
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.cfg.env.sigma
    }
    #[getter]
    fn t(&self) -> f64 {
        self.cfg.society.t
    }

    fn with_t(&self, t: f64) -> PyResult<Self> {
        if !t.is_finite() {
            return Err(PyValueError::new_err(format!("t = {t} is not finite")));
        }
        Ok(Society {
            cfg: self.cfg.with_t(t),
        })
    }

    fn expectations(&self) -> Expectations {
        expected_society_increment(&self.cfg).into()
    }

    /// Raises `DegenerateRuleError` when no threshold matters.
    fn optimal_threshold(&self) -> PyResult<OptimalThreshold> {
        optimal_threshold(&self.cfg).map(Into::into).map_err(py_err)
    }

    /// Golden-section maximum of the society's expectation over `t`, checked
    /// against a dense scan of `bracket` (default `mu ± 6 sigma/sqrt(g)`).
    #[pyo3(signature = (tol=1e-10, bracket=None))]
    fn numeric_argmax<'py>(
        &self,
        py: Python<'py>,
        tol: f64,
        bracket: Option<(f64, f64)>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = vise_core::numeric_argmax_t(&self.cfg, bracket, tol).map_err(py_err)?;
        to_py(py, &r)
    }

    /// Finite-difference slope and curvature of the objective at `t0`.
    fn stationarity<'py>(&self, py: Python<'py>, t0: f64) -> PyResult<Bound<'py, PyAny>> {
        let r = vise_core::stationarity_check(&self.cfg, t0).map_err(py_err)?;
        to_py(py, &r)
    }

    /// Monte Carlo run; the result is the same for a given seed on any
    /// number of threads.
    #[pyo3(signature = (steps, replications=4, seed=0))]
    fn simulate<'py>(&self, py: Python<'py>, steps: u64, replications: u32, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let config = SimulationConfig {
            society: self.cfg.society,
            env: self.cfg.env,
            steps,
            replications,
            seed,
        };
        let stats = py.detach(|| vise_core::run(&config)).map_err(py_err)?;
        to_py(py, &stats)
    }

    fn __repr__(&self) -> String {
        let s = &self.cfg.society;
        format!(
            "Society(n={}, ell={}, alpha={}, mu={}, sigma={}, t={})",
            s.n, s.ell, s.alpha, self.cfg.env.mu, self.cfg.env.sigma, s.t
        )
    }
}

/// `mu+(mu, sigma, ell, ell0)`: expected mean increment of `ell` egoists when
/// a proposal needs more than `ell0` of their votes.
#[pyfunction]
fn mu_plus(mu: f64, sigma: f64, ell: u32, ell0: f64) -> PyResult<f64> {
    vise_core::mu_plus(mu, sigma, ell, ell0).map_err(py_err)
}

/// Monte Carlo estimate of `mu_plus`, as `{mean, std_error, samples}`.
#[pyfunction]
#[pyo3(signature = (mu, sigma, ell, ell0, samples, seed=0))]
fn estimate_mu_plus<'py>(
    py: Python<'py>,
    mu: f64,
    sigma: f64,
    ell: u32,
    ell0: f64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let est = py
        .detach(|| vise_core::estimate_mu_plus(mu, sigma, ell, ell0, samples, seed))
        .map_err(py_err)?;
    to_py(py, &est)
}

/// `P(X > xi)` for `X ~ Binomial(ell, p)`.
#[pyfunction]
fn binomial_upper_tail(xi: f64, ell: u32, p: f64) -> PyResult<f64> {
    let p = Probability::new(p).map_err(py_err)?;
    let spec = TailSpec::new(xi, ell, p).map_err(py_err)?;
    Ok(vise_core::binomial_upper_tail(&spec).value())
}

/// Standard normal distribution function.
#[pyfunction]
fn normal_cdf(x: f64) -> PyResult<f64> {
    vise_core::special::std_normal_cdf(x)
        .map(Probability::value)
        .map_err(py_err)
}

/// Pit-of-losses map over `(mu/sigma, delta)`, with `delta = k/n`. The dict
/// holds the grids, `mask[i][j]`, `society[i][j]`, `t_used[i][j]`, flagged
/// cells and `delta_max`.
#[pyfunction]
#[pyo3(signature = (alpha, n, t_mode="optimal", mu_over_sigma=None))]
fn pit_region<'py>(
    py: Python<'py>,
    alpha: f64,
    n: u32,
    t_mode: &str,
    mu_over_sigma: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = self::t_mode(t_mode)?;
    let mu = mu_over_sigma.unwrap_or_else(default_mu_over_sigma_grid);
    let pit = py
        .detach(|| sweep::pit_region(alpha, n, mode, &mu, &lattice_delta_grid(n)))
        .map_err(py_err)?;
    to_py(py, &pit)
}

/// `[{alpha, delta_max}]` under the optimal threshold.
#[pyfunction]
fn max_delta_curve<'py>(py: Python<'py>, n: u32, alphas: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let curve = py.detach(|| sweep::max_delta_curve(n, &alphas)).map_err(py_err)?;
    to_py(py, &curve)
}

/// Runs a sweep described as JSON (the `spec` object of a sweep's JSON
/// companion) and returns the CSV text.
#[pyfunction]
fn sweep_csv(py: Python<'_>, spec_json: &str) -> PyResult<String> {
    let spec: SweepSpec = serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let table = py.detach(|| sweep::sweep(&spec)).map_err(py_err)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(py_err)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn vise(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("DegenerateRuleError", m.py().get_type::<DegenerateRuleError>())?;
    m.add_class::<Society>()?;
    m.add_class::<Expectations>()?;
    m.add_class::<OptimalThreshold>()?;
    m.add_function(wrap_pyfunction!(mu_plus, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mu_plus, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_upper_tail, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(pit_region, m)?)?;
    m.add_function(wrap_pyfunction!(max_delta_curve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}
