//! Python module `ndde`. Vectors are 3-sequences of floats; structured
//! results come back as plain dicts and lists.

use ndde_core::crystal::{self, FourierPotential, FourierTerm};
use ndde_core::delay::{self, DelayError, ScalarDelayProblem, ScalarSolution};
use ndde_core::lightcone::{self, Branch};
use ndde_core::{farfield, sewing, slit, HistoryFunction, PiecewiseTrajectory, Side, Vec3};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::from_array(v)
}

/// Round-trips through JSON so that every serde type maps onto dicts/lists.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn branch(name: &str) -> PyResult<Branch> {
    match name {
        "retarded" => Ok(Branch::Retarded),
        "advanced" => Ok(Branch::Advanced),
        _ => Err(PyValueError::new_err(format!("branch must be 'retarded' or 'advanced', got '{name}'"))),
    }
}

fn side(name: &str) -> PyResult<Side> {
    match name {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        _ => Err(PyValueError::new_err(format!("side must be 'left' or 'right', got '{name}'"))),
    }
}

/// Piecewise-cubic worldline of a point charge.
#[pyclass(name = "Trajectory", module = "ndde", frozen, from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    inner: PiecewiseTrajectory,
}

#[pymethods]
impl PyTrajectory {
    #[staticmethod]
    #[pyo3(signature = (x, t_start, t_end, mass=1.0, charge=-1.0))]
    fn stationary(x: [f64; 3], t_start: f64, t_end: f64, mass: f64, charge: f64) -> PyResult<Self> {
        let inner = PiecewiseTrajectory::stationary(vec3(x), t_start, t_end, mass, charge).map_err(value_err)?;
        Ok(PyTrajectory { inner })
    }

    /// Uniform motion through `x0` at t = 0.
    #[staticmethod]
    #[pyo3(signature = (x0, v, t_start, t_end, mass=1.0, charge=-1.0))]
    fn uniform(x0: [f64; 3], v: [f64; 3], t_start: f64, t_end: f64, mass: f64, charge: f64) -> PyResult<Self> {
        let inner =
            PiecewiseTrajectory::uniform(vec3(x0), vec3(v), t_start, t_end, mass, charge).map_err(value_err)?;
        Ok(PyTrajectory { inner })
    }

    /// Straight segments through `(t, x)` points.
    #[staticmethod]
    #[pyo3(signature = (points, mass=1.0, charge=-1.0))]
    fn polyline(points: Vec<(f64, [f64; 3])>, mass: f64, charge: f64) -> PyResult<Self> {
        let pts: Vec<(f64, Vec3)> = points.into_iter().map(|(t, x)| (t, vec3(x))).collect();
        Ok(PyTrajectory { inner: PiecewiseTrajectory::polyline(&pts, mass, charge).map_err(value_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyTrajectory { inner: PiecewiseTrajectory::from_json(text).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn t_start(&self) -> f64 {
        self.inner.t_start()
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end()
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    #[getter]
    fn charge(&self) -> f64 {
        self.inner.charge()
    }

    fn position(&self, t: f64) -> PyResult<[f64; 3]> {
        Ok(self.inner.position(t).map_err(value_err)?.to_array())
    }

    /// `{position, velocity, acceleration}` on the requested side of `t`.
    #[pyo3(signature = (t, side="right"))]
    fn eval<'py>(&self, py: Python<'py>, t: f64, side: &str) -> PyResult<Bound<'py, PyAny>> {
        let k = self.inner.eval(t, self::side(side)?).map_err(value_err)?;
        to_py(py, &k)
    }

    fn breakpoints<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.breakpoints())
    }

    /// Copy with a velocity discontinuity at `t`.
    fn insert_breakpoint(&self, t: f64, right_velocity: [f64; 3]) -> PyResult<Self> {
        Ok(PyTrajectory { inner: self.inner.insert_breakpoint(t, vec3(right_velocity)).map_err(value_err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(t=[{}, {}], segments={}, mass={}, charge={})",
            self.inner.t_start(),
            self.inner.t_end(),
            self.inner.segments().len(),
            self.inner.mass(),
            self.inner.charge()
        )
    }
}

/// Lightcone time of `traj` for the event `(x, t)`.
#[pyfunction]
#[pyo3(signature = (traj, x, t, branch="retarded"))]
fn solve_lightcone<'py>(
    py: Python<'py>,
    traj: &PyTrajectory,
    x: [f64; 3],
    t: f64,
    branch: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let hit = lightcone::solve_lightcone(&traj.inner, vec3(x), t, self::branch(branch)?).map_err(runtime_err)?;
    to_py(py, &hit)
}

/// Advanced, retarded and semi-sum far fields at `(x, t)`.
#[pyfunction]
fn far_fields<'py>(py: Python<'py>, traj: &PyTrajectory, x: [f64; 3], t: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &farfield::semi_sum(&traj.inner, vec3(x), t).map_err(runtime_err)?)
}

/// Forward lightcone hops between trajectories `source` and `partner`.
#[pyfunction]
fn sewing_chain<'py>(
    py: Python<'py>,
    trajectories: Vec<PyTrajectory>,
    source: usize,
    t0: f64,
    partner: usize,
    steps: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let trajs: Vec<_> = trajectories.into_iter().map(|t| t.inner).collect();
    let chain = sewing::propagate_chain(&trajs, sewing::DiscontinuityEvent::source(source, t0), partner, steps)
        .map_err(runtime_err)?;
    to_py(py, &chain)
}

fn solution_dict<'py>(py: Python<'py>, sol: &ScalarSolution) -> PyResult<Bound<'py, PyAny>> {
    let nodes: Vec<_> = sol.nodes().collect();
    let bps: Vec<_> = sol.breaking_points().iter().map(|b| (b.t, b.jumps.to_vec())).collect();
    let d = pyo3::types::PyDict::new(py);
    d.set_item("t", nodes.iter().map(|n| n.t).collect::<Vec<_>>())?;
    d.set_item("y", nodes.iter().map(|n| n.y).collect::<Vec<_>>())?;
    d.set_item("ydot_left", nodes.iter().map(|n| n.ydot_left).collect::<Vec<_>>())?;
    d.set_item("ydot_right", nodes.iter().map(|n| n.ydot_right).collect::<Vec<_>>())?;
    d.set_item("breaking_points", bps)?;
    Ok(d.into_any())
}

/// Linear test equation `y' = a y(t - delay)` (retarded) or
/// `y' = a y'(t - delay)` (neutral) with history `value + slope * t`.
#[pyfunction]
#[pyo3(signature = (kind, a, history_value, history_slope, delay=1.0, horizon=5.0, steps_per_delay=200))]
#[allow(clippy::too_many_arguments)]
fn solve_linear_delay<'py>(
    py: Python<'py>,
    kind: &str,
    a: f64,
    history_value: f64,
    history_slope: f64,
    delay: f64,
    horizon: f64,
    steps_per_delay: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let history = HistoryFunction::linear(-delay, history_slope, history_value).map_err(value_err)?;
    let problem = match kind {
        "retarded" => ScalarDelayProblem::retarded(move |_, yd| a * yd, history, delay, horizon),
        "neutral" => ScalarDelayProblem::neutral(move |_, _, d| a * d, history, delay, horizon),
        _ => return Err(PyValueError::new_err(format!("kind must be 'retarded' or 'neutral', got '{kind}'"))),
    };
    let problem = problem.and_then(|p| p.with_steps_per_delay(steps_per_delay)).map_err(value_err)?;
    match delay::solve(&problem) {
        Ok(sol) => solution_dict(py, &sol),
        Err(e @ DelayError::IntegrationFailure { .. }) => Err(runtime_err(e)),
        Err(e) => Err(value_err(e)),
    }
}

/// `(√2 M/m)^{2/3}` for a nucleus-to-electron mass ratio.
#[pyfunction]
#[pyo3(signature = (mass_ratio=slit::PROTON_ELECTRON_MASS_RATIO))]
fn recoil_factor(mass_ratio: f64) -> f64 {
    slit::recoil_factor(mass_ratio)
}

/// De Broglie length for a charge of speed `v3` scattered by hydrogen-like sites.
#[pyfunction]
#[pyo3(signature = (v3, m_scattered=1.0, mass_ratio=slit::PROTON_ELECTRON_MASS_RATIO, electrons_per_site=1))]
fn de_broglie_length<'py>(
    py: Python<'py>,
    v3: f64,
    m_scattered: f64,
    mass_ratio: f64,
    electrons_per_site: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = slit::SlitConfig { v3, m_scattered, mass_ratio, n_electrons_per_site: electrons_per_site, ..Default::default() };
    to_py(py, &slit::de_broglie_length(&cfg).map_err(value_err)?)
}

/// Directions with `a sin θ = n L`.
#[pyfunction]
fn bragg_directions<'py>(py: Python<'py>, a: f64, l: f64, n_max: u32) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &slit::bragg_directions(a, l, n_max).map_err(value_err)?)
}

/// Velocity change `(L|u|/2π) G` for reciprocal vector `G`.
#[pyfunction]
fn vonlaue_shift(l: f64, u: [f64; 3], g: [f64; 3]) -> [f64; 3] {
    crystal::vonlaue_shift(l, vec3(u), vec3(g)).to_array()
}

/// Real periodic potential `ε Σ V_G exp(iG·x)`.
#[pyclass(name = "FourierPotential", module = "ndde", frozen)]
struct PyFourierPotential {
    inner: FourierPotential,
}

#[pymethods]
impl PyFourierPotential {
    /// `terms` lists `(G, (re, im))` for both `G` and `-G`.
    #[new]
    fn new(epsilon: f64, terms: Vec<([f64; 3], (f64, f64))>) -> PyResult<Self> {
        let terms = terms.into_iter().map(|(g, (re, im))| FourierTerm { g: vec3(g), v: Complex64::new(re, im) }).collect();
        Ok(PyFourierPotential { inner: FourierPotential::new(epsilon, terms).map_err(value_err)? })
    }

    /// The pair `±G` with coefficients `v` and its conjugate.
    #[staticmethod]
    #[pyo3(signature = (epsilon, g, v=(1.0, 0.0)))]
    fn single_pair(epsilon: f64, g: [f64; 3], v: (f64, f64)) -> PyResult<Self> {
        let inner = FourierPotential::single_pair(epsilon, vec3(g), Complex64::new(v.0, v.1)).map_err(value_err)?;
        Ok(PyFourierPotential { inner })
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    fn value(&self, x: [f64; 3]) -> f64 {
        self.inner.value(vec3(x))
    }

    fn force(&self, x: [f64; 3]) -> [f64; 3] {
        self.inner.force(vec3(x)).to_array()
    }

    fn hamiltonian(&self, x: [f64; 3], p: [f64; 3]) -> f64 {
        crystal::hamiltonian(vec3(p), vec3(x), &self.inner)
    }

    fn pendulum_frequency(&self) -> Option<f64> {
        self.inner.pendulum_frequency()
    }

    fn separatrix_bound(&self) -> Option<f64> {
        self.inner.separatrix_bound()
    }

    /// Leapfrog run; returns `{dt, t, x, p, h}` plus `kick` (momentum-kick report).
    #[pyo3(signature = (x0, p0, t_end, dt=None, steps_per_period=200.0, sample_every=1))]
    fn integrate<'py>(
        &self,
        py: Python<'py>,
        x0: [f64; 3],
        p0: [f64; 3],
        t_end: f64,
        dt: Option<f64>,
        steps_per_period: f64,
        sample_every: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let dt = match dt {
            Some(dt) => dt,
            None => self
                .inner
                .default_step(vec3(p0), steps_per_period)
                .ok_or_else(|| PyValueError::new_err("no step scale: potential and momentum both vanish"))?,
        };
        let run = crystal::integrate(&self.inner, vec3(x0), vec3(p0), t_end, dt, sample_every).map_err(|e| match e {
            crystal::CrystalError::NonFinite { .. } => runtime_err(e),
            e => value_err(e),
        })?;
        let kick = crystal::momentum_kick(&run, &self.inner).map_err(value_err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("dt", run.dt)?;
        d.set_item("t", run.samples.iter().map(|s| s.t).collect::<Vec<_>>())?;
        d.set_item("x", run.samples.iter().map(|s| s.x.to_array()).collect::<Vec<_>>())?;
        d.set_item("p", run.samples.iter().map(|s| s.p.to_array()).collect::<Vec<_>>())?;
        d.set_item("h", run.samples.iter().map(|s| s.h).collect::<Vec<_>>())?;
        d.set_item("kick", to_py(py, &kick)?)?;
        Ok(d.into_any())
    }
}

#[pymodule]
fn ndde(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HBAR", slit::HBAR)?;
    m.add("PROTON_ELECTRON_MASS_RATIO", slit::PROTON_ELECTRON_MASS_RATIO)?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyFourierPotential>()?;
    m.add_function(wrap_pyfunction!(solve_lightcone, m)?)?;
    m.add_function(wrap_pyfunction!(far_fields, m)?)?;
    m.add_function(wrap_pyfunction!(sewing_chain, m)?)?;
    m.add_function(wrap_pyfunction!(solve_linear_delay, m)?)?;
    m.add_function(wrap_pyfunction!(recoil_factor, m)?)?;
    m.add_function(wrap_pyfunction!(de_broglie_length, m)?)?;
    m.add_function(wrap_pyfunction!(bragg_directions, m)?)?;
    m.add_function(wrap_pyfunction!(vonlaue_shift, m)?)?;
    Ok(())
}
