//! Python bindings: parameters, gait generation, dynamics, tracking
//! simulation, validation and rendering.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::FRAC_PI_2;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use biped5_core::control::ControllerGains;
use biped5_core::dynamics::{forward_dynamics_with, Backend};
use biped5_core::gait::{self, GaitSolution, GaitSpec};
use biped5_core::io::{desired_header, desired_table, render_svg as render, RenderOptions};
use biped5_core::kinematics::{self, JointState, Joints};
use biped5_core::simulation::{self, SimConfig};
use biped5_core::validation::{self, offset_start, ValidationConfig};
use biped5_core::{default_params, load_params, RobotParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn joints(v: &[f64], what: &str) -> PyResult<Joints> {
    if v.len() != 5 {
        return Err(PyValueError::new_err(format!(
            "{what} needs 5 values, got {}",
            v.len()
        )));
    }
    Ok(Joints::from_column_slice(v))
}

fn list(v: &Joints) -> Vec<f64> {
    v.iter().copied().collect()
}

fn rows<M: std::ops::Index<(usize, usize), Output = f64>>(m: &M, nrows: usize) -> Vec<Vec<f64>> {
    (0..nrows)
        .map(|i| (0..5).map(|j| m[(i, j)]).collect())
        .collect()
}

fn backend(name: &str) -> PyResult<Backend> {
    name.parse().map_err(PyValueError::new_err)
}

fn gains(kp: &[f64], kv: &[f64]) -> PyResult<ControllerGains> {
    let expand = |v: &[f64], what| match v {
        [x] => Ok(Joints::repeat(*x)),
        _ => joints(v, what),
    };
    ControllerGains::new(expand(kp, "kp")?, expand(kv, "kv")?).map_err(value_err)
}

/// Physical parameters of the five links.
#[pyclass(name = "RobotParams", module = "biped5", from_py_object)]
#[derive(Clone)]
struct PyRobotParams {
    inner: RobotParams,
}

#[pymethods]
impl PyRobotParams {
    #[new]
    fn new() -> Self {
        Self {
            inner: default_params(),
        }
    }

    /// Parses `link<i>.mass = ...` style text; omitted keys keep their defaults.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        load_params(text)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn to_config(&self) -> String {
        self.inner.to_config_text()
    }

    #[getter]
    fn gravity(&self) -> f64 {
        self.inner.gravity
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.links.iter().map(|l| l.mass).collect()
    }

    #[getter]
    fn lengths(&self) -> Vec<f64> {
        self.inner.links.iter().map(|l| l.length).collect()
    }

    #[getter]
    fn first_moments(&self) -> Vec<f64> {
        self.inner.links.iter().map(|l| l.first_moment).collect()
    }

    #[getter]
    fn inertias(&self) -> Vec<f64> {
        self.inner.links.iter().map(|l| l.inertia).collect()
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    fn __repr__(&self) -> String {
        format!(
            "RobotParams(total_mass={}, gravity={})",
            self.inner.total_mass(),
            self.inner.gravity
        )
    }
}

fn params_or_default(p: Option<PyRef<'_, PyRobotParams>>) -> RobotParams {
    p.map(|p| p.inner.clone()).unwrap_or_else(default_params)
}

/// Window, boundary angles and posture constants of one single-support phase.
#[pyclass(name = "GaitSpec", module = "biped5", from_py_object)]
#[derive(Clone)]
struct PyGaitSpec {
    inner: GaitSpec,
}

#[pymethods]
impl PyGaitSpec {
    #[new]
    #[pyo3(signature = (alpha=0.3, period=1.0, t_start=0.0, t_end=None, theta1_start=FRAC_PI_2 + 0.1, theta1_end=FRAC_PI_2 - 0.1, swing_amplitude=1.0))]
    fn new(
        alpha: f64,
        period: f64,
        t_start: f64,
        t_end: Option<f64>,
        theta1_start: f64,
        theta1_end: f64,
        swing_amplitude: f64,
    ) -> PyResult<Self> {
        let inner = GaitSpec {
            alpha,
            period,
            t_start,
            t_end: t_end.unwrap_or(t_start + period),
            theta1_start,
            theta1_end,
            swing_amplitude,
            ..GaitSpec::default()
        };
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period
    }

    #[getter]
    fn t_start(&self) -> f64 {
        self.inner.t_start
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "GaitSpec(alpha={}, period={}, t_start={}, t_end={}, theta1_start={}, theta1_end={})",
            s.alpha, s.period, s.t_start, s.t_end, s.theta1_start, s.theta1_end
        )
    }
}

/// Closed-form desired trajectory.
#[pyclass(name = "GaitSolution", module = "biped5", frozen)]
struct PyGaitSolution {
    inner: GaitSolution,
}

#[pymethods]
impl PyGaitSolution {
    #[getter]
    fn c1(&self) -> f64 {
        self.inner.c1
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2
    }

    #[getter]
    fn c3(&self) -> f64 {
        self.inner.c3
    }

    #[getter]
    fn r1(&self) -> f64 {
        self.inner.r1
    }

    #[getter]
    fn r2(&self) -> f64 {
        self.inner.r2
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.inner.offset
    }

    #[getter]
    fn m1(&self) -> f64 {
        self.inner.reduced.m1
    }

    #[getter]
    fn h1(&self) -> f64 {
        self.inner.reduced.h1
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.reduced.k_const
    }

    #[getter]
    fn m2(&self) -> f64 {
        self.inner.reduced.m2
    }

    #[getter]
    fn spec(&self) -> PyGaitSpec {
        PyGaitSpec {
            inner: self.inner.spec,
        }
    }

    /// `(θ₁, θ̇₁, θ̈₁)` at time `t`.
    fn theta1(&self, t: f64) -> PyResult<(f64, f64, f64)> {
        self.inner.eval_theta1(t).map_err(value_err)
    }

    /// Desired `(θ, θ̇, θ̈)` for all five joints at time `t`.
    fn desired(&self, t: f64) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let d = self.inner.desired_state(t).map_err(value_err)?;
        Ok((list(&d.theta), list(&d.theta_dot), list(&d.theta_ddot)))
    }

    /// Desired trajectory on a uniform grid as `(header, rows)`.
    #[pyo3(signature = (grid=1e-3))]
    fn sample(&self, grid: f64) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
        if !(grid > 0.0) {
            return Err(PyValueError::new_err("grid must be > 0"));
        }
        let table = desired_table(&self.inner, grid).map_err(value_err)?;
        Ok((table.header, table.rows))
    }

    /// Writes the sampled desired trajectory as CSV.
    #[pyo3(signature = (path, grid=1e-3))]
    fn to_csv(&self, path: std::path::PathBuf, grid: f64) -> PyResult<()> {
        if !(grid > 0.0) {
            return Err(PyValueError::new_err("grid must be > 0"));
        }
        let table = desired_table(&self.inner, grid).map_err(value_err)?;
        table
            .write_file(&path)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Largest gap between the closed form and a numeric integration of the
    /// reduced equation.
    #[pyo3(signature = (tolerance=1e-12))]
    fn numeric_check(&self, tolerance: f64) -> PyResult<f64> {
        gait::integrate_reduced_check(&self.inner, tolerance)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

#[pyfunction]
#[pyo3(signature = (spec=None, params=None))]
fn solve_gait(
    spec: Option<PyRef<'_, PyGaitSpec>>,
    params: Option<PyRef<'_, PyRobotParams>>,
) -> PyResult<PyGaitSolution> {
    let spec = spec.map(|s| s.inner).unwrap_or_default();
    gait::solve_gait(&spec, &params_or_default(params))
        .map(|inner| PyGaitSolution { inner })
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (theta, params=None))]
fn forward_kinematics(
    theta: Vec<f64>,
    params: Option<PyRef<'_, PyRobotParams>>,
) -> PyResult<(f64, f64)> {
    let p = kinematics::forward_kinematics(&joints(&theta, "theta")?, &params_or_default(params));
    Ok((p.x, p.y))
}

#[pyfunction]
#[pyo3(signature = (theta, params=None))]
fn jacobian(theta: Vec<f64>, params: Option<PyRef<'_, PyRobotParams>>) -> PyResult<Vec<Vec<f64>>> {
    let j = kinematics::jacobian(&joints(&theta, "theta")?, &params_or_default(params));
    Ok(rows(&j, 2))
}

/// Drawing points `[ankle, knee, hip, pelvis top, swing knee, swing ankle]`.
#[pyfunction]
#[pyo3(signature = (theta, params=None))]
fn joint_positions(
    theta: Vec<f64>,
    params: Option<PyRef<'_, PyRobotParams>>,
) -> PyResult<Vec<(f64, f64)>> {
    let pts = kinematics::joint_positions(&joints(&theta, "theta")?, &params_or_default(params));
    Ok(pts.iter().map(|p| (p.x, p.y)).collect())
}

#[pyfunction]
#[pyo3(signature = (theta, params=None, backend="printed"))]
fn inertia_matrix(
    theta: Vec<f64>,
    params: Option<PyRef<'_, PyRobotParams>>,
    backend: &str,
) -> PyResult<Vec<Vec<f64>>> {
    let m = self::backend(backend)?.inertia(&joints(&theta, "theta")?, &params_or_default(params));
    Ok(rows(&m, 5))
}

#[pyfunction]
#[pyo3(signature = (theta, params=None, backend="printed"))]
fn gravity_vector(
    theta: Vec<f64>,
    params: Option<PyRef<'_, PyRobotParams>>,
    backend: &str,
) -> PyResult<Vec<f64>> {
    let g = self::backend(backend)?.gravity(&joints(&theta, "theta")?, &params_or_default(params));
    Ok(list(&g))
}

#[pyfunction]
#[pyo3(signature = (theta, theta_dot, params=None, backend="printed"))]
fn coriolis_vector(
    theta: Vec<f64>,
    theta_dot: Vec<f64>,
    params: Option<PyRef<'_, PyRobotParams>>,
    backend: &str,
) -> PyResult<Vec<f64>> {
    let s = JointState::new(joints(&theta, "theta")?, joints(&theta_dot, "theta_dot")?)
        .map_err(value_err)?;
    Ok(list(
        &self::backend(backend)?.coriolis(&s, &params_or_default(params)),
    ))
}

/// Joint accelerations under joint torques `u`.
#[pyfunction]
#[pyo3(signature = (theta, theta_dot, u, params=None, backend="printed"))]
fn forward_dynamics(
    theta: Vec<f64>,
    theta_dot: Vec<f64>,
    u: Vec<f64>,
    params: Option<PyRef<'_, PyRobotParams>>,
    backend: &str,
) -> PyResult<Vec<f64>> {
    let s = JointState::new(joints(&theta, "theta")?, joints(&theta_dot, "theta_dot")?)
        .map_err(value_err)?;
    let acc = forward_dynamics_with(
        self::backend(backend)?,
        &s,
        &joints(&u, "u")?,
        &params_or_default(params),
    )
    .map_err(value_err)?;
    Ok(list(&acc))
}

/// Closed-loop tracking of `solution`; returns a dict of sampled series and
/// the error summary.
#[pyfunction]
#[pyo3(signature = (solution, params=None, kp=vec![100.0], kv=vec![20.0], backend="printed", controller_backend=None, offset=0.0, grid=1e-3))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    solution: PyRef<'_, PyGaitSolution>,
    params: Option<PyRef<'_, PyRobotParams>>,
    kp: Vec<f64>,
    kv: Vec<f64>,
    backend: &str,
    controller_backend: Option<&str>,
    offset: f64,
    grid: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = params_or_default(params);
    let sol = solution.inner;
    let cfg = SimConfig {
        backend: self::backend(backend)?,
        controller_backend: controller_backend.map(self::backend).transpose()?,
        ..SimConfig::default()
    };
    let gains = gains(&kp, &kv)?;
    let start = offset_start(&sol, offset).map_err(value_err)?;
    let traj = py
        .detach(|| {
            simulation::simulate_closed_loop(&params, &sol, &gains, &cfg, &start)
                .and_then(|t| t.resample(grid, &sol).map_err(Into::into))
        })
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let summary = traj.tracking_summary();
    let series = |v: &[Joints]| v.iter().map(list).collect::<Vec<_>>();
    let out = PyDict::new(py);
    out.set_item("t", &traj.times)?;
    out.set_item("theta", series(&traj.theta))?;
    out.set_item("theta_dot", series(&traj.theta_dot))?;
    out.set_item("theta_d", series(&traj.theta_d))?;
    out.set_item("torque", series(&traj.torques))?;
    out.set_item("max_abs_error", list(&summary.max_abs_error))?;
    out.set_item("final_error", list(&summary.final_error))?;
    Ok(out)
}

/// Runs the self-check suite; returns `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (params=None, spec=None, seed=42))]
fn validate(
    py: Python<'_>,
    params: Option<PyRef<'_, PyRobotParams>>,
    spec: Option<PyRef<'_, PyGaitSpec>>,
    seed: u64,
) -> PyResult<(bool, String)> {
    let params = params_or_default(params);
    let spec = spec.map(|s| s.inner).unwrap_or_default();
    let cfg = ValidationConfig {
        seed,
        ..ValidationConfig::default()
    };
    let report = py
        .detach(|| validation::run_validation(&params, &spec, &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((report.passed(), report.to_text()))
}

/// SVG with one stick figure per posture, shifted right by `stride` each.
#[pyfunction]
#[pyo3(signature = (postures, params=None, stride=0.15))]
fn render_svg(
    postures: Vec<Vec<f64>>,
    params: Option<PyRef<'_, PyRobotParams>>,
    stride: f64,
) -> PyResult<String> {
    let postures = postures
        .iter()
        .map(|p| joints(p, "posture"))
        .collect::<PyResult<Vec<_>>>()?;
    let opts = RenderOptions {
        stride,
        ..RenderOptions::default()
    };
    Ok(render(&postures, &params_or_default(params), &opts))
}

#[pyfunction]
fn csv_header() -> Vec<String> {
    desired_header()
}

#[pymodule]
fn biped5(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRobotParams>()?;
    m.add_class::<PyGaitSpec>()?;
    m.add_class::<PyGaitSolution>()?;
    m.add_function(wrap_pyfunction!(solve_gait, m)?)?;
    m.add_function(wrap_pyfunction!(forward_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(joint_positions, m)?)?;
    m.add_function(wrap_pyfunction!(inertia_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(gravity_vector, m)?)?;
    m.add_function(wrap_pyfunction!(coriolis_vector, m)?)?;
    m.add_function(wrap_pyfunction!(forward_dynamics, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    m.add_function(wrap_pyfunction!(csv_header, m)?)?;
    Ok(())
}
