//! ODE integration and closed-loop simulation of the single-support phase.

pub mod integrators;

use nalgebra::SVector;
use thiserror::Error;

use crate::control::{computed_torque, ControllerGains, TorqueLimits, TorqueVector};
use crate::dynamics::{Backend, DynamicsError};
use crate::gait::{DesiredState, GaitError, GaitSolution};
use crate::kinematics::{JointState, Joints};
use crate::params::RobotParams;

use integrators::{rk4_integrate, rkf45_integrate};

/// `[θ, θ̇]`
pub type PlantState = SVector<f64, 10>;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("exceeded {max_steps} integration steps at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("step size underflow (h = {step:e}) at t = {t}: problem is stiff or singular")]
    StepUnderflow { t: f64, step: f64 },
    #[error("non-finite derivative at t = {t}, state = {state:?}")]
    NonFinite { t: f64, state: Vec<f64> },
    #[error("dynamics failed at t = {t}: {source}")]
    Dynamics {
        t: f64,
        #[source]
        source: DynamicsError,
    },
    #[error(transparent)]
    Gait(#[from] GaitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Adaptive Runge–Kutta–Fehlberg 4(5).
    #[default]
    Rkf45,
    /// Classical RK4 with step `dt`.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Fixed step for [`Method::Rk4`] (s).
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on attempted steps.
    pub max_steps: usize,
    /// Plant model.
    pub backend: Backend,
    /// Model used by the controller; the plant model when `None`.
    pub controller_backend: Option<Backend>,
    pub method: Method,
    /// Zero-order hold period for the control torque; continuous when `None`.
    pub control_period: Option<f64>,
    pub limits: TorqueLimits,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            max_steps: 1_000_000,
            backend: Backend::Printed,
            controller_backend: None,
            method: Method::Rkf45,
            control_period: None,
            limits: TorqueLimits::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidConfig(what.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be > 0");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be > 0");
        }
        if let Some(p) = self.control_period {
            if !(p > 0.0 && p.is_finite()) {
                return bad("control period must be > 0");
            }
        }
        if let Some(s) = self.limits.saturation {
            if !(s > 0.0) {
                return bad("saturation limit must be > 0");
            }
        }
        Ok(())
    }

    fn controller(&self) -> Backend {
        self.controller_backend.unwrap_or(self.backend)
    }
}

/// Time series of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub theta: Vec<Joints>,
    pub theta_dot: Vec<Joints>,
    pub theta_d: Vec<Joints>,
    pub theta_dot_d: Vec<Joints>,
    pub theta_ddot_d: Vec<Joints>,
    pub torques: Vec<Joints>,
    /// Recorded samples at which the torque clamp was active.
    pub saturation_events: usize,
}

/// Per-joint tracking statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingSummary {
    pub max_abs_error: Joints,
    pub final_error: Joints,
}

impl TrackingSummary {
    pub fn overall_max(&self) -> f64 {
        self.max_abs_error.amax()
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, state: &JointState, desired: &DesiredState, u: &Joints) {
        self.times.push(t);
        self.theta.push(state.theta);
        self.theta_dot.push(state.theta_dot);
        self.theta_d.push(desired.theta);
        self.theta_dot_d.push(desired.theta_dot);
        self.theta_ddot_d.push(desired.theta_ddot);
        self.torques.push(*u);
    }

    pub fn tracking_errors(&self) -> impl Iterator<Item = Joints> + '_ {
        self.theta.iter().zip(&self.theta_d).map(|(a, d)| a - d)
    }

    pub fn tracking_summary(&self) -> TrackingSummary {
        let mut max = Joints::zeros();
        let mut last = Joints::zeros();
        for e in self.tracking_errors() {
            max = max.zip_map(&e, |m, v| m.max(v.abs()));
            last = e;
        }
        TrackingSummary {
            max_abs_error: max,
            final_error: last,
        }
    }

    /// Resamples onto a uniform grid of step `grid` spanning the recorded
    /// window. Actual states and torques are linearly interpolated; desired
    /// values are re-evaluated exactly from `solution`.
    pub fn resample(&self, grid: f64, solution: &GaitSolution) -> Result<Trajectory, GaitError> {
        let mut out = Trajectory {
            saturation_events: self.saturation_events,
            ..Trajectory::default()
        };
        let (Some(&t0), Some(&t1)) = (self.times.first(), self.times.last()) else {
            return Ok(out);
        };
        let times = uniform_grid(t0, t1, grid);
        let mut seg = 0;
        for t in times {
            while seg + 2 < self.times.len() && self.times[seg + 1] < t {
                seg += 1;
            }
            let (theta, theta_dot, u) = if self.times.len() == 1 {
                (self.theta[0], self.theta_dot[0], self.torques[0])
            } else {
                let (ta, tb) = (self.times[seg], self.times[seg + 1]);
                let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
                let lerp = |v: &[Joints]| v[seg] * (1.0 - w) + v[seg + 1] * w;
                (
                    lerp(&self.theta),
                    lerp(&self.theta_dot),
                    lerp(&self.torques),
                )
            };
            let desired = solution.desired_state(t)?;
            out.push(t, &JointState { theta, theta_dot }, &desired, &u);
        }
        Ok(out)
    }
}

/// `t0, t0 + step, …, t1`, with the last sample exactly at `t1`.
pub fn uniform_grid(t0: f64, t1: f64, step: f64) -> Vec<f64> {
    let n = ((t1 - t0) / step).round().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            if i == n {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / n as f64
            }
        })
        .collect()
}

fn split(x: &PlantState) -> JointState {
    JointState {
        theta: x.fixed_rows::<5>(0).into_owned(),
        theta_dot: x.fixed_rows::<5>(5).into_owned(),
    }
}

fn join(s: &JointState) -> PlantState {
    let mut x = PlantState::zeros();
    x.fixed_rows_mut::<5>(0).copy_from(&s.theta);
    x.fixed_rows_mut::<5>(5).copy_from(&s.theta_dot);
    x
}

/// `[θ̇, θ̈]` of the plant under torque `u`.
fn plant_derivative(
    params: &RobotParams,
    backend: Backend,
    t: f64,
    x: &PlantState,
    u: &Joints,
) -> Result<PlantState, SimError> {
    let s = split(x);
    let acc = backend
        .terms(&s, params)
        .acceleration(u, &s.theta)
        .map_err(|source| SimError::Dynamics { t, source })?;
    let mut dx = PlantState::zeros();
    dx.fixed_rows_mut::<5>(0).copy_from(&s.theta_dot);
    dx.fixed_rows_mut::<5>(5).copy_from(&acc);
    Ok(dx)
}

/// Integrates the gait window under computed-torque control.
pub fn simulate_closed_loop(
    params: &RobotParams,
    solution: &GaitSolution,
    gains: &ControllerGains,
    cfg: &SimConfig,
    initial: &JointState,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let spec = solution.spec;
    let (t0, t1) = (spec.t_start, spec.t_end);
    let controller = cfg.controller();
    let control =
        |t: f64, s: &JointState| -> Result<(TorqueVector, bool, DesiredState), SimError> {
            let desired = solution.desired_state(t.clamp(t0, t1))?;
            let u = computed_torque(s, &desired, gains, params, controller);
            let (u, clamped) = cfg.limits.apply(u);
            Ok((u, clamped, desired))
        };

    let mut traj = Trajectory::default();
    let (u0, clamped0, d0) = control(t0, initial)?;
    traj.push(t0, initial, &d0, &u0);
    traj.saturation_events += usize::from(clamped0);

    let mut x = join(initial);
    match cfg.control_period {
        None => {
            let mut f = |t: f64, x: &PlantState| {
                let s = split(x);
                let (u, _, _) = control(t, &s)?;
                plant_derivative(params, cfg.backend, t, x, &u)
            };
            let mut record = |t: f64, x: &PlantState| {
                let s = split(x);
                // the desired state is always defined on [t0, t1]
                if let Ok((u, clamped, d)) = control(t, &s) {
                    traj.push(t, &s, &d, &u);
                    traj.saturation_events += usize::from(clamped);
                }
            };
            integrate(&mut f, x, (t0, t1), cfg, &mut record)?;
        }
        Some(period) => {
            let holds = uniform_grid(t0, t1, period);
            for w in holds.windows(2) {
                let (ta, tb) = (w[0], w[1]);
                let (u, clamped, _) = control(ta, &split(&x))?;
                let mut f =
                    |t: f64, x: &PlantState| plant_derivative(params, cfg.backend, t, x, &u);
                let mut record = |t: f64, x: &PlantState| {
                    let s = split(x);
                    if let Ok(d) = solution.desired_state(t.clamp(t0, t1)) {
                        traj.push(t, &s, &d, &u);
                        traj.saturation_events += usize::from(clamped);
                    }
                };
                x = integrate(&mut f, x, (ta, tb), cfg, &mut record)?;
            }
        }
    }
    Ok(traj)
}

fn integrate<F, O>(
    f: &mut F,
    x0: PlantState,
    span: (f64, f64),
    cfg: &SimConfig,
    observer: O,
) -> Result<PlantState, SimError>
where
    F: FnMut(f64, &PlantState) -> Result<PlantState, SimError>,
    O: FnMut(f64, &PlantState),
{
    match cfg.method {
        Method::Rkf45 => Ok(rkf45_integrate(f, x0, span, cfg, observer)?.state),
        Method::Rk4 => rk4_integrate(f, x0, span, cfg.dt, observer),
    }
}

/// Integrates the unforced plant (`U = 0`) and returns the accepted states.
pub fn simulate_passive(
    params: &RobotParams,
    backend: Backend,
    initial: &JointState,
    span: (f64, f64),
    cfg: &SimConfig,
) -> Result<Vec<(f64, JointState)>, SimError> {
    let mut out = vec![(span.0, *initial)];
    let zero = Joints::zeros();
    let mut f = |t: f64, x: &PlantState| plant_derivative(params, backend, t, x, &zero);
    integrate(&mut f, join(initial), span, cfg, |t, x| {
        out.push((t, split(x)))
    })?;
    Ok(out)
}
