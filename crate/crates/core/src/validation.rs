//! End-to-end self-check of the model, the gait solution and the controller.
//!
//! Hard gates decide the overall status. Everything under "informational"
//! documents where the closed-form model departs from first principles and
//! never affects the status.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::{self, Write as _};

use rand::Rng;

use crate::control::{commanded_acceleration, computed_torque, error_reference, ControllerGains};
use crate::dynamics::ledger::{discrepancy_ledger, DiscrepancyLedger};
use crate::dynamics::{forward_dynamics_with, gravity_vector, Backend};
use crate::gait::{
    integrate_reduced_check, solve_gait, DesiredState, GaitError, GaitSolution, GaitSpec,
    PrintedConstants,
};
use crate::kinematics::{forward_kinematics, jacobian, joint_positions, JointState, Joints};
use crate::params::RobotParams;
use crate::sampling::{random_state, random_theta, rng};
use crate::simulation::{simulate_closed_loop, uniform_grid, SimConfig, SimError, Trajectory};

pub const GRAVITY_TOLERANCE: f64 = 1e-6;
pub const JACOBIAN_TOLERANCE: f64 = 1e-8;
pub const GAIT_TOLERANCE: f64 = 1e-6;
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;
pub const ODE_RESIDUAL_TOLERANCE: f64 = 1e-8;
pub const LINEARIZATION_TOLERANCE: f64 = 1e-10;
pub const TRACKING_TOLERANCE: f64 = 1e-6;
pub const ERROR_REFERENCE_TOLERANCE: f64 = 1e-4;
/// Floating-point slack for the `θ₅ − θ₁ = −a·sin²` identity.
pub const ASSUMPTION_TOLERANCE: f64 = 1e-14;

/// Deliberate corruption of one gravity entry, for exercising the gravity gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityFault {
    /// Zero-based joint index.
    pub joint: usize,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Random samples for the gravity, Jacobian, linearisation and ledger checks.
    pub samples: usize,
    /// Random configurations for the inertia check.
    pub inertia_samples: usize,
    /// Randomised specs for the boundary check (on top of the given spec).
    pub boundary_specs: usize,
    pub ode_samples: usize,
    /// Model used for both plant and controller in the tracking checks.
    pub backend: Backend,
    pub gains: ControllerGains,
    pub initial_offset: f64,
    pub gravity_fault: Option<GravityFault>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: 100,
            inertia_samples: 1000,
            boundary_specs: 20,
            ode_samples: 1000,
            backend: Backend::Printed,
            gains: ControllerGains::default(),
            initial_offset: 0.05,
            gravity_fault: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    Above,
}

/// One numeric check against its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
}

impl Gate {
    pub fn at_most(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            relation: Relation::AtMost,
        }
    }

    pub fn above(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            relation: Relation::Above,
        }
    }

    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.threshold,
            Relation::Above => self.value > self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaCheck {
    pub printed_min_eigenvalue: f64,
    pub oracle_min_eigenvalue: f64,
    /// Largest `|M − Mᵀ|` entry over both backends.
    pub max_asymmetry: f64,
}

impl InertiaCheck {
    pub fn gates(&self) -> [Gate; 3] {
        [
            Gate::at_most(self.max_asymmetry, 0.0),
            Gate::above(self.printed_min_eigenvalue, 0.0),
            Gate::above(self.oracle_min_eigenvalue, 0.0),
        ]
    }

    pub fn passed(&self) -> bool {
        self.gates().iter().all(Gate::passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingCheck {
    /// Largest error starting on the trajectory.
    pub on_trajectory: Gate,
    pub max_abs_error: Joints,
    pub final_error: Joints,
    /// Largest deviation of the offset run from the analytic error decay.
    pub offset_vs_reference: Gate,
    pub offset_final_error: Joints,
}

impl TrackingCheck {
    pub fn passed(&self) -> bool {
        self.on_trajectory.passed() && self.offset_vs_reference.passed()
    }
}

/// Alternative closed-form constants next to the ones actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientDeviation {
    pub printed: PrintedConstants,
    /// `C₁`, `C₂` in the `e^{r t}` basis and `C₃`.
    pub derived: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwingAccelerationNote {
    /// `max |θ̈₅ₚ − θ̈₅|` over the window between the alternative sign and the
    /// exact derivative.
    pub max_difference: f64,
    pub text: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderingNote {
    /// Swing-ankle height at the equilibrium posture from the end-point equation.
    pub end_point_height: f64,
    /// Same point under the drawing convention.
    pub rendered_height: f64,
    pub text: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub seed: u64,
    pub backend: Backend,
    pub gravity_gradient_check: Gate,
    pub inertia_symmetry_spd: InertiaCheck,
    pub jacobian_check: Gate,
    pub analytic_vs_numeric_gait: Gate,
    pub boundary_condition_residuals: Gate,
    pub ode_residual: Gate,
    pub feedback_linearization: Gate,
    pub assumption_identities: Gate,
    pub tracking_error_summary: TrackingCheck,
    pub printed_vs_oracle_ledger: DiscrepancyLedger,
    pub printed_coefficient_deviations: CoefficientDeviation,
    pub swing_acceleration_sign_note: SwingAccelerationNote,
    pub rendering_convention_note: RenderingNote,
    /// Largest error with the printed-model controller on the oracle plant.
    pub model_mismatch_error: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ValidationError {
    #[error(transparent)]
    Gait(#[from] GaitError),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

impl ValidationReport {
    /// Hard gates by name.
    pub fn hard_gates(&self) -> Vec<(&'static str, bool)> {
        vec![
            (
                "gravity_gradient_check",
                self.gravity_gradient_check.passed(),
            ),
            ("inertia_symmetry_spd", self.inertia_symmetry_spd.passed()),
            ("jacobian_check", self.jacobian_check.passed()),
            (
                "analytic_vs_numeric_gait",
                self.analytic_vs_numeric_gait.passed(),
            ),
            (
                "boundary_condition_residuals",
                self.boundary_condition_residuals.passed(),
            ),
            ("ode_residual", self.ode_residual.passed()),
            (
                "feedback_linearization",
                self.feedback_linearization.passed(),
            ),
            ("assumption_identities", self.assumption_identities.passed()),
            (
                "tracking_error_summary",
                self.tracking_error_summary.passed(),
            ),
        ]
    }

    pub fn passed(&self) -> bool {
        self.hard_gates().iter().all(|(_, ok)| *ok)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_gate(out: &mut String, name: &str, gate: &Gate) {
    let rel = match gate.relation {
        Relation::AtMost => "<=",
        Relation::Above => ">",
    };
    let _ = writeln!(out, "  {name}:");
    let _ = writeln!(out, "    value: {:e}", gate.value);
    let _ = writeln!(out, "    threshold: {rel} {:e}", gate.threshold);
    let _ = writeln!(out, "    status: {}", status(gate.passed()));
}

fn joints_text(v: &Joints) -> String {
    v.iter()
        .map(|x| format!("{x:e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "validation:");
        let _ = writeln!(s, "  seed: {}", self.seed);
        let _ = writeln!(s, "  backend: {}", self.backend.name());
        let _ = writeln!(s, "hard_gates:");
        write_gate(
            &mut s,
            "gravity_gradient_check",
            &self.gravity_gradient_check,
        );
        let inertia = &self.inertia_symmetry_spd;
        let _ = writeln!(s, "  inertia_symmetry_spd:");
        let _ = writeln!(s, "    max_asymmetry: {:e}", inertia.max_asymmetry);
        let _ = writeln!(
            s,
            "    printed_min_eigenvalue: {:e}",
            inertia.printed_min_eigenvalue
        );
        let _ = writeln!(
            s,
            "    oracle_min_eigenvalue: {:e}",
            inertia.oracle_min_eigenvalue
        );
        let _ = writeln!(s, "    threshold: asymmetry <= 0, eigenvalues > 0");
        let _ = writeln!(s, "    status: {}", status(inertia.passed()));
        write_gate(&mut s, "jacobian_check", &self.jacobian_check);
        write_gate(
            &mut s,
            "analytic_vs_numeric_gait",
            &self.analytic_vs_numeric_gait,
        );
        write_gate(
            &mut s,
            "boundary_condition_residuals",
            &self.boundary_condition_residuals,
        );
        write_gate(&mut s, "ode_residual", &self.ode_residual);
        write_gate(
            &mut s,
            "feedback_linearization",
            &self.feedback_linearization,
        );
        write_gate(&mut s, "assumption_identities", &self.assumption_identities);
        let tr = &self.tracking_error_summary;
        let _ = writeln!(s, "  tracking_error_summary:");
        let _ = writeln!(
            s,
            "    on_trajectory_max_error: {:e}",
            tr.on_trajectory.value
        );
        let _ = writeln!(
            s,
            "    on_trajectory_threshold: <= {:e}",
            tr.on_trajectory.threshold
        );
        let _ = writeln!(s, "    max_abs_error: [{}]", joints_text(&tr.max_abs_error));
        let _ = writeln!(s, "    final_error: [{}]", joints_text(&tr.final_error));
        let _ = writeln!(
            s,
            "    offset_vs_reference: {:e}",
            tr.offset_vs_reference.value
        );
        let _ = writeln!(
            s,
            "    offset_vs_reference_threshold: <= {:e}",
            tr.offset_vs_reference.threshold
        );
        let _ = writeln!(
            s,
            "    offset_final_error: [{}]",
            joints_text(&tr.offset_final_error)
        );
        let _ = writeln!(s, "    status: {}", status(tr.passed()));

        let _ = writeln!(s, "informational:");
        let ledger = &self.printed_vs_oracle_ledger;
        let _ = writeln!(s, "  printed_vs_oracle_ledger:");
        let _ = writeln!(s, "    samples: {}", ledger.samples);
        let _ = writeln!(s, "    seed: {}", ledger.seed);
        let _ = writeln!(s, "    disagreeing: {}", ledger.disagreeing().count());
        for e in &ledger.entries {
            let _ = writeln!(
                s,
                "    {}: max_rel_diff={:e} max_abs_diff={:e} {}",
                e.symbol,
                e.max_rel_diff,
                e.max_abs_diff,
                if e.disagrees() { "DISAGREES" } else { "agrees" }
            );
        }
        let c = &self.printed_coefficient_deviations;
        let _ = writeln!(s, "  printed_coefficient_deviations:");
        for (name, printed, derived) in [
            ("C1", c.printed.c1, c.derived[0]),
            ("C2", c.printed.c2, c.derived[1]),
            ("C3", c.printed.c3, c.derived[2]),
        ] {
            let _ = writeln!(
                s,
                "    {name}: printed={printed:e} derived={derived:e} abs_diff={:e}",
                (printed - derived).abs()
            );
        }
        let _ = writeln!(
            s,
            "    printed_start_residual: {:e}",
            c.printed.start_residual
        );
        let _ = writeln!(s, "    printed_end_residual: {:e}", c.printed.end_residual);
        let _ = writeln!(s, "  swing_acceleration_sign_note:");
        let _ = writeln!(
            s,
            "    max_difference: {:e}",
            self.swing_acceleration_sign_note.max_difference
        );
        let _ = writeln!(s, "    note: {}", self.swing_acceleration_sign_note.text);
        let r = &self.rendering_convention_note;
        let _ = writeln!(s, "  rendering_convention_note:");
        let _ = writeln!(
            s,
            "    end_point_equation_swing_ankle_y: {:e}",
            r.end_point_height
        );
        let _ = writeln!(s, "    rendered_swing_ankle_y: {:e}", r.rendered_height);
        let _ = writeln!(s, "    note: {}", r.text);
        let _ = writeln!(s, "  model_mismatch:");
        let _ = writeln!(s, "    controller: printed");
        let _ = writeln!(s, "    plant: oracle");
        let _ = writeln!(s, "    max_abs_error: {:e}", self.model_mismatch_error);
        let _ = write!(s, "STATUS: {}", status(self.passed()));
        writeln!(f, "{s}")
    }
}

/// Potential energy from link COM heights along the end-point equation's
/// chain, where every segment adds `l·sin θ` upwards.
pub fn chain_potential(theta: &Joints, params: &RobotParams) -> f64 {
    let l = params.links.map(|link| link.length);
    let k = params.links.map(|link| link.com_distance());
    let s = theta.map(f64::sin);
    let hip = l[0] * s[0] + l[1] * s[1];
    let heights = [
        k[0] * s[0],
        l[0] * s[0] + k[1] * s[1],
        hip + k[2] * s[2],
        hip + (l[3] - k[3]) * s[3],
        hip + l[3] * s[3] + (l[4] - k[4]) * s[4],
    ];
    params.gravity
        * params
            .links
            .iter()
            .zip(heights)
            .map(|(link, y)| link.mass * y)
            .sum::<f64>()
}

/// Largest `‖G − ∇V‖∞ / max(1, ‖G‖∞)` over random configurations.
pub fn gravity_gradient_error<G>(params: &RobotParams, samples: usize, seed: u64, gravity: G) -> f64
where
    G: Fn(&Joints, &RobotParams) -> Joints,
{
    let h = 1e-6;
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let theta = random_theta(&mut r);
        let g = gravity(&theta, params);
        let fd = Joints::from_fn(|i, _| {
            let (mut a, mut b) = (theta, theta);
            a[i] += h;
            b[i] -= h;
            (chain_potential(&a, params) - chain_potential(&b, params)) / (2.0 * h)
        });
        worst = worst.max((g - fd).amax() / g.amax().max(1.0));
    }
    worst
}

pub fn inertia_check(params: &RobotParams, samples: usize, seed: u64) -> InertiaCheck {
    let mut r = rng(seed);
    let mut out = InertiaCheck {
        printed_min_eigenvalue: f64::INFINITY,
        oracle_min_eigenvalue: f64::INFINITY,
        max_asymmetry: 0.0,
    };
    for _ in 0..samples {
        let theta = random_theta(&mut r);
        for backend in [Backend::Printed, Backend::Oracle] {
            let m = backend.inertia(&theta, params);
            out.max_asymmetry = out.max_asymmetry.max((m - m.transpose()).amax());
            let min = m.symmetric_eigenvalues().min();
            let slot = match backend {
                Backend::Printed => &mut out.printed_min_eigenvalue,
                Backend::Oracle => &mut out.oracle_min_eigenvalue,
            };
            *slot = slot.min(min);
        }
    }
    out
}

/// Largest entry of `J − ∂(x, y)/∂θ` over random configurations.
pub fn jacobian_error(params: &RobotParams, samples: usize, seed: u64) -> f64 {
    let h = 1e-6;
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let theta = random_theta(&mut r);
        let j = jacobian(&theta, params);
        for k in 0..5 {
            let (mut a, mut b) = (theta, theta);
            a[k] += h;
            b[k] -= h;
            let (pa, pb) = (
                forward_kinematics(&a, params),
                forward_kinematics(&b, params),
            );
            let dx = (pa.x - pb.x) / (2.0 * h);
            let dy = (pa.y - pb.y) / (2.0 * h);
            worst = worst
                .max((j[(0, k)] - dx).abs())
                .max((j[(1, k)] - dy).abs());
        }
    }
    worst
}

/// A random gait specification around the default one.
pub fn random_spec<R: Rng + ?Sized>(r: &mut R) -> GaitSpec {
    let t_start = r.random_range(0.0..0.3);
    GaitSpec {
        alpha: r.random_range(0.1..0.5),
        period: r.random_range(0.6..1.5),
        t_start,
        t_end: t_start + r.random_range(0.5..1.5),
        theta1_start: FRAC_PI_2 + r.random_range(-0.2..0.2),
        theta1_end: FRAC_PI_2 + r.random_range(-0.2..0.2),
        ..GaitSpec::default()
    }
}

/// Largest boundary error over `spec` and `extra` random specs.
pub fn boundary_residual(
    spec: &GaitSpec,
    params: &RobotParams,
    extra: usize,
    seed: u64,
) -> Result<f64, GaitError> {
    let mut r = rng(seed);
    let mut specs = vec![*spec];
    specs.extend((0..extra).map(|_| random_spec(&mut r)));
    let mut worst = 0.0f64;
    for s in &specs {
        let sol = solve_gait(s, params)?;
        let (a, _, _) = sol.eval_theta1(s.t_start)?;
        let (b, _, _) = sol.eval_theta1(s.t_end)?;
        worst = worst
            .max((a - s.theta1_start).abs())
            .max((b - s.theta1_end).abs());
    }
    Ok(worst)
}

/// Largest residual of the reduced equation at `samples` evenly spaced times.
pub fn ode_residual(sol: &GaitSolution, samples: usize) -> Result<f64, GaitError> {
    let spec = &sol.spec;
    let n = samples.max(2);
    let mut worst = 0.0f64;
    for k in 0..n {
        let t = spec.t_start + (spec.t_end - spec.t_start) * k as f64 / (n - 1) as f64;
        let (q, _, qdd) = sol.eval_theta1(t.min(spec.t_end))?;
        worst = worst.max(sol.reduced.residual(spec, t, q, qdd).abs());
    }
    Ok(worst)
}

/// Largest `|θ̈ − (θ̈_d − K_v ė − K_p e)|` with controller and plant on `backend`.
pub fn feedback_linearization_error(
    params: &RobotParams,
    gains: &ControllerGains,
    backend: Backend,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let s = random_state(&mut r);
        let d = random_state(&mut r);
        let desired = DesiredState {
            theta: d.theta,
            theta_dot: d.theta_dot,
            theta_ddot: Joints::from_fn(|_, _| r.random_range(-5.0..5.0)),
        };
        let u = computed_torque(&s, &desired, gains, params, backend);
        let target = commanded_acceleration(&s, &desired, gains);
        match forward_dynamics_with(backend, &s, &u, params) {
            Ok(acc) => worst = worst.max((acc - target).amax()),
            Err(_) => return f64::INFINITY,
        }
    }
    worst
}

/// Largest deviation from the posture assumptions on the sampling grid,
/// including `θ₅ = θ₁` at the whole-period instants.
pub fn assumption_error(sol: &GaitSolution, grid: f64) -> Result<f64, GaitError> {
    let spec = &sol.spec;
    let a = spec.swing_amplitude;
    let mut times = uniform_grid(spec.t_start, spec.t_end, grid);
    let first_period = (spec.t_start / spec.period).ceil() as i64;
    let last_period = (spec.t_end / spec.period).floor() as i64;
    times.extend((first_period..=last_period).map(|k| k as f64 * spec.period));
    let mut worst = 0.0f64;
    for t in times {
        let d = sol.desired_state(t)?;
        let th = d.theta;
        let swing = -a * (PI * t / spec.period).sin().powi(2);
        for dev in [
            th[1] - th[0],
            th[2] - FRAC_PI_2,
            th[3] - (th[0] + spec.alpha),
            d.theta_dot[1] - d.theta_dot[0],
            d.theta_dot[2],
            d.theta_dot[3] - d.theta_dot[0],
            d.theta_ddot[1] - d.theta_ddot[0],
            d.theta_ddot[2],
            d.theta_ddot[3] - d.theta_ddot[0],
            (th[4] - th[0]) - swing,
        ] {
            worst = worst.max(dev.abs());
        }
    }
    Ok(worst)
}

/// Starting state displaced from the desired one by `offset` on every joint.
pub fn offset_start(sol: &GaitSolution, offset: f64) -> Result<JointState, GaitError> {
    let d = sol.desired_state(sol.spec.t_start)?;
    Ok(JointState {
        theta: d.theta.add_scalar(offset),
        theta_dot: d.theta_dot,
    })
}

/// Largest deviation of the simulated error from the analytic decay.
pub fn error_reference_deviation(traj: &Trajectory, gains: &ControllerGains) -> f64 {
    let Some(&t0) = traj.times.first() else {
        return 0.0;
    };
    let e0 = traj.theta[0] - traj.theta_d[0];
    let v0 = traj.theta_dot[0] - traj.theta_dot_d[0];
    traj.tracking_errors()
        .zip(&traj.times)
        .map(|(e, &t)| (e - error_reference(&e0, &v0, gains, t - t0)).amax())
        .fold(0.0, f64::max)
}

fn tracking_config(backend: Backend) -> SimConfig {
    SimConfig {
        backend,
        ..SimConfig::default()
    }
}

pub fn tracking_check(
    sol: &GaitSolution,
    params: &RobotParams,
    gains: &ControllerGains,
    backend: Backend,
    offset: f64,
) -> Result<TrackingCheck, ValidationError> {
    let cfg = tracking_config(backend);
    let on = simulate_closed_loop(params, sol, gains, &cfg, &offset_start(sol, 0.0)?)?;
    let summary = on.tracking_summary();
    let off = simulate_closed_loop(params, sol, gains, &cfg, &offset_start(sol, offset)?)?;
    Ok(TrackingCheck {
        on_trajectory: Gate::at_most(summary.overall_max(), TRACKING_TOLERANCE),
        max_abs_error: summary.max_abs_error,
        final_error: summary.final_error,
        offset_vs_reference: Gate::at_most(
            error_reference_deviation(&off, gains),
            ERROR_REFERENCE_TOLERANCE,
        ),
        offset_final_error: off.tracking_summary().final_error,
    })
}

/// Largest tracking error with the printed-model controller on the oracle plant.
pub fn model_mismatch_error(
    sol: &GaitSolution,
    params: &RobotParams,
    gains: &ControllerGains,
) -> Result<f64, ValidationError> {
    let cfg = SimConfig {
        controller_backend: Some(Backend::Printed),
        ..tracking_config(Backend::Oracle)
    };
    let traj = simulate_closed_loop(params, sol, gains, &cfg, &offset_start(sol, 0.0)?)?;
    Ok(traj.tracking_summary().overall_max())
}

pub fn coefficient_deviation(sol: &GaitSolution) -> CoefficientDeviation {
    let (c1, c2) = sol.absolute_time_coefficients();
    CoefficientDeviation {
        printed: sol.printed_constants(),
        derived: [c1, c2, sol.c3],
    }
}

pub fn swing_acceleration_note(sol: &GaitSolution) -> SwingAccelerationNote {
    let spec = &sol.spec;
    let hw = PI / spec.period;
    let max_difference = uniform_grid(spec.t_start, spec.t_end, 1e-3)
        .into_iter()
        .map(|t| (4.0 * spec.swing_amplitude * hw * hw * (2.0 * hw * t).cos()).abs())
        .fold(0.0, f64::max);
    SwingAccelerationNote {
        max_difference,
        text: "swing-shank acceleration uses the exact second derivative \
               -2a(pi/T)^2 cos(2 pi t/T); the '+' sign variant differs by the amount above",
    }
}

pub fn rendering_note(params: &RobotParams, theta_eq: &Joints) -> RenderingNote {
    RenderingNote {
        end_point_height: forward_kinematics(theta_eq, params).y,
        rendered_height: joint_positions(theta_eq, params)[5].y,
        text: "the end-point equation adds the swing segments upwards; drawings subtract them \
               so that the equilibrium posture stands on both feet",
    }
}

pub fn run_validation(
    params: &RobotParams,
    spec: &GaitSpec,
    cfg: &ValidationConfig,
) -> Result<ValidationReport, ValidationError> {
    let seed = cfg.seed;
    let fault = cfg.gravity_fault;
    let gravity = move |theta: &Joints, p: &RobotParams| {
        let mut g = gravity_vector(theta, p);
        if let Some(f) = fault {
            if f.joint < g.len() {
                g[f.joint] *= f.scale;
            }
        }
        g
    };
    let sol = solve_gait(spec, params)?;
    let gait_deviation = integrate_reduced_check(&sol, 1e-12)?;

    Ok(ValidationReport {
        seed,
        backend: cfg.backend,
        gravity_gradient_check: Gate::at_most(
            gravity_gradient_error(params, cfg.samples, seed, gravity),
            GRAVITY_TOLERANCE,
        ),
        inertia_symmetry_spd: inertia_check(params, cfg.inertia_samples, seed),
        jacobian_check: Gate::at_most(
            jacobian_error(params, cfg.samples, seed),
            JACOBIAN_TOLERANCE,
        ),
        analytic_vs_numeric_gait: Gate::at_most(gait_deviation, GAIT_TOLERANCE),
        boundary_condition_residuals: Gate::at_most(
            boundary_residual(spec, params, cfg.boundary_specs, seed)?,
            BOUNDARY_TOLERANCE,
        ),
        ode_residual: Gate::at_most(ode_residual(&sol, cfg.ode_samples)?, ODE_RESIDUAL_TOLERANCE),
        feedback_linearization: Gate::at_most(
            feedback_linearization_error(params, &cfg.gains, cfg.backend, cfg.samples, seed),
            LINEARIZATION_TOLERANCE,
        ),
        assumption_identities: Gate::at_most(assumption_error(&sol, 1e-3)?, ASSUMPTION_TOLERANCE),
        tracking_error_summary: tracking_check(
            &sol,
            params,
            &cfg.gains,
            cfg.backend,
            cfg.initial_offset,
        )?,
        printed_vs_oracle_ledger: discrepancy_ledger(params, cfg.samples, seed),
        printed_coefficient_deviations: coefficient_deviation(&sol),
        swing_acceleration_sign_note: swing_acceleration_note(&sol),
        rendering_convention_note: rendering_note(params, &spec.theta_eq),
        model_mismatch_error: model_mismatch_error(&sol, params, &cfg.gains)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::potential_energy;
    use crate::params::default_params;

    #[test]
    fn chain_potential_matches_closed_form_potential() {
        let p = default_params();
        let mut r = rng(3);
        for _ in 0..20 {
            let th = random_theta(&mut r);
            let (a, b) = (chain_potential(&th, &p), potential_energy(&th, &p));
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn gates() {
        assert!(Gate::at_most(1.0, 1.0).passed());
        assert!(!Gate::at_most(f64::NAN, 1.0).passed());
        assert!(!Gate::above(0.0, 0.0).passed());
        assert!(Gate::above(0.1, 0.0).passed());
    }

    #[test]
    fn corrupted_gravity_is_caught() {
        let p = default_params();
        let clean = gravity_gradient_error(&p, 50, 42, gravity_vector);
        assert!(clean <= GRAVITY_TOLERANCE, "{clean}");
        let bad = gravity_gradient_error(&p, 50, 42, |th, p| {
            let mut g = gravity_vector(th, p);
            g[2] *= 1.01;
            g
        });
        assert!(bad > GRAVITY_TOLERANCE, "{bad}");
    }

    #[test]
    fn default_assumptions_and_residuals() {
        let p = default_params();
        let sol = solve_gait(&GaitSpec::default(), &p).unwrap();
        assert!(assumption_error(&sol, 1e-3).unwrap() <= ASSUMPTION_TOLERANCE);
        assert!(ode_residual(&sol, 1000).unwrap() <= ODE_RESIDUAL_TOLERANCE);
        assert!(boundary_residual(&sol.spec, &p, 20, 42).unwrap() <= BOUNDARY_TOLERANCE);
        assert!(jacobian_error(&p, 100, 42) <= JACOBIAN_TOLERANCE);
    }

    #[test]
    fn rendering_note_values() {
        let p = default_params();
        let n = rendering_note(&p, &Joints::repeat(FRAC_PI_2));
        assert!((n.end_point_height - 1.70).abs() < 0.02);
        assert!(n.rendered_height.abs() < 1e-12);
    }
}
