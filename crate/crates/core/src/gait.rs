//! Reduced-model gait generation.
//!
//! The desired posture is constrained to a straight stance leg
//! (`θ₂ = θ₁`), an upright trunk (`θ₃ = π/2`), a fixed hip offset
//! (`θ₄ = θ₁ + α`) and a rhythmic swing knee (`θ₅ = θ₁ − a·sin²(πt/T)`), with
//! zero stance-ankle torque. Under these constraints the linearised dynamics
//! collapse to one scalar equation in the stance-ankle angle,
//!
//! ```text
//! M₁ θ̈₁ + H₁ θ₁ = −K − h(t) − s(t),   h, s ∝ cos(2πt/T)
//! ```
//!
//! which is solved in closed form as
//! `θ₁(t) = C₁e^{r₁(t−t₀)} + C₂e^{r₂(t−t₀)} + C₃cos(2πt/T) − K/H₁`.
//! `C₃` follows from harmonic balance and `C₁, C₂` from the two boundary
//! angles.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector2;
use thiserror::Error;

use crate::dynamics::inertia_matrix;
use crate::kinematics::Joints;
use crate::linearization::gravity_jacobian;
use crate::params::RobotParams;
use crate::simulation::integrators::rkf45_integrate;
use crate::simulation::{SimConfig, SimError};

#[derive(Debug, Error, PartialEq)]
pub enum GaitError {
    #[error("invalid gait spec: {0}")]
    InvalidSpec(String),
    #[error("stability condition M1*H1 < 0 violated (M1 = {m1}, H1 = {h1})")]
    StabilityConditionViolated { m1: f64, h1: f64 },
    #[error("period {period} s resonates with the reduced model (H1 = M1*(2*pi/T)^2)")]
    ResonantPeriod { period: f64 },
    #[error("boundary-value system is singular")]
    SingularBoundarySystem,
    #[error("t = {t} outside the gait window [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
}

/// Parameters of one single-support gait segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitSpec {
    /// Constant swing-hip offset `θ₄ − θ₁` (rad).
    pub alpha: f64,
    /// Gait period `T` (s).
    pub period: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub theta1_start: f64,
    pub theta1_end: f64,
    pub theta_eq: Joints,
    /// Amplitude of the `sin²` swing-knee profile (rad); 1 in the reference gait.
    pub swing_amplitude: f64,
}

impl Default for GaitSpec {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            period: 1.0,
            t_start: 0.0,
            t_end: 1.0,
            theta1_start: FRAC_PI_2 + 0.1,
            theta1_end: FRAC_PI_2 - 0.1,
            theta_eq: Joints::repeat(FRAC_PI_2),
            swing_amplitude: 1.0,
        }
    }
}

impl GaitSpec {
    pub fn validate(&self) -> Result<(), GaitError> {
        let finite = [
            self.alpha,
            self.period,
            self.t_start,
            self.t_end,
            self.theta1_start,
            self.theta1_end,
            self.swing_amplitude,
        ]
        .iter()
        .chain(self.theta_eq.iter())
        .all(|v| v.is_finite());
        if !finite {
            return Err(GaitError::InvalidSpec("non-finite field".into()));
        }
        if !(self.period > 0.0) {
            return Err(GaitError::InvalidSpec(format!(
                "period must be > 0, got {}",
                self.period
            )));
        }
        if !(self.t_end > self.t_start) {
            return Err(GaitError::InvalidSpec(format!(
                "t_end ({}) must exceed t_start ({})",
                self.t_end, self.t_start
            )));
        }
        Ok(())
    }

    /// `2π/T`
    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    fn check_domain(&self, t: f64) -> Result<(), GaitError> {
        if t >= self.t_start && t <= self.t_end {
            Ok(())
        } else {
            Err(GaitError::OutOfDomain {
                t,
                start: self.t_start,
                end: self.t_end,
            })
        }
    }
}

/// Constant coefficients of the reduced scalar equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedModel {
    pub m1: f64,
    pub h1: f64,
    pub k_const: f64,
    pub m2: f64,
    /// Amplitude of `h(t)`, the cosine forcing from the swing-knee gravity term.
    pub cos_amp_h: f64,
    /// Amplitude of `s(t)`, the cosine forcing from the swing-knee acceleration.
    pub cos_amp_s: f64,
    /// `∂G₅/∂θ₅` at the equilibrium.
    pub dg5: f64,
}

impl ReducedModel {
    /// Right-hand side `−K − (A_h + A_s)·cos(ωt)` of the reduced equation.
    pub fn forcing(&self, spec: &GaitSpec, t: f64) -> f64 {
        -self.k_const - (self.cos_amp_h + self.cos_amp_s) * (spec.omega() * t).cos()
    }

    /// `M₁θ̈ + H₁θ + K + h(t) + s(t)`, zero along any exact solution.
    pub fn residual(&self, spec: &GaitSpec, t: f64, theta: f64, theta_ddot: f64) -> f64 {
        self.m1 * theta_ddot + self.h1 * theta - self.forcing(spec, t)
    }
}

/// Evaluates the reduced coefficients at `spec.theta_eq`.
///
/// `M₁` and `M₂` use the mirrored (symmetric) closed-form inertia matrix and
/// the stance-ankle equilibrium torque is zero.
pub fn reduced_coefficients(
    spec: &GaitSpec,
    params: &RobotParams,
) -> Result<ReducedModel, GaitError> {
    spec.validate()?;
    let eq = spec.theta_eq;
    let m = inertia_matrix(&eq, params);
    let dg = gravity_jacobian(&eq, params).diagonal();
    let amp = spec.swing_amplitude;
    let half_w = PI / spec.period;

    let m1 = (m[(0, 0)] + m[(1, 1)] + m[(3, 3)] + m[(4, 4)] + m[(1, 2)])
        + 2.0 * (m[(0, 1)] + m[(0, 3)] + m[(0, 4)] + m[(1, 4)] + m[(3, 4)]);
    let h1 = dg[0] + dg[1] + dg[3] + dg[4];
    let m2 = m[(0, 4)] + m[(1, 4)] + m[(3, 4)] + m[(4, 4)];
    let u1_eq = 0.0;
    let k_const =
        -dg.dot(&eq) + (spec.alpha * dg[3] + FRAC_PI_2 * dg[2] + 0.5 * amp * dg[4]) + u1_eq;

    let reduced = ReducedModel {
        m1,
        h1,
        k_const,
        m2,
        cos_amp_h: -0.5 * amp * dg[4],
        cos_amp_s: 2.0 * half_w * half_w * m2 * amp,
        dg5: dg[4],
    };
    if !(m1 * h1 < 0.0) {
        return Err(GaitError::StabilityConditionViolated { m1, h1 });
    }
    Ok(reduced)
}

/// Closed-form stance-ankle trajectory and the data it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitSolution {
    /// Coefficient of `e^{r₁(t − t₀)}`.
    pub c1: f64,
    /// Coefficient of `e^{r₂(t − t₀)}`.
    pub c2: f64,
    pub c3: f64,
    pub r1: f64,
    pub r2: f64,
    /// `−K/H₁`
    pub offset: f64,
    pub spec: GaitSpec,
    pub reduced: ReducedModel,
}

/// Desired joint angles, velocities and accelerations at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredState {
    pub theta: Joints,
    pub theta_dot: Joints,
    pub theta_ddot: Joints,
}

pub fn solve_gait(spec: &GaitSpec, params: &RobotParams) -> Result<GaitSolution, GaitError> {
    let reduced = reduced_coefficients(spec, params)?;
    solve_reduced(spec, &reduced)
}

/// Solves the boundary-value problem for given reduced coefficients.
pub fn solve_reduced(spec: &GaitSpec, reduced: &ReducedModel) -> Result<GaitSolution, GaitError> {
    spec.validate()?;
    let (m1, h1) = (reduced.m1, reduced.h1);
    let w = spec.omega();
    let denom = h1 - m1 * w * w;
    if denom.abs() <= 1e-12 * h1.abs().max((m1 * w * w).abs()) {
        return Err(GaitError::ResonantPeriod {
            period: spec.period,
        });
    }
    if !(m1 * h1 < 0.0) {
        return Err(GaitError::StabilityConditionViolated { m1, h1 });
    }
    let r1 = (-m1 * h1).sqrt() / m1;
    let r2 = -r1;
    let c3 = -(reduced.cos_amp_h + reduced.cos_amp_s) / denom;
    let offset = -reduced.k_const / h1;

    // [1, 1; e^{r1 Δ}, e^{r2 Δ}] [C1; C2] = [b0; bf]
    let delta = spec.t_end - spec.t_start;
    let b0 = spec.theta1_start - c3 * (w * spec.t_start).cos() - offset;
    let bf = spec.theta1_end - c3 * (w * spec.t_end).cos() - offset;
    let (e1, e2) = ((r1 * delta).exp(), (r2 * delta).exp());
    let det = e2 - e1;
    if !det.is_finite() || det.abs() <= f64::EPSILON * e1.abs().max(e2.abs()) {
        return Err(GaitError::SingularBoundarySystem);
    }
    let c1 = (b0 * e2 - bf) / det;
    let c2 = (bf - b0 * e1) / det;
    Ok(GaitSolution {
        c1,
        c2,
        c3,
        r1,
        r2,
        offset,
        spec: *spec,
        reduced: *reduced,
    })
}

impl GaitSolution {
    /// `θ₁`, `θ̇₁`, `θ̈₁` without the domain check.
    fn theta1_unchecked(&self, t: f64) -> (f64, f64, f64) {
        let tau = t - self.spec.t_start;
        let w = self.spec.omega();
        let e1 = self.c1 * (self.r1 * tau).exp();
        let e2 = self.c2 * (self.r2 * tau).exp();
        let (s, c) = (w * t).sin_cos();
        let value = e1 + e2 + self.c3 * c + self.offset;
        let rate = self.r1 * e1 + self.r2 * e2 - self.c3 * w * s;
        let accel = self.r1 * self.r1 * e1 + self.r2 * self.r2 * e2 - self.c3 * w * w * c;
        (value, rate, accel)
    }

    /// Stance-ankle angle and its exact first and second derivatives.
    pub fn eval_theta1(&self, t: f64) -> Result<(f64, f64, f64), GaitError> {
        self.spec.check_domain(t)?;
        Ok(self.theta1_unchecked(t))
    }

    /// Full desired posture from the stance-ankle solution.
    pub fn desired_state(&self, t: f64) -> Result<DesiredState, GaitError> {
        let (q, qd, qdd) = self.eval_theta1(t)?;
        let spec = &self.spec;
        let a = spec.swing_amplitude;
        let hw = PI / spec.period;
        let s1 = (hw * t).sin();
        let (s2, c2) = (2.0 * hw * t).sin_cos();
        let theta = Joints::new(q, q, FRAC_PI_2, q + spec.alpha, q - a * s1 * s1);
        let theta_dot = Joints::new(qd, qd, 0.0, qd, qd - a * hw * s2);
        let theta_ddot = Joints::new(qdd, qdd, 0.0, qdd, qdd - 2.0 * a * hw * hw * c2);
        Ok(DesiredState {
            theta,
            theta_dot,
            theta_ddot,
        })
    }

    /// Stance-ankle acceleration obtained by rearranging the reduced equation.
    pub fn reduced_acceleration(&self, t: f64, theta1: f64) -> f64 {
        (self.reduced.forcing(&self.spec, t) - self.reduced.h1 * theta1) / self.reduced.m1
    }

    /// Constants of the alternative closed-form expressions that accompany
    /// the reduced solution in the literature, evaluated for comparison only.
    pub fn printed_constants(&self) -> PrintedConstants {
        let spec = &self.spec;
        let red = &self.reduced;
        let hw = PI / spec.period;
        let k_over_h = red.k_const / red.h1;
        let c3 = (red.dg5 / 2.0 - red.m2 * hw * hw) / (4.0 * hw * hw * red.m1 - red.h1);
        let (th0, thf, tf) = (spec.theta1_start, spec.theta1_end, spec.t_end);
        let c2 = ((c3 + thf - th0 - k_over_h) * (self.r1 * tf).exp() - c3 * (2.0 * hw * tf).cos()
            + k_over_h)
            / ((self.r1 * tf).exp() + (self.r2 * tf).exp());
        let c1 = c2 - k_over_h + c3 - th0;
        let eval = |t: f64| {
            c1 * (self.r1 * t).exp() + c2 * (self.r2 * t).exp() + c3 * (2.0 * hw * t).cos()
                - k_over_h
        };
        PrintedConstants {
            c1,
            c2,
            c3,
            start_residual: eval(spec.t_start) - th0,
            end_residual: eval(tf) - thf,
        }
    }

    /// `C₁`, `C₂` rebased to the `e^{r t}` basis.
    pub fn absolute_time_coefficients(&self) -> (f64, f64) {
        let t0 = self.spec.t_start;
        (
            self.c1 * (-self.r1 * t0).exp(),
            self.c2 * (-self.r2 * t0).exp(),
        )
    }
}

/// Alternative closed-form constants and the boundary errors they produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub start_residual: f64,
    pub end_residual: f64,
}

/// Integrates the reduced equation numerically from the closed-form initial
/// condition and returns the largest deviation from the closed form over the
/// accepted steps.
pub fn integrate_reduced_check(sol: &GaitSolution, tolerance: f64) -> Result<f64, SimError> {
    let cfg = SimConfig {
        rel_tol: tolerance,
        abs_tol: tolerance,
        max_steps: 1_000_000,
        ..SimConfig::default()
    };
    let spec = sol.spec;
    let (q0, qd0, _) = sol.theta1_unchecked(spec.t_start);
    let mut f =
        |t: f64, y: &Vector2<f64>| Ok(Vector2::new(y[1], sol.reduced_acceleration(t, y[0])));
    let mut max_dev = (q0 - spec.theta1_start).abs();
    rkf45_integrate(
        &mut f,
        Vector2::new(q0, qd0),
        (spec.t_start, spec.t_end),
        &cfg,
        |t, y| {
            let (exact, _, _) = sol.theta1_unchecked(t);
            max_dev = max_dev.max((y[0] - exact).abs());
        },
    )?;
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::default_params;

    fn synthetic() -> (GaitSpec, ReducedModel) {
        let spec = GaitSpec {
            t_start: 0.0,
            t_end: 1.0,
            theta1_start: 1.0,
            theta1_end: 1f64.cosh(),
            ..GaitSpec::default()
        };
        let reduced = ReducedModel {
            m1: 1.0,
            h1: -1.0,
            k_const: 0.0,
            m2: 0.0,
            cos_amp_h: 0.0,
            cos_amp_s: 0.0,
            dg5: 0.0,
        };
        (spec, reduced)
    }

    #[test]
    fn hyperbolic_case() {
        let (spec, red) = synthetic();
        let sol = solve_reduced(&spec, &red).unwrap();
        assert!((sol.c1 - 0.5).abs() < 1e-14);
        assert!((sol.c2 - 0.5).abs() < 1e-14);
        assert_eq!((sol.r1, sol.r2, sol.c3), (1.0, -1.0, 0.0));
    }

    #[test]
    fn reference_coefficients() {
        let p = default_params();
        let red = reduced_coefficients(&GaitSpec::default(), &p).unwrap();
        let g = 9.81;
        let k = p.links.map(|l| l.com_distance());
        let m = p.links.map(|l| l.mass);
        let l = p.links.map(|l| l.length);
        let expected_h1 = -g
            * ((0.164 + (7.0 + 24.85 + 7.0 + 3.255) * l[0])
                + (0.366 + (24.85 + 7.0 + 3.255) * l[1])
                + (m[3] * (l[3] - k[3]) + m[4] * l[3])
                + m[4] * (l[4] - k[4]));
        assert!((red.h1 - expected_h1).abs() < 1e-10);
        assert!(red.h1 < 0.0);
        assert!(red.m1 * red.h1 < 0.0);
        assert!((red.dg5 + 9.81 * (3.255 * 0.426 - 0.164)).abs() < 1e-12);
        assert!((red.dg5 + 11.994).abs() < 1e-3);
    }

    #[test]
    fn boundary_and_residual() {
        let p = default_params();
        let spec = GaitSpec::default();
        let sol = solve_gait(&spec, &p).unwrap();
        assert!((sol.eval_theta1(0.0).unwrap().0 - spec.theta1_start).abs() <= 1e-10);
        assert!((sol.eval_theta1(1.0).unwrap().0 - spec.theta1_end).abs() <= 1e-10);
        assert_eq!(sol.r1 + sol.r2, 0.0);
        assert!(
            (sol.r1 * sol.r1 + sol.reduced.h1 / sol.reduced.m1).abs() <= 1e-12 * sol.r1 * sol.r1
        );
        for i in 0..1000 {
            let t = i as f64 / 999.0;
            let (q, _, qdd) = sol.eval_theta1(t).unwrap();
            assert!(sol.reduced.residual(&spec, t, q, qdd).abs() <= 1e-8);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = default_params();
        let sol = solve_gait(&GaitSpec::default(), &p).unwrap();
        let h = 1e-5;
        for i in 1..=100 {
            let t = 0.005 + 0.99 * i as f64 / 101.0;
            let (_, qd, qdd) = sol.eval_theta1(t).unwrap();
            let (qp, qdp, _) = sol.eval_theta1(t + h).unwrap();
            let (qm, qdm, _) = sol.eval_theta1(t - h).unwrap();
            assert!(((qp - qm) / (2.0 * h) - qd).abs() < 1e-6);
            assert!(((qdp - qdm) / (2.0 * h) - qdd).abs() < 1e-6 * qdd.abs().max(1.0));

            let d = sol.desired_state(t).unwrap();
            let (dp, dm) = (
                sol.desired_state(t + h).unwrap(),
                sol.desired_state(t - h).unwrap(),
            );
            let fd_vel = (dp.theta - dm.theta) / (2.0 * h);
            let fd_acc = (dp.theta_dot - dm.theta_dot) / (2.0 * h);
            assert!((fd_vel - d.theta_dot).amax() < 1e-6);
            assert!((fd_acc - d.theta_ddot).amax() < 1e-6 * d.theta_ddot.amax().max(1.0));
        }
    }

    #[test]
    fn acceleration_matches_rearranged_equation() {
        let p = default_params();
        let sol = solve_gait(&GaitSpec::default(), &p).unwrap();
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let (q, _, qdd) = sol.eval_theta1(t).unwrap();
            assert!((qdd - sol.reduced_acceleration(t, q)).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_is_enforced() {
        let p = default_params();
        let sol = solve_gait(&GaitSpec::default(), &p).unwrap();
        assert!(matches!(
            sol.eval_theta1(-1e-9),
            Err(GaitError::OutOfDomain { .. })
        ));
        assert!(matches!(
            sol.desired_state(1.5),
            Err(GaitError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn posture_identities() {
        let p = default_params();
        let spec = GaitSpec::default();
        let sol = solve_gait(&spec, &p).unwrap();
        let start = sol.desired_state(0.0).unwrap();
        assert_eq!(start.theta[4], start.theta[0]);
        let mid = sol.desired_state(0.5).unwrap();
        assert!((mid.theta[4] - mid.theta[0] + 1.0).abs() < 1e-15);
        let quarter = sol.desired_state(0.25).unwrap();
        assert!((quarter.theta_dot[4] - quarter.theta_dot[0] + PI).abs() < 1e-12);
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            let d = sol.desired_state(t).unwrap();
            assert_eq!(d.theta[1], d.theta[0]);
            assert_eq!(d.theta[2], FRAC_PI_2);
            assert_eq!((d.theta_ddot[2], d.theta_ddot[3]), (0.0, d.theta_ddot[0]));
        }
        let end = sol.desired_state(1.0).unwrap();
        assert!((end.theta[4] - end.theta[0]).abs() < 1e-15);
    }

    #[test]
    fn stability_violation_rejected() {
        let (spec, mut red) = synthetic();
        red.h1 = 1.0;
        assert_eq!(
            solve_reduced(&spec, &red),
            Err(GaitError::StabilityConditionViolated { m1: 1.0, h1: 1.0 })
        );
        // hanging equilibrium flips the sign of the gravity stiffness
        let hanging = GaitSpec {
            theta_eq: Joints::repeat(-FRAC_PI_2),
            ..GaitSpec::default()
        };
        assert!(matches!(
            solve_gait(&hanging, &default_params()),
            Err(GaitError::StabilityConditionViolated { .. })
        ));
    }

    #[test]
    fn resonance_rejected() {
        // only reachable with same-sign M1, H1; physical models fail the
        // stability condition long before resonance
        let (spec, mut red) = synthetic();
        red.h1 = spec.omega().powi(2);
        assert_eq!(
            solve_reduced(&spec, &red),
            Err(GaitError::ResonantPeriod {
                period: spec.period
            })
        );
    }

    #[test]
    fn invalid_spec() {
        let spec = GaitSpec {
            t_end: -1.0,
            ..GaitSpec::default()
        };
        assert!(matches!(
            solve_gait(&spec, &default_params()),
            Err(GaitError::InvalidSpec(_))
        ));
    }

    #[test]
    fn printed_constants_fail_start_condition() {
        let sol = solve_gait(&GaitSpec::default(), &default_params()).unwrap();
        let printed = sol.printed_constants();
        assert!(printed.start_residual.abs() > 1e-3);
        assert!((printed.c3 - sol.c3).abs() > 1e-6);
    }

    #[test]
    fn numeric_integration_agrees() {
        let sol = solve_gait(&GaitSpec::default(), &default_params()).unwrap();
        assert!(integrate_reduced_check(&sol, 1e-12).unwrap() <= 1e-6);
        let (spec, red) = synthetic();
        let hyper = solve_reduced(&spec, &red).unwrap();
        assert!(integrate_reduced_check(&hyper, 1e-12).unwrap() <= 1e-9);
        let coarse = integrate_reduced_check(&sol, 1e-8).unwrap();
        let fine = integrate_reduced_check(&sol, 1e-9).unwrap();
        assert!(fine < coarse, "{fine} !< {coarse}");
    }
}
