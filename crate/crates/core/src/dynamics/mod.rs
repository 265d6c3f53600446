//! Single-support equations of motion `M(θ)θ̈ + H(θ,θ̇) + G(θ) = D·U`.
//!
//! Two interchangeable backends are provided:
//!
//! * [`Backend::Printed`] evaluates the closed-form entries of the classic
//!   five-link model. Only the lower triangle and diagonal of `M` are
//!   evaluated; the upper triangle is mirrored from them.
//! * [`Backend::Oracle`] rebuilds `M`, `H` and `G` from first principles
//!   (kinetic and potential energy of the rendered chain, with finite
//!   differences for the configuration derivatives). See [`oracle`].

pub mod ledger;
pub mod oracle;

use nalgebra::{Cholesky, Matrix5};
use thiserror::Error;

use crate::kinematics::{JointState, Joints};
use crate::params::RobotParams;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("inertia matrix is not positive definite at theta={theta:?}")]
    NotPositiveDefinite { theta: [f64; 5] },
}

/// Which model of the dynamics to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Closed-form printed entries.
    #[default]
    Printed,
    /// First-principles Lagrangian rebuilt numerically.
    Oracle,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Printed => "printed",
            Backend::Oracle => "oracle",
        }
    }

    pub fn inertia(self, theta: &Joints, params: &RobotParams) -> Matrix5<f64> {
        match self {
            Backend::Printed => inertia_matrix(theta, params),
            Backend::Oracle => oracle::oracle_inertia_fd(theta, params),
        }
    }

    pub fn coriolis(self, state: &JointState, params: &RobotParams) -> Joints {
        match self {
            Backend::Printed => coriolis_vector(state, params),
            Backend::Oracle => oracle::oracle_coriolis(state, params),
        }
    }

    pub fn gravity(self, theta: &Joints, params: &RobotParams) -> Joints {
        match self {
            Backend::Printed => gravity_vector(theta, params),
            Backend::Oracle => oracle::oracle_gravity(theta, params),
        }
    }

    pub fn terms(self, state: &JointState, params: &RobotParams) -> DynamicsTerms {
        DynamicsTerms {
            inertia: self.inertia(&state.theta, params),
            coriolis: self.coriolis(state, params),
            gravity_vec: self.gravity(&state.theta, params),
            input_map: input_map(),
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "printed" => Ok(Backend::Printed),
            "oracle" => Ok(Backend::Oracle),
            other => Err(format!(
                "unknown backend `{other}` (expected printed|oracle)"
            )),
        }
    }
}

/// `M`, `H`, `G` and `D` evaluated at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms {
    pub inertia: Matrix5<f64>,
    pub coriolis: Joints,
    pub gravity_vec: Joints,
    pub input_map: Matrix5<f64>,
}

impl DynamicsTerms {
    /// Solves `M θ̈ = D·U − H − G` by Cholesky factorisation.
    pub fn acceleration(&self, u: &Joints, theta: &Joints) -> Result<Joints, DynamicsError> {
        let rhs = self.input_map * u - self.coriolis - self.gravity_vec;
        let chol = Cholesky::new(self.inertia).ok_or(DynamicsError::NotPositiveDefinite {
            theta: (*theta).into(),
        })?;
        Ok(chol.solve(&rhs))
    }
}

/// Products of masses and lengths that appear in the closed-form entries.
/// Every COM distance `k` enters through the first moment `m·k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModelCoefficients {
    m11: f64,
    m22: f64,
    m33: f64,
    m44: f64,
    m55: f64,
    c12: f64,
    c13: f64,
    c23: f64,
    c14: f64,
    c24: f64,
    c15: f64,
    c25: f64,
    c45: f64,
    /// gravity torque amplitudes, `Gᵢ = g·gravity[i]·cos θᵢ`
    pub(crate) gravity: [f64; 5],
}

impl ModelCoefficients {
    pub(crate) fn new(p: &RobotParams) -> Self {
        let [l1, l2, _, l4, l5] = p.links.map(|l| l.length);
        let [_, m2, m3, m4, m5] = p.links.map(|l| l.mass);
        let mk = p.links.map(|l| l.first_moment);
        let k = p.links.map(|l| l.com_distance());

        // mass carried distal of each stance link
        let above1 = m2 + m3 + m4 + m5;
        let above2 = m3 + m4 + m5;
        // swing-thigh lumped moment about the hip, m4(l4-k4) + m5 l4
        let swing_thigh = m4 * (l4 - k[3]) + m5 * l4;
        let swing_shank = m5 * (l5 - k[4]);

        Self {
            m11: p.links[0].com_second_moment() + p.links[0].inertia + above1 * l1 * l1,
            m22: p.links[1].com_second_moment() + p.links[1].inertia + above2 * l2 * l2,
            m33: p.links[2].com_second_moment() + p.links[2].inertia,
            m44: m4 * (l4 - k[3]).powi(2) + m5 * l4 * l4 + p.links[3].inertia,
            m55: m5 * (l5 - k[4]).powi(2) + p.links[4].inertia,
            c12: l1 * (mk[1] + above2 * l2),
            c13: l1 * mk[2],
            c23: l2 * mk[2],
            c14: l1 * swing_thigh,
            c24: l2 * swing_thigh,
            c15: l1 * swing_shank,
            c25: l2 * swing_shank,
            c45: l4 * swing_shank,
            gravity: [
                mk[0] + above1 * l1,
                mk[1] + above2 * l2,
                mk[2],
                swing_thigh,
                swing_shank,
            ],
        }
    }
}

/// Closed-form inertia matrix, mirrored from its lower triangle.
pub fn inertia_matrix(theta: &Joints, params: &RobotParams) -> Matrix5<f64> {
    let c = ModelCoefficients::new(params);
    let t = theta;
    let mut m = Matrix5::zeros();
    m[(0, 0)] = c.m11;
    m[(1, 0)] = c.c12 * (t[0] - t[1]).cos();
    m[(1, 1)] = c.m22;
    m[(2, 0)] = c.c13 * (t[0] - t[2]).cos();
    m[(2, 1)] = c.c23 * (t[1] - t[2]).cos();
    m[(2, 2)] = c.m33;
    m[(3, 0)] = c.c14 * (t[0] + t[3]).cos();
    m[(3, 1)] = c.c24 * (t[1] + t[3]).cos();
    m[(3, 3)] = c.m44;
    m[(4, 0)] = c.c15 * (t[0] + t[4]).cos();
    m[(4, 1)] = c.c25 * (t[1] + t[4]).cos();
    m[(4, 3)] = c.c45 * (t[3] - t[4]).cos();
    m[(4, 4)] = c.m55;
    m.fill_upper_triangle_with_lower_triangle();
    m
}

/// The printed `[h_ij]` array; row `i` multiplies the squared velocities.
pub fn coriolis_coefficients(theta: &Joints, params: &RobotParams) -> Matrix5<f64> {
    let c = ModelCoefficients::new(params);
    let t = theta;
    let s12 = (t[0] - t[1]).sin();
    let s13 = (t[0] - t[2]).sin();
    let s23 = (t[1] - t[2]).sin();
    let s14 = (t[0] + t[3]).sin();
    let s24 = (t[1] + t[3]).sin();
    let s15 = (t[0] + t[4]).sin();
    let s25 = (t[1] + t[4]).sin();
    let s45 = (t[3] - t[4]).sin();
    let mut h = Matrix5::zeros();
    h[(0, 1)] = c.c12 * s12;
    h[(0, 2)] = c.c13 * s13;
    h[(0, 3)] = -c.c14 * s14;
    h[(0, 4)] = -c.c15 * s15;
    h[(1, 0)] = -c.c12 * s12;
    h[(1, 2)] = c.c23 * s23;
    h[(1, 3)] = -c.c24 * s24;
    h[(1, 4)] = -c.c25 * s25;
    h[(2, 0)] = -c.c13 * s13;
    h[(2, 1)] = -c.c23 * s23;
    h[(3, 0)] = -c.c14 * s14;
    h[(3, 1)] = -c.c24 * s24;
    h[(3, 4)] = c.c45 * s45;
    h[(4, 0)] = -c.c15 * s15;
    h[(4, 1)] = -c.c25 * s25;
    h[(4, 3)] = -c.c45 * s45;
    h
}

/// `Hᵢ = Σⱼ h_ij θ̇ⱼ²`.
pub fn coriolis_vector(state: &JointState, params: &RobotParams) -> Joints {
    coriolis_coefficients(&state.theta, params) * state.theta_dot.map(|v| v * v)
}

pub fn gravity_vector(theta: &Joints, params: &RobotParams) -> Joints {
    let c = ModelCoefficients::new(params);
    Joints::from_fn(|i, _| params.gravity * c.gravity[i] * theta[i].cos())
}

/// Torque coupling matrix: ones on the diagonal, minus ones just above it.
pub fn input_map() -> Matrix5<f64> {
    Matrix5::from_fn(|i, j| {
        if i == j {
            1.0
        } else if j == i + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Upper-triangular all-ones matrix, the exact inverse of [`input_map`].
pub fn input_map_inverse() -> Matrix5<f64> {
    Matrix5::from_fn(|i, j| if j >= i { 1.0 } else { 0.0 })
}

pub fn input_map_and_inverse() -> (Matrix5<f64>, Matrix5<f64>) {
    (input_map(), input_map_inverse())
}

/// Joint accelerations of the printed model under torque `u`.
pub fn forward_dynamics(
    state: &JointState,
    u: &Joints,
    params: &RobotParams,
) -> Result<Joints, DynamicsError> {
    forward_dynamics_with(Backend::Printed, state, u, params)
}

pub fn forward_dynamics_with(
    backend: Backend,
    state: &JointState,
    u: &Joints,
    params: &RobotParams,
) -> Result<Joints, DynamicsError> {
    backend.terms(state, params).acceleration(u, &state.theta)
}

/// Potential energy whose gradient is the printed gravity vector.
pub fn potential_energy(theta: &Joints, params: &RobotParams) -> f64 {
    let c = ModelCoefficients::new(params);
    params.gravity * (0..5).map(|i| c.gravity[i] * theta[i].sin()).sum::<f64>()
}

/// `½ θ̇ᵀ M(θ) θ̇` with the printed inertia matrix.
pub fn kinetic_energy(state: &JointState, params: &RobotParams) -> f64 {
    0.5 * state
        .theta_dot
        .dot(&(inertia_matrix(&state.theta, params) * state.theta_dot))
}
