//! First-principles Lagrangian of the rendered chain.
//!
//! Nothing here reads the closed-form entries. Link COM positions come from
//! [`com_chain_coefficients`]; the kinetic energy is summed link by link and
//! `M` is extracted from it by polarisation. `H` uses Christoffel symbols of
//! the first kind from central differences of `M`, and `G` is a central
//! difference of the potential energy.

use nalgebra::Matrix5;

use crate::kinematics::{com_chain_coefficients, JointState, Joints};
use crate::params::RobotParams;

/// Step for the configuration derivatives of `M`.
pub const INERTIA_FD_STEP: f64 = 1e-5;
/// Step for the gradient of the potential energy.
pub const POTENTIAL_FD_STEP: f64 = 1e-6;

/// `Σ ½mᵢ‖v_cᵢ‖² + ½Iᵢθ̇ᵢ²` with COM velocities differentiated from the chain.
pub fn oracle_kinetic_energy(state: &JointState, params: &RobotParams) -> f64 {
    let s = com_chain_coefficients(params);
    kinetic_energy_with(&s, &state.theta, &state.theta_dot, params)
}

fn kinetic_energy_with(
    chain: &Matrix5<f64>,
    theta: &Joints,
    theta_dot: &Joints,
    params: &RobotParams,
) -> f64 {
    // d/dt (cos θ, sin θ) = θ̇ (−sin θ, cos θ)
    let wx = Joints::from_fn(|j, _| -theta[j].sin() * theta_dot[j]);
    let wy = Joints::from_fn(|j, _| theta[j].cos() * theta_dot[j]);
    let vx = chain * wx;
    let vy = chain * wy;
    params
        .links
        .iter()
        .enumerate()
        .map(|(i, link)| {
            0.5 * link.mass * (vx[i] * vx[i] + vy[i] * vy[i])
                + 0.5 * link.inertia * theta_dot[i] * theta_dot[i]
        })
        .sum()
}

/// Inertia matrix as the Hessian of the kinetic energy in `θ̇`.
///
/// The kinetic energy is exactly quadratic in `θ̇`, so `M_jj = 2T(eⱼ)` and
/// `M_jk = T(eⱼ + eₖ) − T(eⱼ) − T(eₖ)`.
pub fn oracle_inertia_fd(theta: &Joints, params: &RobotParams) -> Matrix5<f64> {
    let chain = com_chain_coefficients(params);
    let t = |v: Joints| kinetic_energy_with(&chain, theta, &v, params);
    let unit = |j: usize| Joints::from_fn(|i, _| if i == j { 1.0 } else { 0.0 });
    let diag: [f64; 5] = std::array::from_fn(|j| t(unit(j)));
    let mut m = Matrix5::zeros();
    for j in 0..5 {
        m[(j, j)] = 2.0 * diag[j];
        for k in 0..j {
            let v = t(unit(j) + unit(k)) - diag[j] - diag[k];
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    m
}

/// `∂M/∂θₖ` for each `k` by central differences.
pub fn inertia_derivatives(theta: &Joints, params: &RobotParams) -> [Matrix5<f64>; 5] {
    let h = INERTIA_FD_STEP;
    std::array::from_fn(|k| {
        let (mut plus, mut minus) = (*theta, *theta);
        plus[k] += h;
        minus[k] -= h;
        (oracle_inertia_fd(&plus, params) - oracle_inertia_fd(&minus, params)) / (2.0 * h)
    })
}

/// Christoffel symbols `c[i][(j,k)] = ½(∂ₖM_ij + ∂ⱼM_ik − ∂ᵢM_jk)`.
pub fn christoffel_symbols(theta: &Joints, params: &RobotParams) -> [Matrix5<f64>; 5] {
    let dm = inertia_derivatives(theta, params);
    std::array::from_fn(|i| {
        Matrix5::from_fn(|j, k| 0.5 * (dm[k][(i, j)] + dm[j][(i, k)] - dm[i][(j, k)]))
    })
}

/// Coriolis matrix `C_ij = Σₖ c_ijk θ̇ₖ`, so that `H = C θ̇`.
pub fn coriolis_matrix(state: &JointState, params: &RobotParams) -> Matrix5<f64> {
    let c = christoffel_symbols(&state.theta, params);
    Matrix5::from_fn(|i, j| (c[i].row(j) * state.theta_dot)[0])
}

/// `Ṁ = Σₖ ∂ₖM θ̇ₖ`.
pub fn inertia_rate(state: &JointState, params: &RobotParams) -> Matrix5<f64> {
    inertia_derivatives(&state.theta, params)
        .iter()
        .zip(state.theta_dot.iter())
        .fold(Matrix5::zeros(), |acc, (d, v)| acc + d * *v)
}

pub fn oracle_coriolis(state: &JointState, params: &RobotParams) -> Joints {
    let c = christoffel_symbols(&state.theta, params);
    let v = state.theta_dot;
    Joints::from_fn(|i, _| v.dot(&(c[i] * v)))
}

/// `g Σ mᵢ y_cᵢ` with COM heights of the rendered chain.
pub fn oracle_potential(theta: &Joints, params: &RobotParams) -> f64 {
    let chain = com_chain_coefficients(params);
    let heights = chain * theta.map(f64::sin);
    params.gravity
        * params
            .links
            .iter()
            .zip(heights.iter())
            .map(|(l, y)| l.mass * y)
            .sum::<f64>()
}

pub fn oracle_gravity(theta: &Joints, params: &RobotParams) -> Joints {
    let h = POTENTIAL_FD_STEP;
    Joints::from_fn(|i, _| {
        let (mut plus, mut minus) = (*theta, *theta);
        plus[i] += h;
        minus[i] -= h;
        (oracle_potential(&plus, params) - oracle_potential(&minus, params)) / (2.0 * h)
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::dynamics::inertia_matrix;
    use crate::params::default_params;
    use crate::sampling::{random_state, random_theta, rng};

    #[test]
    fn oracle_inertia_symmetric_and_spd() {
        let p = default_params();
        let mut r = rng(31);
        for _ in 0..1000 {
            let m = oracle_inertia_fd(&random_theta(&mut r), &p);
            assert!((m - m.transpose()).amax() <= 1e-12);
            assert!(m.symmetric_eigenvalues().min() > 0.0);
        }
    }

    #[test]
    fn quadratic_form_reproduces_kinetic_energy() {
        let p = default_params();
        let mut r = rng(2);
        for _ in 0..50 {
            let s = random_state(&mut r);
            let m = oracle_inertia_fd(&s.theta, &p);
            let t = 0.5 * s.theta_dot.dot(&(m * s.theta_dot));
            let direct = oracle_kinetic_energy(&s, &p);
            assert!((t - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn stance_entries_agree_with_closed_form() {
        // The stance leg and trunk do not involve the mirrored swing angles,
        // so both models share those entries exactly.
        let p = default_params();
        let mut r = rng(4);
        for _ in 0..20 {
            let theta = random_theta(&mut r);
            let (a, b) = (oracle_inertia_fd(&theta, &p), inertia_matrix(&theta, &p));
            for (i, j) in [
                (0, 0),
                (1, 0),
                (1, 1),
                (2, 0),
                (2, 1),
                (2, 2),
                (3, 3),
                (4, 4),
            ] {
                assert!((a[(i, j)] - b[(i, j)]).abs() < 1e-12, "M{}{}", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn swing_entries_agree_at_equilibrium() {
        let p = default_params();
        let theta = Joints::repeat(FRAC_PI_2);
        let diff = oracle_inertia_fd(&theta, &p) - inertia_matrix(&theta, &p);
        assert!(diff.amax() < 1e-12);
    }

    #[test]
    fn skew_symmetry_of_mdot_minus_2c() {
        let p = default_params();
        let mut r = rng(8);
        for _ in 0..50 {
            let s = random_state(&mut r);
            let n = inertia_rate(&s, &p) - 2.0 * coriolis_matrix(&s, &p);
            assert!(s.theta_dot.dot(&(n * s.theta_dot)).abs() <= 1e-8);
        }
    }

    #[test]
    fn coriolis_matrix_consistent_with_vector() {
        let p = default_params();
        let s = random_state(&mut rng(10));
        let h = coriolis_matrix(&s, &p) * s.theta_dot;
        assert!((h - oracle_coriolis(&s, &p)).amax() < 1e-10);
    }

    #[test]
    fn oracle_gravity_vanishes_upright() {
        let p = default_params();
        assert!(oracle_gravity(&Joints::repeat(FRAC_PI_2), &p).amax() < 1e-8);
    }
}
