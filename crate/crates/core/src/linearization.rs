//! Linearisation of the closed-form dynamics about a static equilibrium.
//!
//! The state deviation is `x = [θ − θ_eq, θ̇]` and the input deviation
//! `U − U_eq`, giving `ẋ = A x + B (U − U_eq)` with
//! `A = [[0, I], [−M⁻¹ ∂G/∂θ, 0]]` and `B = [[0], [M⁻¹ D]]`, all evaluated
//! at `θ_eq`.

use nalgebra::{Cholesky, Matrix5, SMatrix};

use crate::dynamics::{inertia_matrix, input_map, DynamicsError, ModelCoefficients};
use crate::kinematics::Joints;
use crate::params::RobotParams;

pub type StateMatrix = SMatrix<f64, 10, 10>;
pub type InputMatrix = SMatrix<f64, 10, 5>;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedModel {
    pub a_matrix: StateMatrix,
    pub b_matrix: InputMatrix,
    pub theta_eq: Joints,
    pub u_eq: Joints,
}

impl LinearizedModel {
    /// Lower-left block of `A`, `−M(θ_eq)⁻¹ ∂G/∂θ`.
    pub fn stiffness_block(&self) -> Matrix5<f64> {
        self.a_matrix.fixed_view::<5, 5>(5, 0).into_owned()
    }

    /// Lower block of `B`, `M(θ_eq)⁻¹ D`.
    pub fn input_block(&self) -> Matrix5<f64> {
        self.b_matrix.fixed_view::<5, 5>(5, 0).into_owned()
    }
}

/// `∂G/∂θ`. Each gravity torque depends on its own angle only, so the
/// Jacobian is diagonal with entries `−g·aᵢ·sin θᵢ`.
pub fn gravity_jacobian(theta: &Joints, params: &RobotParams) -> Matrix5<f64> {
    let c = ModelCoefficients::new(params);
    Matrix5::from_diagonal(&Joints::from_fn(|i, _| {
        -params.gravity * c.gravity[i] * theta[i].sin()
    }))
}

pub fn linearize(
    theta_eq: &Joints,
    u_eq: &Joints,
    params: &RobotParams,
) -> Result<LinearizedModel, DynamicsError> {
    let chol = Cholesky::new(inertia_matrix(theta_eq, params)).ok_or(
        DynamicsError::NotPositiveDefinite {
            theta: (*theta_eq).into(),
        },
    )?;
    let stiffness = -chol.solve(&gravity_jacobian(theta_eq, params));
    let input = chol.solve(&input_map());

    let mut a = StateMatrix::zeros();
    a.fixed_view_mut::<5, 5>(0, 5)
        .copy_from(&Matrix5::identity());
    a.fixed_view_mut::<5, 5>(5, 0).copy_from(&stiffness);
    let mut b = InputMatrix::zeros();
    b.fixed_view_mut::<5, 5>(5, 0).copy_from(&input);
    Ok(LinearizedModel {
        a_matrix: a,
        b_matrix: b,
        theta_eq: *theta_eq,
        u_eq: *u_eq,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::dynamics::{forward_dynamics, gravity_vector};
    use crate::kinematics::JointState;
    use crate::params::default_params;
    use crate::sampling::{random_theta, rng};

    fn eq() -> Joints {
        Joints::repeat(FRAC_PI_2)
    }

    #[test]
    fn gravity_jacobian_examples() {
        let p = default_params();
        let upright = gravity_jacobian(&eq(), &p);
        assert!((upright[(2, 2)] + 9.81 * 1.530).abs() < 1e-12);
        assert!((upright[(2, 2)] + 15.009).abs() < 1e-3);
        for i in 0..5 {
            assert!(upright[(i, i)] < 0.0);
        }
        assert_eq!(gravity_jacobian(&Joints::zeros(), &p), Matrix5::zeros());
    }

    #[test]
    fn gravity_jacobian_matches_finite_difference() {
        let p = default_params();
        let mut r = rng(13);
        let h = 1e-6;
        for _ in 0..50 {
            let theta = random_theta(&mut r);
            let j = gravity_jacobian(&theta, &p);
            for col in 0..5 {
                let (mut a, mut b) = (theta, theta);
                a[col] += h;
                b[col] -= h;
                let fd = (gravity_vector(&a, &p) - gravity_vector(&b, &p)) / (2.0 * h);
                for row in 0..5 {
                    assert!((fd[row] - j[(row, col)]).abs() < 1e-7);
                    if row != col {
                        assert_eq!(j[(row, col)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn block_structure() {
        let p = default_params();
        let lin = linearize(&eq(), &Joints::zeros(), &p).unwrap();
        let a = &lin.a_matrix;
        assert_eq!(a.fixed_view::<5, 5>(0, 0).into_owned(), Matrix5::zeros());
        assert_eq!(a.fixed_view::<5, 5>(5, 5).into_owned(), Matrix5::zeros());
        assert_eq!(a.fixed_view::<5, 5>(0, 5).into_owned(), Matrix5::identity());
        assert_eq!(
            lin.b_matrix.fixed_view::<5, 5>(0, 0).into_owned(),
            Matrix5::zeros()
        );

        let m = inertia_matrix(&eq(), &p);
        let expected = -m.try_inverse().unwrap() * gravity_jacobian(&eq(), &p);
        assert!((lin.stiffness_block() - expected).amax() < 1e-12 * expected.amax());
        assert!((m * lin.input_block() - input_map()).amax() < 1e-12);
    }

    #[test]
    fn upright_equilibrium_is_unstable() {
        let p = default_params();
        let lin = linearize(&eq(), &Joints::zeros(), &p).unwrap();
        let eig = lin.a_matrix.complex_eigenvalues();
        let mut real_positive = 0;
        for e in eig.iter() {
            // spectrum symmetric about the imaginary axis
            assert!(eig
                .iter()
                .any(|f| (f.re + e.re).abs() < 1e-8 && (f.im - e.im).abs() < 1e-8));
            if e.re > 1e-8 && e.im.abs() < 1e-8 {
                real_positive += 1;
            }
        }
        assert!(real_positive > 0);
    }

    #[test]
    fn nonlinear_response_converges_to_linear_at_second_order() {
        let p = default_params();
        let lin = linearize(&eq(), &Joints::zeros(), &p).unwrap();
        let dir = Joints::new(0.3, -0.2, 0.5, 0.1, -0.4);
        let error = |scale: f64| {
            let delta = dir * scale;
            let s = JointState::at_rest(eq() + delta).unwrap();
            let acc = forward_dynamics(&s, &Joints::zeros(), &p).unwrap();
            (acc - lin.stiffness_block() * delta).norm()
        };
        let mut prev = error(1e-2);
        for k in 1..5 {
            let next = error(1e-2 / f64::powi(2.0, k));
            assert!(prev / next >= 3.5, "ratio {}", prev / next);
            prev = next;
        }
    }

    #[test]
    fn single_joint_perturbation_matches_linear_prediction() {
        let p = default_params();
        let lin = linearize(&eq(), &Joints::zeros(), &p).unwrap();
        let delta = Joints::new(1e-4, 0., 0., 0., 0.);
        let s = JointState::at_rest(eq() + delta).unwrap();
        let acc = forward_dynamics(&s, &Joints::zeros(), &p).unwrap();
        let predicted = lin.stiffness_block() * delta;
        assert!((acc - predicted).amax() < 1e-3 * predicted.amax());
    }
}
