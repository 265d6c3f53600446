//! Computed-torque tracking.
//!
//! The control law `U = D⁻¹[M(θ)(θ̈_d − K_v ė − K_p e) + H + G]`, with
//! `e = θ − θ_d`, cancels the modelled dynamics so that each joint error obeys
//! `ë + K_v ė + K_p e = 0`.

use thiserror::Error;

use crate::dynamics::{input_map_inverse, Backend};
use crate::gait::DesiredState;
use crate::kinematics::{JointState, Joints};
use crate::params::RobotParams;

/// Joint torque vector (N·m).
pub type TorqueVector = Joints;

#[derive(Debug, Error, PartialEq)]
pub enum GainsError {
    #[error("gain {name}[{index}] must be finite and > 0, got {value}")]
    NotPositive {
        name: &'static str,
        index: usize,
        value: f64,
    },
}

/// Diagonal proportional and derivative gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    kp: Joints,
    kv: Joints,
}

impl ControllerGains {
    pub fn new(kp: Joints, kv: Joints) -> Result<Self, GainsError> {
        for (name, gains) in [("kp", &kp), ("kv", &kv)] {
            for (index, &value) in gains.iter().enumerate() {
                if !(value.is_finite() && value > 0.0) {
                    return Err(GainsError::NotPositive { name, index, value });
                }
            }
        }
        Ok(Self { kp, kv })
    }

    /// Same gains on every joint.
    pub fn uniform(kp: f64, kv: f64) -> Result<Self, GainsError> {
        Self::new(Joints::repeat(kp), Joints::repeat(kv))
    }

    pub fn kp(&self) -> &Joints {
        &self.kp
    }

    pub fn kv(&self) -> &Joints {
        &self.kv
    }
}

impl Default for ControllerGains {
    /// Critically damped at 10 rad/s on every joint.
    fn default() -> Self {
        Self {
            kp: Joints::repeat(100.0),
            kv: Joints::repeat(20.0),
        }
    }
}

/// `θ̈_d − K_v(θ̇ − θ̇_d) − K_p(θ − θ_d)`
pub fn commanded_acceleration(
    state: &JointState,
    desired: &DesiredState,
    gains: &ControllerGains,
) -> Joints {
    let e = state.theta - desired.theta;
    let ed = state.theta_dot - desired.theta_dot;
    desired.theta_ddot - gains.kv.component_mul(&ed) - gains.kp.component_mul(&e)
}

pub fn computed_torque(
    state: &JointState,
    desired: &DesiredState,
    gains: &ControllerGains,
    params: &RobotParams,
    backend: Backend,
) -> TorqueVector {
    let terms = backend.terms(state, params);
    let a = commanded_acceleration(state, desired, gains);
    input_map_inverse() * (terms.inertia * a + terms.coriolis + terms.gravity_vec)
}

/// Post-processing applied to the computed torque before it reaches the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueLimits {
    /// Symmetric per-joint clamp `|Uᵢ| ≤ limit` (N·m).
    pub saturation: Option<f64>,
    /// Force the stance-ankle torque to zero.
    pub zero_stance_ankle: bool,
}

impl TorqueLimits {
    /// Returns the applied torque and whether the clamp was active.
    pub fn apply(&self, mut u: TorqueVector) -> (TorqueVector, bool) {
        if self.zero_stance_ankle {
            u[0] = 0.0;
        }
        let mut clamped = false;
        if let Some(limit) = self.saturation {
            for v in u.iter_mut() {
                if v.abs() > limit {
                    *v = v.clamp(-limit, limit);
                    clamped = true;
                }
            }
        }
        (u, clamped)
    }
}

/// Exact solution of `ë + kv·ė + kp·e = 0`, joint by joint.
pub fn error_reference(e0: &Joints, edot0: &Joints, gains: &ControllerGains, t: f64) -> Joints {
    Joints::from_fn(|i, _| second_order_response(e0[i], edot0[i], gains.kp[i], gains.kv[i], t))
}

fn second_order_response(e0: f64, v0: f64, kp: f64, kv: f64, t: f64) -> f64 {
    let sigma = 0.5 * kv;
    let disc = sigma * sigma - kp;
    let decay = (-sigma * t).exp();
    if disc.abs() <= 1e-12 * kp {
        (e0 + (v0 + sigma * e0) * t) * decay
    } else if disc < 0.0 {
        let wd = (-disc).sqrt();
        decay * (e0 * (wd * t).cos() + (v0 + sigma * e0) / wd * (wd * t).sin())
    } else {
        let root = disc.sqrt();
        let (l1, l2) = (-sigma + root, -sigma - root);
        let a = (v0 - l2 * e0) / (l1 - l2);
        let b = e0 - a;
        a * (l1 * t).exp() + b * (l2 * t).exp()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use rand::Rng;

    use super::*;
    use crate::dynamics::forward_dynamics_with;
    use crate::params::default_params;
    use crate::sampling::{random_state, rng};

    fn rest(theta: Joints) -> DesiredState {
        DesiredState {
            theta,
            theta_dot: Joints::zeros(),
            theta_ddot: Joints::zeros(),
        }
    }

    #[test]
    fn gains_must_be_positive() {
        assert!(ControllerGains::uniform(100.0, 20.0).is_ok());
        assert_eq!(
            ControllerGains::new(Joints::new(1., 1., 0., 1., 1.), Joints::repeat(1.0)),
            Err(GainsError::NotPositive {
                name: "kp",
                index: 2,
                value: 0.0
            })
        );
        assert!(ControllerGains::uniform(1.0, -2.0).is_err());
        assert!(ControllerGains::uniform(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn equilibrium_needs_no_torque() {
        let p = default_params();
        let eq = Joints::repeat(FRAC_PI_2);
        let s = JointState::at_rest(eq).unwrap();
        let u = computed_torque(
            &s,
            &rest(eq),
            &ControllerGains::default(),
            &p,
            Backend::Printed,
        );
        assert!(u.amax() < 1e-12);
    }

    #[test]
    fn on_trajectory_is_pure_feedforward() {
        let p = default_params();
        let mut r = rng(1);
        let s = random_state(&mut r);
        let desired = DesiredState {
            theta: s.theta,
            theta_dot: s.theta_dot,
            theta_ddot: Joints::from_fn(|_, _| r.random_range(-3.0..3.0)),
        };
        let terms = Backend::Printed.terms(&s, &p);
        let expected = input_map_inverse()
            * (terms.inertia * desired.theta_ddot + terms.coriolis + terms.gravity_vec);
        let u = computed_torque(
            &s,
            &desired,
            &ControllerGains::default(),
            &p,
            Backend::Printed,
        );
        assert!((u - expected).amax() < 1e-12 * expected.amax().max(1.0));
    }

    #[test]
    fn feedback_linearisation_is_exact() {
        let p = default_params();
        let gains = ControllerGains::new(
            Joints::new(100., 80., 120., 90., 110.),
            Joints::new(20., 18., 25., 19., 21.),
        )
        .unwrap();
        let mut r = rng(99);
        for backend in [Backend::Printed, Backend::Oracle] {
            for _ in 0..100 {
                let s = random_state(&mut r);
                let d = random_state(&mut r);
                let desired = DesiredState {
                    theta: d.theta,
                    theta_dot: d.theta_dot,
                    theta_ddot: Joints::from_fn(|_, _| r.random_range(-5.0..5.0)),
                };
                let u = computed_torque(&s, &desired, &gains, &p, backend);
                let acc = forward_dynamics_with(backend, &s, &u, &p).unwrap();
                let target = commanded_acceleration(&s, &desired, &gains);
                assert!((acc - target).amax() <= 1e-10 * target.amax().max(1.0));
            }
        }
    }

    #[test]
    fn limits() {
        let u = Joints::new(5.0, -50.0, 3.0, 20.0, -1.0);
        let (same, hit) = TorqueLimits::default().apply(u);
        assert_eq!((same, hit), (u, false));
        let (clamped, hit) = TorqueLimits {
            saturation: Some(10.0),
            zero_stance_ankle: true,
        }
        .apply(u);
        assert!(hit);
        assert_eq!(clamped, Joints::new(0.0, -10.0, 3.0, 10.0, -1.0));
    }

    #[test]
    fn error_reference_cases() {
        let g = ControllerGains::default();
        assert_eq!(
            error_reference(&Joints::zeros(), &Joints::zeros(), &g, 0.7),
            Joints::zeros()
        );
        let crit = ControllerGains::uniform(1.0, 2.0).unwrap();
        for t in [0.0, 0.5, 1.0, 3.0] {
            let e = error_reference(&Joints::repeat(1.0), &Joints::repeat(-1.0), &crit, t);
            assert!((e[0] - (-t).exp()).abs() < 1e-15);
        }
        let e0 = Joints::repeat(0.3);
        let v0 = Joints::repeat(-0.2);
        for gains in [
            ControllerGains::uniform(100.0, 20.0).unwrap(),
            ControllerGains::uniform(100.0, 5.0).unwrap(),
            ControllerGains::uniform(100.0, 40.0).unwrap(),
        ] {
            let at0 = error_reference(&e0, &v0, &gains, 0.0);
            assert!((at0 - e0).amax() < 1e-14);
            let h = 2e-5;
            for i in 1..20 {
                let t = 0.05 * i as f64;
                let e = error_reference(&e0, &v0, &gains, t);
                let ep = error_reference(&e0, &v0, &gains, t + h);
                let em = error_reference(&e0, &v0, &gains, t - h);
                let vel = (ep - em) / (2.0 * h);
                let acc = (ep - 2.0 * e + em) / (h * h);
                let residual = acc + gains.kv().component_mul(&vel) + gains.kp().component_mul(&e);
                assert!(residual.amax() < 1e-6, "{residual}");
            }
            let vel0 = (error_reference(&e0, &v0, &gains, h)
                - error_reference(&e0, &v0, &gains, -h))
                / (2.0 * h);
            assert!((vel0 - v0).amax() < 1e-6);
        }
    }
}
