//! Direct and differential kinematics of the five-link chain.
//!
//! [`forward_kinematics`] and [`jacobian`] reproduce the closed-form swing-ankle
//! map, whose y-row adds the swing-leg sines. Drawing and the first-principles
//! oracle instead use the *rendering convention* of [`joint_positions`]: the
//! swing-leg segments are subtracted from the hip in both coordinates, so the
//! all-`π/2` posture is an upright biped with both feet on the ground.

use nalgebra::{Matrix2x5, Matrix5, Point2, Vector2, Vector5};
use thiserror::Error;

use crate::params::{RobotParams, NUM_LINKS};

/// Joint-space 5-vector (rad, rad/s or rad/s² depending on context).
pub type Joints = Vector5<f64>;

#[derive(Debug, Error, PartialEq)]
#[error("joint state contains a non-finite entry: theta={theta:?}, theta_dot={theta_dot:?}")]
pub struct NonFiniteState {
    pub theta: [f64; NUM_LINKS],
    pub theta_dot: [f64; NUM_LINKS],
}

/// Joint angles and velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub theta: Joints,
    pub theta_dot: Joints,
}

impl JointState {
    pub fn new(theta: Joints, theta_dot: Joints) -> Result<Self, NonFiniteState> {
        if theta.iter().chain(theta_dot.iter()).all(|v| v.is_finite()) {
            Ok(Self { theta, theta_dot })
        } else {
            Err(NonFiniteState {
                theta: theta.into(),
                theta_dot: theta_dot.into(),
            })
        }
    }

    pub fn at_rest(theta: Joints) -> Result<Self, NonFiniteState> {
        Self::new(theta, Joints::zeros())
    }
}

/// Planar Cartesian position (m) or velocity (m/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPose {
    pub x: f64,
    pub y: f64,
}

fn lengths(params: &RobotParams) -> [f64; NUM_LINKS] {
    params.links.map(|l| l.length)
}

/// Swing-ankle position relative to the stance ankle.
pub fn forward_kinematics(theta: &Joints, params: &RobotParams) -> CartesianPose {
    let l = lengths(params);
    let (s, c) = (theta.map(f64::sin), theta.map(f64::cos));
    CartesianPose {
        x: l[0] * c[0] + l[1] * c[1] - l[3] * c[3] - l[4] * c[4],
        y: l[0] * s[0] + l[1] * s[1] + l[3] * s[3] + l[4] * s[4],
    }
}

/// Analytical Jacobian of [`forward_kinematics`]. The pelvis column is zero.
pub fn jacobian(theta: &Joints, params: &RobotParams) -> Matrix2x5<f64> {
    let l = lengths(params);
    let (s, c) = (theta.map(f64::sin), theta.map(f64::cos));
    Matrix2x5::new(
        -l[0] * s[0],
        -l[1] * s[1],
        0.0,
        l[3] * s[3],
        l[4] * s[4],
        l[0] * c[0],
        l[1] * c[1],
        0.0,
        l[3] * c[3],
        l[4] * c[4],
    )
}

pub fn cartesian_velocity(state: &JointState, params: &RobotParams) -> CartesianPose {
    let v = jacobian(&state.theta, params) * state.theta_dot;
    CartesianPose { x: v[0], y: v[1] }
}

/// Sign with which each link's unit vector `(cos θᵢ, sin θᵢ)` enters the
/// rendering chain: stance and pelvis links add, swing links subtract.
pub const SEGMENT_SIGN: [f64; NUM_LINKS] = [1.0, 1.0, 1.0, -1.0, -1.0];

/// Joint points under the rendering convention:
/// `[stance ankle, stance knee, hip, pelvis top, swing knee, swing ankle]`.
pub fn joint_positions(theta: &Joints, params: &RobotParams) -> [Point2<f64>; 6] {
    let l = lengths(params);
    let seg = |i: usize| SEGMENT_SIGN[i] * l[i] * Vector2::new(theta[i].cos(), theta[i].sin());
    let ankle = Point2::origin();
    let knee = ankle + seg(0);
    let hip = knee + seg(1);
    let pelvis_top = hip + seg(2);
    let swing_knee = hip + seg(3);
    let swing_ankle = swing_knee + seg(4);
    [ankle, knee, hip, pelvis_top, swing_knee, swing_ankle]
}

/// Coefficients expressing each link COM as a combination of link unit
/// vectors under the rendering convention: `c_i = Σ_j S[i,j]·(cos θⱼ, sin θⱼ)`.
///
/// Stance links place the COM `k` from the ankle side; swing links are
/// mirrored, so their COM sits `k` from the foot side, i.e. `l − k` below the
/// proximal joint.
pub fn com_chain_coefficients(params: &RobotParams) -> Matrix5<f64> {
    let l = lengths(params);
    let k = params.links.map(|link| link.com_distance());
    let mut s = Matrix5::zeros();
    // stance shank, stance thigh, pelvis
    s[(0, 0)] = k[0];
    s[(1, 0)] = l[0];
    s[(1, 1)] = k[1];
    s[(2, 0)] = l[0];
    s[(2, 1)] = l[1];
    s[(2, 2)] = k[2];
    // swing thigh and shank hang from the hip
    s[(3, 0)] = l[0];
    s[(3, 1)] = l[1];
    s[(3, 3)] = -(l[3] - k[3]);
    s[(4, 0)] = l[0];
    s[(4, 1)] = l[1];
    s[(4, 3)] = -l[3];
    s[(4, 4)] = -(l[4] - k[4]);
    s
}

/// Link COM positions under the rendering convention.
pub fn com_positions(theta: &Joints, params: &RobotParams) -> [Point2<f64>; NUM_LINKS] {
    let s = com_chain_coefficients(params);
    let (c, sn) = (theta.map(f64::cos), theta.map(f64::sin));
    let xs = s * c;
    let ys = s * sn;
    std::array::from_fn(|i| Point2::new(xs[i], ys[i]))
}
