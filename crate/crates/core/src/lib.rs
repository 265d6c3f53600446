//! Planar five-link biped toolkit.
//!
//! Single-support dynamics, a reduced constant-coefficient gait model solved
//! in closed form, computed-torque tracking in closed-loop simulation, and
//! an independent first-principles oracle used to validate all of it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod gait;
pub mod io;
pub mod kinematics;
pub mod linearization;
pub mod params;
pub mod sampling;
pub mod simulation;
pub mod validation;

pub use dynamics::{Backend, DynamicsError, DynamicsTerms};
pub use kinematics::{CartesianPose, JointState, Joints};
pub use params::{default_params, load_params, LinkParams, ParamsError, RobotParams};
