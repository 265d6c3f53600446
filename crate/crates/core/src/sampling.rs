//! Seeded random sampling of the single-support working domain
//! `θ ∈ [π/4, 3π/4]⁵`, `θ̇ ∈ [−2, 2]⁵ rad/s`.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kinematics::{JointState, Joints};

pub const THETA_MIN: f64 = FRAC_PI_4;
pub const THETA_MAX: f64 = 3.0 * PI / 4.0;
pub const THETA_DOT_MAX: f64 = 2.0;

/// Deterministic generator for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_theta<R: Rng + ?Sized>(rng: &mut R) -> Joints {
    Joints::from_fn(|_, _| rng.random_range(THETA_MIN..THETA_MAX))
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R) -> JointState {
    let theta = random_theta(rng);
    let theta_dot = Joints::from_fn(|_, _| rng.random_range(-THETA_DOT_MAX..THETA_DOT_MAX));
    JointState { theta, theta_dot }
}
