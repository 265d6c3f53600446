//! Physical parameters of the five-link planar biped.
//!
//! Links are ordered stance shank, stance thigh, pelvis/trunk, swing thigh,
//! swing shank. The centre-of-mass column of the reference parameter table is
//! a first moment `m·k` (kg·m), so the COM distance along each link is
//! recovered as `first_moment / mass`.

use std::fmt::Write as _;

use thiserror::Error;

/// Number of links (and actuated joints) in the chain.
pub const NUM_LINKS: usize = 5;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

/// Mass properties of a single rigid link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// kg·m, mass times COM distance from the link's ground-side joint
    pub first_moment: f64,
    /// kg·m², about the link COM
    pub inertia: f64,
}

impl LinkParams {
    pub const fn new(mass: f64, length: f64, first_moment: f64, inertia: f64) -> Self {
        Self {
            mass,
            length,
            first_moment,
            inertia,
        }
    }

    /// Distance from the ground-side joint to the link COM.
    pub fn com_distance(&self) -> f64 {
        self.first_moment / self.mass
    }

    /// `k²·m`, the parallel-axis contribution of the COM offset.
    pub(crate) fn com_second_moment(&self) -> f64 {
        self.first_moment * self.first_moment / self.mass
    }

    fn validate(&self, prefix: &str) -> Result<(), ParamsError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamsError::Invalid {
                    field: format!("{prefix}.{name}"),
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        };
        positive("mass", self.mass)?;
        positive("length", self.length)?;
        positive("first_moment", self.first_moment)?;
        positive("inertia", self.inertia)?;
        let k = self.com_distance();
        if k >= self.length {
            return Err(ParamsError::Invalid {
                field: format!("{prefix}.first_moment"),
                reason: format!(
                    "COM distance first_moment/mass = {k} m does not lie on the link (length {} m)",
                    self.length
                ),
            });
        }
        Ok(())
    }
}

/// Full parameter set: five links plus gravitational acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    pub links: [LinkParams; NUM_LINKS],
    /// m/s²
    pub gravity: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        default_params()
    }
}

/// Reference parameter set (stance and swing legs are identical).
pub fn default_params() -> RobotParams {
    let shank = LinkParams::new(3.255, 0.426, 0.164, 0.184);
    let thigh = LinkParams::new(7.000, 0.424, 0.366, 0.184);
    let pelvis = LinkParams::new(24.850, 0.299, 1.530, 0.206);
    RobotParams {
        links: [shank, thigh, pelvis, thigh, shank],
        gravity: STANDARD_GRAVITY,
    }
}

/// `first_moment / mass` for one link.
pub fn com_distance(link: &LinkParams) -> f64 {
    link.com_distance()
}

impl RobotParams {
    /// Checks every link invariant and `gravity > 0`.
    pub fn validate(&self) -> Result<(), ParamsError> {
        for (i, link) in self.links.iter().enumerate() {
            link.validate(&format!("link{}", i + 1))?;
        }
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return Err(ParamsError::Invalid {
                field: "gravity".into(),
                reason: format!("must be finite and > 0, got {}", self.gravity),
            });
        }
        Ok(())
    }

    /// Checks that the stance and swing legs carry identical link parameters.
    pub fn validate_symmetry(&self) -> Result<(), ParamsError> {
        for (a, b) in [(0, 4), (1, 3)] {
            if self.links[a] != self.links[b] {
                return Err(ParamsError::Invalid {
                    field: format!("link{}", b + 1),
                    reason: format!("differs from its mirror link{}", a + 1),
                });
            }
        }
        Ok(())
    }

    /// Copy with gravity switched off, for passive-dynamics studies.
    ///
    /// The result intentionally violates the `gravity > 0` invariant and is
    /// not accepted by [`load_params`].
    pub fn without_gravity(&self) -> Self {
        Self {
            links: self.links,
            gravity: 0.0,
        }
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.links[i].mass
    }

    pub fn length(&self, i: usize) -> f64 {
        self.links[i].length
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    /// Serialises into the config format read by [`load_params`]. Values use
    /// the shortest round-trip representation, so loading is bit-exact.
    pub fn to_config_text(&self) -> String {
        let mut out = String::from("# five-link biped parameters\n");
        for (i, link) in self.links.iter().enumerate() {
            let n = i + 1;
            let _ = writeln!(out, "link{n}.mass = {:?}", link.mass);
            let _ = writeln!(out, "link{n}.length = {:?}", link.length);
            let _ = writeln!(out, "link{n}.first_moment = {:?}", link.first_moment);
            let _ = writeln!(out, "link{n}.inertia = {:?}", link.inertia);
        }
        let _ = writeln!(out, "gravity = {:?}", self.gravity);
        out
    }
}

/// Parses a `key = value` parameter document. Omitted keys keep their
/// default values; unknown keys are rejected.
pub fn load_params(config_text: &str) -> Result<RobotParams, ParamsError> {
    let mut params = default_params();
    for (idx, raw) in config_text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ParamsError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let parsed: f64 = value.parse().map_err(|_| ParamsError::Parse {
            line,
            message: format!("`{key}`: cannot parse `{value}` as a number"),
        })?;
        let slot = field_slot(&mut params, key).ok_or_else(|| ParamsError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        *slot = parsed;
    }
    params.validate()?;
    Ok(params)
}

fn field_slot<'a>(params: &'a mut RobotParams, key: &str) -> Option<&'a mut f64> {
    if key == "gravity" {
        return Some(&mut params.gravity);
    }
    let rest = key.strip_prefix("link")?;
    let (index, field) = rest.split_once('.')?;
    let index: usize = index.parse().ok()?;
    if !(1..=NUM_LINKS).contains(&index) {
        return None;
    }
    let link = &mut params.links[index - 1];
    match field {
        "mass" => Some(&mut link.mass),
        "length" => Some(&mut link.length),
        "first_moment" => Some(&mut link.first_moment),
        "inertia" => Some(&mut link.inertia),
        _ => None,
    }
}
