//! Statics and envelope geometry of the two-link bucket lifting lever.
//!
//! Link naming follows the frame: `OE` is the horizontal frame link carrying
//! the handle, `CB` and `BD` are the two segments of the bucket link, `FE`
//! the slider gap and `GD` the ground clearance. `alpha` is the handle link
//! inclination, `beta` the angle between the connecting link and the bucket
//! link, `gamma` the bucket link angle from the vertical. Lengths are in cm,
//! angles in degrees, forces in N.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anthro::ConstraintBounds;

/// Default slack allowed on each constraint, in the constraint's own unit.
pub const DEFAULT_TOLERANCE: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("slot length OB is zero; the linkage cannot transmit force")]
    DegenerateLinkage,
    #[error("mechanical advantage is indeterminate at gamma = 0")]
    IndeterminateMa,
    #[error("bucket link has zero length (cb + bd = 0)")]
    DegenerateGeometry,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismGeometry {
    pub oe: f64,
    pub cb: f64,
    pub bd: f64,
    pub fe: f64,
    pub gd: f64,
    pub width_w: f64,
    pub alpha_max: f64,
    pub gamma_max: f64,
}

impl Default for MechanismGeometry {
    fn default() -> Self {
        Self {
            oe: 78.0,
            cb: 24.0,
            bd: 4.0,
            fe: 5.0,
            gd: 15.0,
            width_w: 50.0,
            alpha_max: 60.0,
            gamma_max: 90.0 + 30.0,
        }
    }
}

impl MechanismGeometry {
    /// Link lengths with every other field at its default.
    pub fn links(oe: f64, cb: f64, bd: f64) -> Self {
        Self {
            oe,
            cb,
            bd,
            ..Self::default()
        }
    }

    /// Tilt limit of the bucket link for a material with the given angle of repose.
    pub fn gamma_max_for_repose(angle_of_repose: f64) -> f64 {
        90.0 + angle_of_repose
    }

    pub fn validate(&self) -> Result<(), MechanismError> {
        for (name, v) in [
            ("oe", self.oe),
            ("cb", self.cb),
            ("bd", self.bd),
            ("fe", self.fe),
            ("gd", self.gd),
            ("width_w", self.width_w),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MechanismError::InvalidGeometry(format!(
                    "{name} must be a finite non-negative length, got {v}"
                )));
            }
        }
        if !(self.alpha_max > 0.0 && self.alpha_max < 90.0) {
            return Err(MechanismError::OutOfRange {
                name: "alpha_max",
                value: self.alpha_max,
                range: "(0, 90) degrees",
            });
        }
        if !(self.gamma_max > 0.0 && self.gamma_max <= 180.0) {
            return Err(MechanismError::OutOfRange {
                name: "gamma_max",
                value: self.gamma_max,
                range: "(0, 180] degrees",
            });
        }
        Ok(())
    }

    pub fn bucket_link(&self) -> f64 {
        self.cb + self.bd
    }
}

/// Length of the slotted link OB for a given `beta` (assumes OC = OB).
pub fn slot_length(cb: f64, beta: f64) -> Result<f64, MechanismError> {
    if !(0.0..90.0).contains(&beta) {
        return Err(MechanismError::OutOfRange {
            name: "beta",
            value: beta,
            range: "[0, 90) degrees",
        });
    }
    if cb < 0.0 {
        return Err(MechanismError::InvalidGeometry(format!("cb must be >= 0, got {cb}")));
    }
    Ok(2.0 * cb * beta.to_radians().cos())
}

/// Force passed from the handle link to the bucket link (moment balance about O).
pub fn transmitted_force(effort: f64, oe: f64, ob: f64) -> Result<f64, MechanismError> {
    if ob == 0.0 {
        return Err(MechanismError::DegenerateLinkage);
    }
    Ok(effort * oe / ob)
}

fn check_gamma(geom: &MechanismGeometry, gamma: f64) -> Result<(), MechanismError> {
    if gamma == 0.0 {
        return Err(MechanismError::IndeterminateMa);
    }
    if !(gamma > 0.0 && gamma <= geom.gamma_max) {
        return Err(MechanismError::OutOfRange {
            name: "gamma",
            value: gamma,
            range: "(0, gamma_max] degrees",
        });
    }
    if geom.bucket_link() <= 0.0 {
        return Err(MechanismError::DegenerateGeometry);
    }
    Ok(())
}

/// `oe / (2 (cb + bd) sin gamma)`.
pub fn mechanical_advantage(geom: &MechanismGeometry, gamma: f64) -> Result<f64, MechanismError> {
    check_gamma(geom, gamma)?;
    Ok(geom.oe / (2.0 * geom.bucket_link() * gamma.to_radians().sin()))
}

/// Load that can be held at `gamma` for a given handle effort.
pub fn load_capacity(
    geom: &MechanismGeometry,
    effort: f64,
    gamma: f64,
) -> Result<f64, MechanismError> {
    Ok(effort * mechanical_advantage(geom, gamma)?)
}

/// The same load computed link by link: slot length, transmitted force, then
/// the bucket-link moment balance. `beta` cancels, so this must agree with
/// [`load_capacity`].
pub fn load_from_moment_balance(
    geom: &MechanismGeometry,
    effort: f64,
    beta: f64,
    gamma: f64,
) -> Result<f64, MechanismError> {
    check_gamma(geom, gamma)?;
    let ob = slot_length(geom.cb, beta)?;
    let f = transmitted_force(effort, geom.oe, ob)?;
    let beta = beta.to_radians();
    Ok(f * beta.cos() * geom.cb / (geom.bucket_link() * gamma.to_radians().sin()))
}

fn check_alpha(geom: &MechanismGeometry, alpha: f64) -> Result<(), MechanismError> {
    if !(alpha >= 0.0 && alpha <= geom.alpha_max) {
        return Err(MechanismError::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "[0, alpha_max] degrees",
        });
    }
    Ok(())
}

/// Height of the lifting handle above the floor at handle angle `alpha`.
pub fn handle_height(geom: &MechanismGeometry, alpha: f64) -> Result<f64, MechanismError> {
    check_alpha(geom, alpha)?;
    let a = alpha.to_radians();
    Ok(geom.oe * a.tan() + geom.cb * (1.0 + (a / 2.0).sin()) + geom.bd)
}

/// Overall equipment length `oe + cb cos(alpha / 2)`.
pub fn equipment_length(geom: &MechanismGeometry, alpha: f64) -> f64 {
    geom.oe + geom.cb * (alpha.to_radians() / 2.0).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContainerCapacity {
    /// cm³, clamped at zero.
    pub volume: f64,
    /// Set when the length or height factor is not positive.
    pub degenerate: bool,
}

/// Container volume `(length - fe) * w * (cb + bd - gd)`.
pub fn container_capacity(
    geom: &MechanismGeometry,
    alpha: f64,
) -> Result<ContainerCapacity, MechanismError> {
    check_alpha(geom, alpha)?;
    let length = equipment_length(geom, alpha) - geom.fe;
    let height = geom.bucket_link() - geom.gd;
    let degenerate = length <= 0.0 || height <= 0.0 || geom.width_w <= 0.0;
    let volume = if degenerate {
        0.0
    } else {
        length * geom.width_w * height
    };
    Ok(ContainerCapacity { volume, degenerate })
}

/// Diameter of the turning circle swept by the equipment plus the worker behind it.
pub fn turning_width(equipment_length: f64, width_w: f64, worker_depth: f64) -> f64 {
    2.0 * width_w.hypot(equipment_length + worker_depth)
}

/// Signed margins of the three design constraints; positive means satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintSlacks {
    pub handle_height_slack: f64,
    pub volume_slack: f64,
    pub turning_slack: f64,
    pub feasible: bool,
}

pub fn check_feasibility(
    geom: &MechanismGeometry,
    bounds: &ConstraintBounds,
) -> Result<ConstraintSlacks, MechanismError> {
    check_feasibility_with_tolerance(geom, bounds, DEFAULT_TOLERANCE)
}

/// Evaluates the handle-height, capacity and turning constraints at
/// `alpha = geom.alpha_max`.
pub fn check_feasibility_with_tolerance(
    geom: &MechanismGeometry,
    bounds: &ConstraintBounds,
    tolerance: f64,
) -> Result<ConstraintSlacks, MechanismError> {
    geom.validate()?;
    let alpha = geom.alpha_max;
    let handle_height_slack = bounds.max_handle_height - handle_height(geom, alpha)?;
    let volume_slack = container_capacity(geom, alpha)?.volume - bounds.min_container_volume;
    let turning = turning_width(
        equipment_length(geom, alpha),
        geom.width_w,
        bounds.worker_depth,
    );
    let turning_slack = bounds.max_turning_width - turning;
    let feasible = [handle_height_slack, volume_slack, turning_slack]
        .iter()
        .all(|s| *s >= -tolerance);
    Ok(ConstraintSlacks {
        handle_height_slack,
        volume_slack,
        turning_slack,
        feasible,
    })
}
