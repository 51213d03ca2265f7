//! Urban-micro street-canyon propagation: pathloss and LOS probability.

use crate::error::{Error, Result};

/// Shadowing standard deviation under line of sight, dB.
pub const SHADOWING_SIGMA_LOS_DB: f64 = 4.0;
/// Shadowing standard deviation without line of sight, dB.
pub const SHADOWING_SIGMA_NLOS_DB: f64 = 7.82;

const UT_HEIGHT_REF: f64 = 1.5;

/// Deterministic part of the UMi street-canyon pathloss in dB.
///
/// The NLOS branch is floored by the LOS value. Shadowing is added by the
/// caller from a per-link draw, see [`shadowing_sigma_db`].
pub fn pathloss_db(
    distance_2d: f64,
    distance_3d: f64,
    carrier_hz: f64,
    ut_height: f64,
    los: bool,
) -> Result<f64> {
    if !(distance_2d > 0.0) || !(distance_3d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pathloss distances must be positive (2-D {distance_2d} m, 3-D {distance_3d} m)"
        )));
    }
    if distance_3d < distance_2d {
        return Err(Error::InvalidParameter(format!(
            "3-D distance {distance_3d} m shorter than 2-D distance {distance_2d} m"
        )));
    }
    let f_ghz = carrier_hz / 1e9;
    let pl_los = 32.4 + 21.0 * distance_3d.log10() + 20.0 * f_ghz.log10();
    if los {
        return Ok(pl_los);
    }
    let pl_nlos = 35.3 * distance_3d.log10() + 22.4 + 21.3 * f_ghz.log10()
        - 0.3 * (ut_height - UT_HEIGHT_REF);
    Ok(pl_los.max(pl_nlos))
}

pub fn shadowing_sigma_db(los: bool) -> f64 {
    if los {
        SHADOWING_SIGMA_LOS_DB
    } else {
        SHADOWING_SIGMA_NLOS_DB
    }
}

/// Probability of line of sight at 2-D distance `d2d` meters.
pub fn los_probability(d2d: f64) -> f64 {
    let d = d2d.max(0.0);
    let e = (-d / 36.0).exp();
    (18.0 / d).min(1.0) * (1.0 - e) + e
}
