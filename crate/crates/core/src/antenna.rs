//! Uniform planar array (UPA) radiation model.
//!
//! The array lies in the y-z plane with its boresight along +x. Element
//! `(p, q)` sits at `(0, q * d_y, p * d_z)` wavelengths, `p` indexing the
//! `n_z` vertical rows and `q` the `n_y` horizontal columns. Beams are
//! steered with conjugate phase weights referenced to element `(0, 0)`.
//!
//! The element pattern is the parabolic sector model commonly used for
//! mmWave system simulation (65 degree half-power beamwidth, 30 dB
//! front-to-back ratio, 8 dBi peak gain).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Peak element gain in dBi.
pub const ELEMENT_MAX_GAIN_DB: f64 = 8.0;
/// Half-power beamwidth in both cuts, degrees.
pub const ELEMENT_HPBW_DEG: f64 = 65.0;
/// Front-to-back ratio (horizontal cut).
pub const ELEMENT_FRONT_TO_BACK_DB: f64 = 30.0;
/// Side-lobe attenuation limit (vertical cut).
pub const ELEMENT_SLA_V_DB: f64 = 30.0;

pub const DEFAULT_TOTAL_ELEMENTS: usize = 64;
pub const DEFAULT_CARRIER_HZ: f64 = 28e9;

/// All positive divisors of `n`, ascending.
pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Antenna array layout: the optimization variable.
///
/// `n_z` is always `n_total / n_y`; it is stored for convenience and
/// checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_y: usize,
    pub n_z: usize,
    /// Horizontal spacing, wavelengths.
    pub d_y: f64,
    /// Vertical spacing, wavelengths.
    pub d_z: f64,
    pub n_total: usize,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl ArrayConfig {
    /// Builds a configuration with the default 64 elements at 28 GHz.
    pub fn new(n_y: usize, d_y: f64, d_z: f64) -> Result<Self> {
        Self::with_total(n_y, DEFAULT_TOTAL_ELEMENTS, d_y, d_z, DEFAULT_CARRIER_HZ)
    }

    pub fn with_total(
        n_y: usize,
        n_total: usize,
        d_y: f64,
        d_z: f64,
        carrier_hz: f64,
    ) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::InvalidConfig("n_total must be at least 1".into()));
        }
        if n_y == 0 || !n_total.is_multiple_of(n_y) {
            return Err(Error::InvalidConfig(format!(
                "n_y = {n_y} is not a divisor of n_total = {n_total} (allowed: {:?})",
                divisors(n_total)
            )));
        }
        if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        let cfg = ArrayConfig {
            n_y,
            n_z: n_total / n_y,
            d_y,
            d_z,
            n_total,
            wavelength: SPEED_OF_LIGHT / carrier_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_y == 0 || self.n_z == 0 || self.n_y * self.n_z != self.n_total {
            return Err(Error::InvalidConfig(format!(
                "n_y * n_z = {} * {} must equal n_total = {}",
                self.n_y, self.n_z, self.n_total
            )));
        }
        for (name, d) in [("d_y", self.d_y), ("d_z", self.d_z)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a positive number of wavelengths, got {d}"
                )));
            }
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidConfig("wavelength must be positive".into()));
        }
        Ok(())
    }

    pub fn n_elements(&self) -> usize {
        self.n_y * self.n_z
    }

    /// Feature vector used by the emulators: `(n_y, n_z, d_y, d_z)`.
    pub fn features(&self) -> [f64; 4] {
        [self.n_y as f64, self.n_z as f64, self.d_y, self.d_z]
    }
}

impl fmt::Display for ArrayConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} (n_z x n_y), d_y = {:.4} lambda, d_z = {:.4} lambda",
            self.n_z, self.n_y, self.d_y, self.d_z
        )
    }
}

/// A direction in the array's local frame, in degrees.
///
/// `theta` is the zenith angle (90 is the horizon), `phi` the azimuth
/// measured from boresight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction { theta: 90.0, phi: 0.0 };

    /// Normalizes into `theta in [0, 180]`, `phi in [-180, 180]`.
    pub fn new(theta: f64, phi: f64) -> Self {
        let mut theta = theta.rem_euclid(360.0);
        let mut phi = phi;
        if theta > 180.0 {
            theta = 360.0 - theta;
            phi += 180.0;
        }
        Direction {
            theta,
            phi: wrap_degrees(phi),
        }
    }

    /// Direction of the vector `(x, y, z)`; the zero vector maps to boresight.
    pub fn from_vector(x: f64, y: f64, z: f64) -> Self {
        let r = (x * x + y * y + z * z).sqrt();
        if r == 0.0 {
            return Self::BORESIGHT;
        }
        let theta = (z / r).clamp(-1.0, 1.0).acos().to_degrees();
        let phi = y.atan2(x).to_degrees();
        Direction::new(theta, phi)
    }

    /// Rotates the azimuth, e.g. to express a global direction in the
    /// frame of an array whose boresight points at `azimuth_deg`.
    pub fn relative_to(self, azimuth_deg: f64) -> Self {
        Direction::new(self.theta, self.phi - azimuth_deg)
    }

    fn direction_cosines(self) -> (f64, f64) {
        let t = self.theta.to_radians();
        let p = self.phi.to_radians();
        // (y, z) components of the unit vector
        (t.sin() * p.sin(), t.cos())
    }
}

fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 && a > 0.0 {
        180.0
    } else {
        w
    }
}

/// Single-element gain in dBi. Ranges over `[-22, 8]`.
pub fn element_gain_db(dir: Direction) -> f64 {
    let dir = Direction::new(dir.theta, dir.phi);
    let a_v = -(12.0 * ((dir.theta - 90.0) / ELEMENT_HPBW_DEG).powi(2)).min(ELEMENT_SLA_V_DB);
    let a_h = -(12.0 * (dir.phi / ELEMENT_HPBW_DEG).powi(2)).min(ELEMENT_FRONT_TO_BACK_DB);
    ELEMENT_MAX_GAIN_DB - (-(a_v + a_h)).min(ELEMENT_FRONT_TO_BACK_DB)
}

/// |sum_k exp(j 2 pi k d psi)|^2 for k in 0..n.
fn linear_factor_power(n: usize, spacing: f64, psi: f64) -> f64 {
    let step = 2.0 * PI * spacing * psi;
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..n {
        let (s, c) = (k as f64 * step).sin_cos();
        re += c;
        im += s;
    }
    re * re + im * im
}

/// Un-normalized array factor power `|AF|^2` observed at `obs` with the
/// beam steered at `steer`. Peaks at `(n_y * n_z)^2`.
///
/// The planar weights separate into a vertical and a horizontal linear
/// array, so the power is the product of the two linear factors.
pub fn array_factor_power(config: &ArrayConfig, steer: Direction, obs: Direction) -> f64 {
    let (sy, sz) = steer.direction_cosines();
    let (oy, oz) = obs.direction_cosines();
    let vertical = linear_factor_power(config.n_z, config.d_z, oz - sz);
    let horizontal = linear_factor_power(config.n_y, config.d_y, oy - sy);
    vertical * horizontal
}

/// Element pattern plus normalized array gain, in dB.
///
/// The array factor is divided by the element count so that the total
/// radiated power does not depend on the layout.
pub fn total_gain_db(config: &ArrayConfig, steer: Direction, obs: Direction) -> f64 {
    let af = array_factor_power(config, steer, obs) / config.n_elements() as f64;
    element_gain_db(obs) + 10.0 * af.max(f64::MIN_POSITIVE).log10()
}
