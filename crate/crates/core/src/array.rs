//! Uniform linear array geometry and steering vectors.
//!
//! Element `m` of the steering vector toward `θ` is `e^{j m μ}` with the
//! spatial frequency `μ = -(2π/λ)·Δd·sin θ`. Angles are degrees at the API
//! boundary; `θ` is positive toward the positive array axis, which is the
//! boresight direction rotated by +90° in the horizontal plane.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier used throughout the default scenarios (Hz).
pub const DEFAULT_CARRIER_HZ: f64 = 3.95e9;

/// Slack allowed on arcsine arguments before they are treated as out of range.
pub const ARCSIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlaConfig {
    pub num_elements: usize,
    pub spacing_m: f64,
    pub carrier_hz: f64,
    /// Array reference point (element 0), meters.
    pub origin: [f64; 3],
    /// Direction of the array normal in the XY plane, degrees from +X.
    pub boresight_azimuth_deg: f64,
}

impl Default for UlaConfig {
    fn default() -> Self {
        let wavelength = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ;
        Self {
            num_elements: 4,
            spacing_m: wavelength / 2.0,
            carrier_hz: DEFAULT_CARRIER_HZ,
            origin: [0.0, 0.0, 0.0],
            boresight_azimuth_deg: 0.0,
        }
    }
}

impl UlaConfig {
    /// Half-wavelength array of `num_elements` at `carrier_hz`.
    pub fn half_wavelength(num_elements: usize, carrier_hz: f64) -> Self {
        Self {
            num_elements,
            spacing_m: SPEED_OF_LIGHT / carrier_hz / 2.0,
            carrier_hz,
            ..Self::default()
        }
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_boresight(mut self, azimuth_deg: f64) -> Self {
        self.boresight_azimuth_deg = azimuth_deg;
        self
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn height_m(&self) -> f64 {
        self.origin[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements < 2 {
            return Err(Error::config("num_elements", "must be at least 2"));
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(Error::config("spacing_m", "must be positive"));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(Error::config("carrier_hz", "must be positive"));
        }
        Ok(())
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.origin)
    }

    /// Unit vector along the array normal.
    pub fn boresight(&self) -> Vector3<f64> {
        let az = self.boresight_azimuth_deg.to_radians();
        Vector3::new(az.cos(), az.sin(), 0.0)
    }

    /// Unit vector along the positive array axis.
    pub fn axis(&self) -> Vector3<f64> {
        let az = self.boresight_azimuth_deg.to_radians();
        Vector3::new(-az.sin(), az.cos(), 0.0)
    }
}

/// Per-element phase signature of a plane wave.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub elements: Vec<Complex64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.elements
    }
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if (-90.0..=90.0).contains(&theta_deg) {
        Ok(())
    } else {
        Err(Error::Domain(theta_deg))
    }
}

/// Spatial frequency `μ` in radians per element for arrival angle `theta_deg`.
pub fn spatial_frequency(cfg: &UlaConfig, theta_deg: f64) -> Result<f64> {
    check_angle(theta_deg)?;
    Ok(-2.0 * PI / cfg.wavelength_m() * cfg.spacing_m * theta_deg.to_radians().sin())
}

pub fn steering_vector(cfg: &UlaConfig, theta_deg: f64) -> Result<SteeringVector> {
    let mu = spatial_frequency(cfg, theta_deg)?;
    Ok(SteeringVector {
        elements: steering_from_mu(cfg.num_elements, mu),
    })
}

pub(crate) fn steering_from_mu(num_elements: usize, mu: f64) -> Vec<Complex64> {
    (0..num_elements)
        .map(|m| Complex64::from_polar(1.0, m as f64 * mu))
        .collect()
}

/// Recover the arrival angle from the phase increment `mu` observed between
/// two subarrays displaced by `k` elements.
///
/// Arguments within [`ARCSIN_SLACK`] of ±1 are clamped; anything further out
/// indicates aliasing and is reported as [`Error::OutOfRange`].
pub fn angle_from_spatial_frequency(cfg: &UlaConfig, mu: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::config("shift_k", "must be at least 1"));
    }
    let argument = -cfg.wavelength_m() * mu / (2.0 * PI * k as f64 * cfg.spacing_m);
    if !argument.is_finite() || argument.abs() > 1.0 + ARCSIN_SLACK {
        return Err(Error::OutOfRange { argument });
    }
    Ok(argument.clamp(-1.0, 1.0).asin().to_degrees())
}
