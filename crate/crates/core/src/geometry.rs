//! Ground-truth angles and the cylindrical (plane) correction.
//!
//! A ULA only measures the cone angle between the arrival direction and its
//! axis. When the UE sits below the array that cone angle is smaller than the
//! top-view azimuth; [`cylindrical_correction`] maps one onto the other given
//! the range `d` and the height offset `Δz`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::array::ARCSIN_SLACK;
use crate::error::{Error, Result};

/// UE antenna height used by every scenario.
pub const UE_HEIGHT_M: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryContext {
    /// 3-D distance between array and UE.
    pub distance_m: f64,
    /// Array height minus UE height.
    pub delta_z_m: f64,
}

impl GeometryContext {
    pub fn new(distance_m: f64, delta_z_m: f64) -> Self {
        Self {
            distance_m,
            delta_z_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > self.delta_z_m.abs()) {
            return Err(Error::DegenerateGeometry(format!(
                "distance {} m must exceed |Δz| = {} m",
                self.distance_m,
                self.delta_z_m.abs()
            )));
        }
        Ok(())
    }
}

/// Result of the plane correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corrected {
    pub theta_xy_deg: f64,
    /// Set when the arcsine argument exceeded 1 by more than the slack and was clamped.
    pub range_warning: Option<f64>,
}

/// `θ_XY = asin(d·sin θ / √(d² − Δz²))`, clamped to ±90°.
pub fn cylindrical_correction(theta_deg: f64, ctx: &GeometryContext) -> Result<Corrected> {
    ctx.validate()?;
    if ctx.delta_z_m == 0.0 {
        // same height: the cone angle already lies in the horizontal plane
        return Ok(Corrected {
            theta_xy_deg: theta_deg,
            range_warning: None,
        });
    }
    let d = ctx.distance_m;
    let horizontal = (d * d - ctx.delta_z_m * ctx.delta_z_m).sqrt();
    let argument = d * theta_deg.to_radians().sin() / horizontal;
    let range_warning = (argument.abs() > 1.0 + ARCSIN_SLACK).then_some(argument);
    Ok(Corrected {
        theta_xy_deg: argument.clamp(-1.0, 1.0).asin().to_degrees(),
        range_warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Cone angle measured by the array, in the plane containing the array axis and the UE.
    pub theta_raw_deg: f64,
    /// Top-view azimuth relative to boresight.
    pub theta_xy_deg: f64,
    pub distance_m: f64,
    pub delta_z_m: f64,
}

impl GroundTruth {
    pub fn context(&self) -> GeometryContext {
        GeometryContext::new(self.distance_m, self.delta_z_m)
    }
}

/// Exact angles for a UE seen from an array at `gnb` facing `boresight_azimuth_deg`.
///
/// UEs behind the array plane fold onto the front half-plane, as they do for
/// any linear array.
pub fn ground_truth_angles(
    gnb: [f64; 3],
    boresight_azimuth_deg: f64,
    ue: [f64; 3],
) -> Result<GroundTruth> {
    let v = Vector3::from(ue) - Vector3::from(gnb);
    let d = v.norm();
    if d == 0.0 {
        return Err(Error::DegenerateGeometry("UE coincides with gNB".into()));
    }
    let horizontal = v.xy().norm();
    if horizontal <= 1e-12 * d {
        return Err(Error::DegenerateGeometry(
            "UE directly above or below the array".into(),
        ));
    }
    let az = boresight_azimuth_deg.to_radians();
    let axis = Vector3::new(-az.sin(), az.cos(), 0.0);
    let along = v.dot(&axis);
    Ok(GroundTruth {
        theta_raw_deg: (along / d).clamp(-1.0, 1.0).asin().to_degrees(),
        theta_xy_deg: (along / horizontal).clamp(-1.0, 1.0).asin().to_degrees(),
        distance_m: d,
        delta_z_m: gnb[2] - ue[2],
    })
}
