//! Over-the-air per-port phase calibration from a boresight reference UE.
//!
//! A UE on boresight produces identical phases on every element, so whatever
//! phase difference port `m` shows against port 0 is hardware offset. Each
//! frame contributes `arg Σ_n x_m[n]·x_0*[n]`; the table stores the circular
//! mean of those per-frame estimates and is applied as `x_m · e^{-jΔφ̄_m}`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::UlaConfig;
use crate::channel::{synthesize_snapshot, trace_paths, ImpairmentModel, Scenario, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::geometry::UE_HEIGHT_M;

pub const DEFAULT_CALIBRATION_FRAMES: usize = 10;

/// Frames whose true raw angle is further than this from 0° are rejected.
const BORESIGHT_TOLERANCE_DEG: f64 = 1e-6;

/// Salt mixed into per-frame noise seeds so they never collide with campaign steps.
const FRAME_SEED_SALT: u64 = 0xCA1B_0000_0000_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub offsets_rad: Vec<f64>,
    #[serde(rename = "frames")]
    pub num_frames_averaged: usize,
    /// Circular standard deviation of the instantaneous per-sample phase
    /// differences around the table value, worst port.
    pub residual_spread_rad: f64,
}

/// Wrap into `[-π, π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

impl CalibrationTable {
    pub fn zeros(num_ports: usize) -> Self {
        Self {
            offsets_rad: vec![0.0; num_ports],
            num_frames_averaged: 0,
            residual_spread_rad: 0.0,
        }
    }

    pub fn num_ports(&self) -> usize {
        self.offsets_rad.len()
    }

    /// Table whose correction undoes this one.
    pub fn negated(&self) -> Self {
        Self {
            offsets_rad: self.offsets_rad.iter().map(|&o| if o == 0.0 { 0.0 } else { wrap_phase(-o) }).collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        match table.offsets_rad.first() {
            Some(&0.0) => Ok(table),
            _ => Err(Error::config("offsets_rad", "must start with the zero reference port")),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn validate_frame(index: usize, frame: &SnapshotMatrix) -> Result<()> {
    if frame.path_count > 1 {
        return Err(Error::CalibrationUsage(format!(
            "frame {index} carries {} propagation paths; calibration needs a LOS-only reference",
            frame.path_count
        )));
    }
    if let Some(truth) = &frame.truth {
        if truth.is_nlos || truth.theta_raw_deg.abs() > BORESIGHT_TOLERANCE_DEG {
            return Err(Error::CalibrationUsage(format!(
                "frame {index} reference UE is at {:.4}° (nlos = {}), expected boresight",
                truth.theta_raw_deg, truth.is_nlos
            )));
        }
    }
    Ok(())
}

/// Per-port offsets from boresight reference frames.
///
/// Frames built by [`synthesize_snapshot`] are checked against their ground
/// truth; externally captured frames (no truth attached) are trusted.
pub fn estimate_offsets(frames: &[SnapshotMatrix], srs: &[Complex64]) -> Result<CalibrationTable> {
    let first = frames.first().ok_or(Error::Empty("no calibration frames"))?;
    let m = first.num_elements();
    for (i, f) in frames.iter().enumerate() {
        if f.num_elements() != m {
            return Err(Error::Shape(format!(
                "frame {i} has {} ports, frame 0 has {m}",
                f.num_elements()
            )));
        }
        if f.num_samples() != srs.len() {
            return Err(Error::Shape(format!(
                "frame {i} has {} samples, pilot has {}",
                f.num_samples(),
                srs.len()
            )));
        }
        validate_frame(i, f)?;
    }

    // per-port sum of per-frame unit phasors
    let mut frame_phasors = vec![Complex64::new(0.0, 0.0); m];
    for (i, f) in frames.iter().enumerate() {
        for port in 0..m {
            if f.samples.row(port).iter().all(|x| x.norm_sqr() == 0.0) {
                return Err(Error::CalibrationFailed {
                    port,
                    reason: format!("no energy in frame {i}"),
                });
            }
        }
        let reference = f.samples.row(0);
        for (port, acc) in frame_phasors.iter_mut().enumerate().skip(1) {
            let corr: Complex64 = f
                .samples
                .row(port)
                .iter()
                .zip(reference.iter())
                .map(|(x, r)| x * r.conj())
                .sum();
            if corr.norm() == 0.0 {
                return Err(Error::CalibrationFailed {
                    port,
                    reason: format!("zero correlation with the reference port in frame {i}"),
                });
            }
            *acc += corr / corr.norm();
        }
    }

    let mut offsets = vec![0.0; m];
    for port in 1..m {
        offsets[port] = wrap_phase(frame_phasors[port].arg());
    }

    // spread of instantaneous differences around the final offsets
    let mut spread: f64 = 0.0;
    for port in 1..m {
        let mut cos_sum = 0.0;
        let mut count = 0usize;
        for f in frames {
            let reference = f.samples.row(0);
            for (x, r) in f.samples.row(port).iter().zip(reference.iter()) {
                let z = x * r.conj();
                if z.norm_sqr() > 0.0 {
                    cos_sum += (z.arg() - offsets[port]).cos();
                    count += 1;
                }
            }
        }
        let resultant = (cos_sum / count.max(1) as f64).clamp(f64::MIN_POSITIVE, 1.0);
        // abs only clears the sign of -0.0 when every phasor agrees exactly
        spread = spread.max((-2.0 * resultant.ln()).abs().sqrt());
    }

    Ok(CalibrationTable {
        offsets_rad: offsets,
        num_frames_averaged: frames.len(),
        residual_spread_rad: spread,
    })
}

/// Rotates each row by the negative of its table offset.
pub fn apply_correction(snapshot: &SnapshotMatrix, table: &CalibrationTable) -> Result<SnapshotMatrix> {
    if table.num_ports() != snapshot.num_elements() {
        return Err(Error::Shape(format!(
            "calibration table has {} ports, snapshot has {}",
            table.num_ports(),
            snapshot.num_elements()
        )));
    }
    let mut out = snapshot.clone();
    for (port, &offset) in table.offsets_rad.iter().enumerate() {
        if offset == 0.0 {
            continue;
        }
        let rot = Complex64::from_polar(1.0, -offset);
        out.samples.row_mut(port).iter_mut().for_each(|x| *x *= rot);
    }
    Ok(out)
}

/// LOS-only frames from a reference UE on boresight at `distance_m`, at the
/// standard UE height.
pub fn reference_frames(
    ula: &UlaConfig,
    srs: &[Complex64],
    num_frames: usize,
    snr_db: f64,
    impairment: &ImpairmentModel,
    seed: u64,
    distance_m: f64,
) -> Result<Vec<SnapshotMatrix>> {
    let gnb = ula.position();
    let mut ue = gnb + ula.boresight() * distance_m;
    ue.z = UE_HEIGHT_M;
    let paths = trace_paths(&Scenario::free_space(ula.clone()), ue.into())?;
    (0..num_frames)
        .map(|i| synthesize_snapshot(&paths, ula, srs, snr_db, impairment, seed ^ FRAME_SEED_SALT ^ i as u64))
        .collect()
}
