//! Trajectory-driven campaigns and their statistics.
//!
//! A campaign walks a UE along a trajectory and, at every step, for every
//! reflection order and repetition, runs the full chain: trace, synthesize,
//! correct port phases, estimate with each method, project into the
//! horizontal plane, and score against geometric truth.

mod campaign;
mod stats;
mod trajectory;

pub use campaign::{
    noise_seed, run_campaign, CampaignConfig, ImpairmentSpec, ScenarioSpec, SnrPolicy, SUPPORTED_ORDERS,
};
pub use stats::{aggregate, ecdf, percentile, snr_bin_label, BinStats, EvalReport, ECDF_MAX_POINTS};
pub use trajectory::{load_trajectory, parse_trajectory, Trajectory, TrajectoryStep, DEFAULT_DT_S};

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Method;

/// Wrap degrees into `[-180, 180)`.
pub fn wrap_deg(x: f64) -> f64 {
    let w = (x + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        -180.0
    } else {
        w
    }
}

/// One scored (or detached) estimate.
///
/// CSV column order follows the field order. Angle fields are empty on
/// detached rows. `error_deg` is the plane-corrected estimate against the
/// plane truth; `pre_error_deg` is the raw estimate against the same truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: u64,
    pub method: Method,
    pub order: usize,
    pub repetition: usize,
    pub snr_db: f64,
    pub ue_x_m: f64,
    pub ue_y_m: f64,
    pub ue_z_m: f64,
    pub distance_m: f64,
    pub theta_hat: Option<f64>,
    pub theta_xy_hat: Option<f64>,
    pub theta_true: Option<f64>,
    pub theta_xy_true: Option<f64>,
    pub error_deg: Option<f64>,
    pub pre_error_deg: Option<f64>,
    pub is_nlos: bool,
    pub detached: bool,
}

impl EvalRecord {
    pub(crate) fn detached(k: u64, order: usize, repetition: usize, snr_db: f64, ue: [f64; 3], distance_m: f64) -> Self {
        Self {
            step: k,
            method: Method::Music,
            order,
            repetition,
            snr_db,
            ue_x_m: ue[0],
            ue_y_m: ue[1],
            ue_z_m: ue[2],
            distance_m,
            theta_hat: None,
            theta_xy_hat: None,
            theta_true: None,
            theta_xy_true: None,
            error_deg: None,
            pre_error_deg: None,
            is_nlos: true,
            detached: true,
        }
    }
}

pub fn write_records(records: &[EvalRecord], out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records(input: impl Read) -> Result<Vec<EvalRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_deg(180.0), -180.0);
        assert_eq!(wrap_deg(-180.0), -180.0);
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-190.0), 170.0);
        assert_eq!(wrap_deg(12.5), 12.5);
    }

    #[test]
    fn records_csv_round_trip() {
        let mut scored = EvalRecord::detached(3, 5, 1, 27.25, [10.0, 2.0, 1.5], 12.0);
        scored.method = Method::Esprit;
        scored.detached = false;
        scored.is_nlos = false;
        scored.theta_hat = Some(30.1);
        scored.theta_xy_hat = Some(35.0);
        scored.theta_true = Some(30.0);
        scored.theta_xy_true = Some(34.9);
        scored.error_deg = Some(0.1);
        scored.pre_error_deg = Some(-4.8);
        let mut detached = EvalRecord::detached(4, 5, 0, f64::INFINITY, [11.0, 2.0, 1.5], 13.0);
        detached.method = Method::Esprit;
        let records = vec![scored, detached];

        let mut buf = Vec::new();
        write_records(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "step,method,order,repetition,snr_db,ue_x_m,ue_y_m,ue_z_m,distance_m,theta_hat,theta_xy_hat,\
             theta_true,theta_xy_true,error_deg,pre_error_deg,is_nlos,detached\n"
        ));
        assert!(text.lines().nth(2).unwrap().contains(",,,,,,"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn malformed_records_name_the_row() {
        let text = "step,method,order,repetition,snr_db,ue_x_m,ue_y_m,ue_z_m,distance_m,theta_hat,theta_xy_hat,\
                    theta_true,theta_xy_true,error_deg,pre_error_deg,is_nlos,detached\n\
                    0,beamscan,0,0,1,1,1,1,1,,,,,,,true,true\n";
        assert!(matches!(read_records(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
