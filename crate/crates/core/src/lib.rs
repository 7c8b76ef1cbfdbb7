//! Simulation and estimation core for uplink angle-of-arrival benchmarking
//! with a small uniform linear array.
//!
//! The pipeline runs bottom-up: [`channel`] traces specular paths through a
//! scenario and turns them into impaired, noisy array snapshots of the
//! [`srs`] pilot; [`calibration`] removes per-port phase offsets;
//! [`estimators`] produce spatial angles; [`geometry`] maps them into the
//! horizontal plane; [`evaluation`] drives whole trajectories and summarises
//! the errors.

pub mod array;
pub mod calibration;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod geometry;
pub mod srs;

pub use array::{steering_vector, SteeringVector, UlaConfig};
pub use calibration::{apply_correction, estimate_offsets, CalibrationTable};
pub use channel::{synthesize_snapshot, trace_paths, ImpairmentModel, PathComponent, Scenario, SnapshotMatrix};
pub use error::{Error, Result};
pub use estimators::{AoaEstimate, CovarianceMatrix, Method, SubspaceDecomposition};
pub use geometry::{cylindrical_correction, ground_truth_angles, GeometryContext};
pub use srs::{srs_sequence, SrsConfig};
