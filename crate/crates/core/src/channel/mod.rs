//! Multipath channel synthesis at the receive array.

mod cir;
mod scenario;
mod synth;
mod trace;

pub use cir::{cir_file_name, export_cir, import_cir, read_cir, write_cir, CirMetadata};
pub use scenario::{Aabb, Scenario, Wall, DEFAULT_GAMMA, PRESET_NAMES};
pub use synth::{synthesize_snapshot, ImpairmentModel, LinkTruth, SnapshotMatrix};
pub use trace::trace_paths;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One propagation path between UE and gNB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub delay_s: f64,
    /// Free-space amplitude times the product of reflection coefficients.
    pub gain: Complex64,
    /// Arrival angle relative to the array axis, in the plane holding the axis and the arrival direction.
    pub azimuth_deg: f64,
    /// gNB height minus UE height for the link this path belongs to.
    pub elevation_offset_m: f64,
    pub order: usize,
    pub is_los: bool,
}
