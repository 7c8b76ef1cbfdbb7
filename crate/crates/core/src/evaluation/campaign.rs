use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{wrap_deg, EvalRecord, Trajectory};
use crate::calibration::{apply_correction, CalibrationTable};
use crate::channel::{synthesize_snapshot, trace_paths, ImpairmentModel, LinkTruth, Scenario};
use crate::error::{Error, Result};
use crate::estimators::{
    esprit_estimate, hermitian_eig, music_estimate, music_spectrum, sample_covariance, Method, DEFAULT_GRID_STEP_DEG,
    DEFAULT_SHIFT,
};
use crate::geometry::{cylindrical_correction, ground_truth_angles, GeometryContext};
use crate::srs::{srs_sequence, SrsConfig};

pub const SUPPORTED_ORDERS: [usize; 3] = [0, 3, 5];

/// Salt for the ranging-error stream so it is independent of the noise stream.
const RANGING_SEED_SALT: u64 = 0x5EED_0000_0000_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Preset(String),
    Inline(Box<Scenario>),
}

impl ScenarioSpec {
    pub fn resolve(&self) -> Result<Scenario> {
        let s = match self {
            ScenarioSpec::Preset(name) => Scenario::preset(name)?,
            ScenarioSpec::Inline(s) => (**s).clone(),
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SnrPolicy {
    Fixed { snr_db: f64 },
    /// `snr_ref_db − 20·log10(d / d_ref_m)` with `d` the 3-D gNB–UE distance.
    Distance { snr_ref_db: f64, d_ref_m: f64 },
    Noiseless,
}

impl Default for SnrPolicy {
    fn default() -> Self {
        SnrPolicy::Distance { snr_ref_db: 35.0, d_ref_m: 10.0 }
    }
}

impl SnrPolicy {
    pub fn snr_db(&self, distance_m: f64) -> f64 {
        match *self {
            SnrPolicy::Fixed { snr_db } => snr_db,
            SnrPolicy::Distance { snr_ref_db, d_ref_m } => snr_ref_db - 20.0 * (distance_m / d_ref_m).log10(),
            SnrPolicy::Noiseless => f64::INFINITY,
        }
    }
}

/// Hardware phase offsets of the receive chain during the campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ImpairmentSpec {
    #[default]
    None,
    Random { seed: u64 },
    Fixed { offsets_rad: Vec<f64> },
}

impl ImpairmentSpec {
    pub fn model(&self, num_ports: usize) -> Result<ImpairmentModel> {
        match self {
            ImpairmentSpec::None => Ok(ImpairmentModel::none(num_ports)),
            ImpairmentSpec::Random { seed } => Ok(ImpairmentModel::random(num_ports, *seed)),
            ImpairmentSpec::Fixed { offsets_rad } => {
                if offsets_rad.len() != num_ports {
                    return Err(Error::config(
                        "impairments.offsets_rad",
                        format!("{} offsets for {num_ports} ports", offsets_rad.len()),
                    ));
                }
                ImpairmentModel::from_offsets(offsets_rad.clone())
            }
        }
    }
}

fn default_orders() -> Vec<usize> {
    SUPPORTED_ORDERS.to_vec()
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_repetitions() -> usize {
    1
}
fn default_grid_step() -> f64 {
    DEFAULT_GRID_STEP_DEG
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub scenario: ScenarioSpec,
    #[serde(default = "default_orders")]
    pub reflection_orders: Vec<usize>,
    #[serde(default)]
    pub snr_policy: SnrPolicy,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub base_seed: u64,
    #[serde(default = "default_repetitions")]
    pub num_repetitions: usize,
    #[serde(default)]
    pub impairments: ImpairmentSpec,
    #[serde(default = "default_grid_step")]
    pub grid_step_deg: f64,
    /// Standard deviation of the distance fed to the plane correction.
    #[serde(default)]
    pub ranging_sigma_m: f64,
    #[serde(default)]
    pub srs: SrsConfig,
}

impl CampaignConfig {
    pub fn new(scenario: ScenarioSpec, base_seed: u64) -> Self {
        Self {
            scenario,
            reflection_orders: default_orders(),
            snr_policy: SnrPolicy::default(),
            methods: default_methods(),
            base_seed,
            num_repetitions: 1,
            impairments: ImpairmentSpec::None,
            grid_step_deg: DEFAULT_GRID_STEP_DEG,
            ranging_sigma_m: 0.0,
            srs: SrsConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("campaign", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reflection_orders.is_empty() {
            return Err(Error::config("reflection_orders", "must not be empty"));
        }
        if let Some(bad) = self.reflection_orders.iter().find(|o| !SUPPORTED_ORDERS.contains(o)) {
            return Err(Error::config(
                "reflection_orders",
                format!("order {bad} is not one of {SUPPORTED_ORDERS:?}"),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "must not be empty"));
        }
        if self.num_repetitions == 0 {
            return Err(Error::config("num_repetitions", "must be at least 1"));
        }
        if !(self.grid_step_deg > 0.0 && self.grid_step_deg <= 180.0) {
            return Err(Error::config("grid_step_deg", "must be in (0, 180]"));
        }
        if !(self.ranging_sigma_m >= 0.0 && self.ranging_sigma_m.is_finite()) {
            return Err(Error::config("ranging_sigma_m", "must be a non-negative number"));
        }
        match self.snr_policy {
            SnrPolicy::Fixed { snr_db } if snr_db.is_nan() => {
                return Err(Error::config("snr_policy.snr_db", "must be a number"))
            }
            SnrPolicy::Distance { snr_ref_db, d_ref_m } if !(d_ref_m > 0.0) || !snr_ref_db.is_finite() => {
                return Err(Error::config("snr_policy", "distance policy needs finite snr_ref_db and d_ref_m > 0"))
            }
            _ => {}
        }
        self.srs.validate()?;
        self.scenario.resolve()?;
        Ok(())
    }
}

/// Noise seed for one (step, repetition). Independent of the reflection
/// order, so every order sees the same noise realisation at a given step.
pub fn noise_seed(base_seed: u64, k: u64, repetition: usize) -> u64 {
    base_seed ^ k ^ ((repetition as u64) << 32)
}

struct Prepared {
    scenario: Scenario,
    srs: Vec<num_complex::Complex64>,
    impairment: ImpairmentModel,
}

/// Runs every step × order × repetition × method and returns the records
/// sorted in that order. `calib = None` skips phase correction, which is the
/// negative-control configuration.
pub fn run_campaign(
    cfg: &CampaignConfig,
    traj: &Trajectory,
    calib: Option<&CalibrationTable>,
) -> Result<Vec<EvalRecord>> {
    cfg.validate()?;
    let scenario = cfg.scenario.resolve()?;
    let m = scenario.ula.num_elements;
    if let Some(table) = calib {
        if table.num_ports() != m {
            return Err(Error::Shape(format!(
                "calibration table has {} ports, array has {m}",
                table.num_ports()
            )));
        }
    }
    for step in &traj.steps {
        if !scenario.bounds.contains(step.position) {
            return Err(Error::OutOfBounds(step.position));
        }
    }
    let prepared = Prepared {
        srs: srs_sequence(&cfg.srs)?,
        impairment: cfg.impairments.model(m)?,
        scenario,
    };
    let mut orders = cfg.reflection_orders.clone();
    orders.sort_unstable();
    orders.dedup();
    let mut methods = cfg.methods.clone();
    methods.sort_unstable();
    methods.dedup();

    let per_step: Vec<Vec<EvalRecord>> = traj
        .steps
        .par_iter()
        .map(|step| run_step(cfg, &prepared, &orders, &methods, calib, step.k, step.position))
        .collect::<Result<_>>()?;
    Ok(per_step.into_iter().flatten().collect())
}

fn run_step(
    cfg: &CampaignConfig,
    prep: &Prepared,
    orders: &[usize],
    methods: &[Method],
    calib: Option<&CalibrationTable>,
    k: u64,
    ue: [f64; 3],
) -> Result<Vec<EvalRecord>> {
    let ula = &prep.scenario.ula;
    let truth = ground_truth_angles(ula.origin, ula.boresight_azimuth_deg, ue)?;
    let snr_db = cfg.snr_policy.snr_db(truth.distance_m);
    let mut out = Vec::with_capacity(orders.len() * cfg.num_repetitions * methods.len());

    for &order in orders {
        let scenario = prep.scenario.clone().with_order(order);
        let paths = trace_paths(&scenario, ue)?;
        let is_nlos = !paths.iter().any(|p| p.is_los);
        for rep in 0..cfg.num_repetitions {
            let base = EvalRecord::detached(k, order, rep, snr_db, ue, truth.distance_m);
            if paths.is_empty() {
                out.extend(methods.iter().map(|&method| EvalRecord { method, ..base.clone() }));
                continue;
            }
            let seed = noise_seed(cfg.base_seed, k, rep);
            let snapshot = synthesize_snapshot(&paths, ula, &prep.srs, snr_db, &prep.impairment, seed)?
                .with_truth(LinkTruth::from_geometry(truth, is_nlos));
            let snapshot = match calib {
                Some(table) => apply_correction(&snapshot, table)?,
                None => snapshot,
            };
            let decomp = hermitian_eig(&sample_covariance(&snapshot)?);

            let distance = if cfg.ranging_sigma_m > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ RANGING_SEED_SALT);
                let noisy = truth.distance_m + Normal::new(0.0, cfg.ranging_sigma_m).unwrap().sample(&mut rng);
                // keep the correction defined
                noisy.max(truth.delta_z_m.abs() * (1.0 + 1e-9) + f64::MIN_POSITIVE)
            } else {
                truth.distance_m
            };
            let ctx = GeometryContext::new(distance, truth.delta_z_m);

            for &method in methods {
                let estimate = match method {
                    Method::Music => music_estimate(&music_spectrum(&decomp, ula, cfg.grid_step_deg)?)?,
                    Method::Esprit => esprit_estimate(&decomp, ula, DEFAULT_SHIFT)?,
                };
                let corrected = cylindrical_correction(estimate.theta_deg, &ctx)?;
                out.push(EvalRecord {
                    method,
                    theta_hat: Some(estimate.theta_deg),
                    theta_xy_hat: Some(corrected.theta_xy_deg),
                    theta_true: Some(truth.theta_raw_deg),
                    theta_xy_true: Some(truth.theta_xy_deg),
                    error_deg: Some(wrap_deg(corrected.theta_xy_deg - truth.theta_xy_deg)),
                    pre_error_deg: Some(wrap_deg(estimate.theta_deg - truth.theta_xy_deg)),
                    is_nlos,
                    detached: false,
                    ..base.clone()
                });
            }
        }
    }
    Ok(out)
}
