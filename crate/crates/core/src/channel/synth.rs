use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::PathComponent;
use crate::array::{spatial_frequency, UlaConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::geometry::{cylindrical_correction, GeometryContext, GroundTruth};

/// Per-port receive phase offsets for one boot session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentModel {
    pub port_phase_offsets: Vec<f64>,
    pub seed: u64,
}

impl ImpairmentModel {
    pub fn none(num_ports: usize) -> Self {
        Self {
            port_phase_offsets: vec![0.0; num_ports],
            seed: 0,
        }
    }

    /// Offsets drawn uniformly in `[-π, π)` for ports 1.., port 0 is the reference.
    pub fn random(num_ports: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut offsets = vec![0.0; num_ports];
        for o in offsets.iter_mut().skip(1) {
            *o = rng.random_range(-PI..PI);
        }
        Self {
            port_phase_offsets: offsets,
            seed,
        }
    }

    pub fn from_offsets(offsets: Vec<f64>) -> Result<Self> {
        match offsets.first() {
            Some(&0.0) => Ok(Self {
                port_phase_offsets: offsets,
                seed: 0,
            }),
            _ => Err(Error::config(
                "port_phase_offsets",
                "must be non-empty with a zero reference entry",
            )),
        }
    }
}

/// Ground truth for one synthesized link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTruth {
    pub theta_raw_deg: f64,
    pub theta_xy_deg: f64,
    pub distance_m: f64,
    pub delta_z_m: f64,
    pub is_nlos: bool,
}

impl LinkTruth {
    pub fn from_geometry(truth: GroundTruth, is_nlos: bool) -> Self {
        Self {
            theta_raw_deg: truth.theta_raw_deg,
            theta_xy_deg: truth.theta_xy_deg,
            distance_m: truth.distance_m,
            delta_z_m: truth.delta_z_m,
            is_nlos,
        }
    }

    pub fn context(&self) -> GeometryContext {
        GeometryContext::new(self.distance_m, self.delta_z_m)
    }
}

/// Array samples for one pilot occasion: rows are antennas, columns are pilot samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub samples: DMatrix<Complex64>,
    pub snr_db: f64,
    /// Filled from the LOS path when there is one; NLOS callers attach it with [`with_truth`](Self::with_truth).
    pub truth: Option<LinkTruth>,
    pub path_count: usize,
}

impl SnapshotMatrix {
    pub fn from_samples(samples: DMatrix<Complex64>, snr_db: f64) -> Self {
        Self {
            samples,
            snr_db,
            truth: None,
            path_count: 0,
        }
    }

    pub fn with_truth(mut self, truth: LinkTruth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn num_elements(&self) -> usize {
        self.samples.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.ncols()
    }
}

/// Narrowband superposition of `paths` at the array followed by AWGN.
///
/// Row `m` is `e^{jΔφ_m} Σ_p g_p e^{jmμ(θ_p)} e^{-j2πf_c τ_p} · s[n]`. Noise
/// variance is chosen so the mean per-antenna signal power over the noise
/// power equals `snr_db`; `f64::INFINITY` disables noise. `seed` drives the
/// noise stream only.
pub fn synthesize_snapshot(
    paths: &[PathComponent],
    ula: &UlaConfig,
    srs: &[Complex64],
    snr_db: f64,
    impairment: &ImpairmentModel,
    seed: u64,
) -> Result<SnapshotMatrix> {
    if paths.is_empty() {
        return Err(Error::LinkFailure);
    }
    ula.validate()?;
    let m = ula.num_elements;
    if impairment.port_phase_offsets.len() != m {
        return Err(Error::Shape(format!(
            "impairment has {} ports, array has {m}",
            impairment.port_phase_offsets.len()
        )));
    }
    if snr_db.is_nan() {
        return Err(Error::config("snr_db", "must not be NaN"));
    }
    if srs.is_empty() {
        return Err(Error::Empty("pilot sequence is empty"));
    }

    let mut channel = vec![Complex64::new(0.0, 0.0); m];
    for p in paths {
        let mu = spatial_frequency(ula, p.azimuth_deg)?;
        let cycles = (ula.carrier_hz * p.delay_s).rem_euclid(1.0);
        let coeff = p.gain * Complex64::from_polar(1.0, -2.0 * PI * cycles);
        for (el, h) in channel.iter_mut().enumerate() {
            *h += coeff * Complex64::from_polar(1.0, el as f64 * mu);
        }
    }
    for (h, &phi) in channel.iter_mut().zip(&impairment.port_phase_offsets) {
        *h *= Complex64::from_polar(1.0, phi);
    }

    let n = srs.len();
    let mut samples = DMatrix::from_fn(m, n, |row, col| channel[row] * srs[col]);

    if snr_db.is_finite() {
        let power = samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / (m * n) as f64;
        let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // column-major order keeps the draw sequence tied to (sample, antenna)
        for x in samples.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *x += Complex64::new(re * sigma, im * sigma);
        }
    }

    let truth = paths.iter().find(|p| p.is_los).and_then(|los| {
        let distance_m = los.delay_s * SPEED_OF_LIGHT;
        let ctx = GeometryContext::new(distance_m, los.elevation_offset_m);
        cylindrical_correction(los.azimuth_deg, &ctx)
            .ok()
            .map(|c| LinkTruth {
                theta_raw_deg: los.azimuth_deg,
                theta_xy_deg: c.theta_xy_deg,
                distance_m,
                delta_z_m: los.elevation_offset_m,
                is_nlos: false,
            })
    });

    Ok(SnapshotMatrix {
        samples,
        snr_db,
        truth,
        path_count: paths.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use crate::channel::{trace_paths, Scenario};
    use crate::srs::{srs_sequence, SrsConfig};

    fn los_at(theta: f64) -> (UlaConfig, Vec<PathComponent>) {
        let ula = UlaConfig::default();
        let r = 25.0;
        let ue = [r * theta.to_radians().cos(), r * theta.to_radians().sin(), 0.0];
        let paths = trace_paths(&Scenario::free_space(ula.clone()), ue).unwrap();
        (ula, paths)
    }

    fn rank(cov: &DMatrix<Complex64>) -> usize {
        let svd = cov.clone().svd(false, false);
        let top = svd.singular_values.max();
        svd.singular_values.iter().filter(|&&s| s > 1e-10 * top).count()
    }

    #[test]
    fn noiseless_los_rows_follow_steering() {
        let (ula, paths) = los_at(30.0);
        let srs = srs_sequence(&SrsConfig::default()).unwrap();
        let snap = synthesize_snapshot(&paths, &ula, &srs, f64::INFINITY, &ImpairmentModel::none(4), 1).unwrap();
        assert_eq!(snap.samples.shape(), (4, 960));
        let a = steering_vector(&ula, paths[0].azimuth_deg).unwrap();
        let phase = Complex64::from_polar(1.0, -2.0 * PI * (ula.carrier_hz * paths[0].delay_s).rem_euclid(1.0));
        for m in 0..4 {
            for n in [0, 17, 959] {
                let want = paths[0].gain * a.elements[m] * phase * srs[n];
                assert!((snap.samples[(m, n)] - want).norm() < 1e-15);
            }
        }
        let cov = &snap.samples * snap.samples.adjoint();
        assert_eq!(rank(&cov), 1);
        let truth = snap.truth.unwrap();
        assert!((truth.theta_raw_deg - 30.0).abs() < 1e-9 && !truth.is_nlos);
    }

    #[test]
    fn impairment_rotates_rows() {
        let (ula, paths) = los_at(10.0);
        let srs = srs_sequence(&SrsConfig::default()).unwrap();
        let offsets = vec![0.0, PI / 2.0, PI, 1.5 * PI];
        let imp = ImpairmentModel::from_offsets(offsets.clone()).unwrap();
        let clean = synthesize_snapshot(&paths, &ula, &srs, f64::INFINITY, &ImpairmentModel::none(4), 0).unwrap();
        let rotated = synthesize_snapshot(&paths, &ula, &srs, f64::INFINITY, &imp, 0).unwrap();
        for m in 0..4 {
            let r = Complex64::from_polar(1.0, offsets[m]);
            for n in 0..960 {
                assert!((rotated.samples[(m, n)] - clean.samples[(m, n)] * r).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn seeded_noise_is_bit_identical() {
        let (ula, paths) = los_at(-20.0);
        let srs = srs_sequence(&SrsConfig::default()).unwrap();
        let imp = ImpairmentModel::random(4, 99);
        let a = synthesize_snapshot(&paths, &ula, &srs, 10.0, &imp, 1234).unwrap();
        let b = synthesize_snapshot(&paths, &ula, &srs, 10.0, &imp, 1234).unwrap();
        let c = synthesize_snapshot(&paths, &ula, &srs, 10.0, &imp, 1235).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn measured_snr_matches_request() {
        let (ula, paths) = los_at(5.0);
        let srs = srs_sequence(&SrsConfig::default()).unwrap();
        let imp = ImpairmentModel::none(4);
        let clean = synthesize_snapshot(&paths, &ula, &srs, f64::INFINITY, &imp, 0).unwrap();
        let signal_power = clean.samples.iter().map(|x| x.norm_sqr()).sum::<f64>();
        for (seed, snr) in [(1u64, 0.0), (2, 10.0), (3, 20.0), (4, 30.0), (5, -5.0)] {
            let noisy = synthesize_snapshot(&paths, &ula, &srs, snr, &imp, seed).unwrap();
            let noise_power = (&noisy.samples - &clean.samples).iter().map(|x| x.norm_sqr()).sum::<f64>();
            let measured = 10.0 * (signal_power / noise_power).log10();
            assert!((measured - snr).abs() < 0.5, "requested {snr}, measured {measured}");
        }
    }

    #[test]
    fn errors() {
        let ula = UlaConfig::default();
        let srs = srs_sequence(&SrsConfig::default()).unwrap();
        assert!(matches!(
            synthesize_snapshot(&[], &ula, &srs, 10.0, &ImpairmentModel::none(4), 0),
            Err(Error::LinkFailure)
        ));
        let (_, paths) = los_at(0.0);
        assert!(matches!(
            synthesize_snapshot(&paths, &ula, &srs, 10.0, &ImpairmentModel::none(3), 0),
            Err(Error::Shape(_))
        ));
        assert!(ImpairmentModel::from_offsets(vec![0.1, 0.0]).is_err());
    }

    #[test]
    fn random_impairment_reference_port_is_zero() {
        let imp = ImpairmentModel::random(4, 5);
        assert_eq!(imp.port_phase_offsets[0], 0.0);
        assert!(imp.port_phase_offsets[1..].iter().all(|o| (-PI..PI).contains(o)));
        assert_eq!(imp, ImpairmentModel::random(4, 5));
    }
}
