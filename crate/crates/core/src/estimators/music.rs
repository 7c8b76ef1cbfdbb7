use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{AoaEstimate, Method, SubspaceDecomposition};
use crate::array::{steering_from_mu, UlaConfig};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_STEP_DEG: f64 = 0.1;

/// Relative band within which grid values count as tied for the maximum.
const TIE_TOLERANCE: f64 = 1e-9;

/// `P(θ)` sampled on a uniform grid over [-90°, 90°].
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudospectrum {
    pub grid_step_deg: f64,
    pub theta_deg: Vec<f64>,
    pub power: Vec<f64>,
    /// `aᴴ V_n V_nᴴ a` at each grid point, kept for peak refinement.
    pub null: Vec<f64>,
}

impl Pseudospectrum {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.theta_deg.iter().copied().zip(self.power.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }
}

fn projection_energy(noise: &DMatrix<Complex64>, a: &[Complex64]) -> f64 {
    noise
        .column_iter()
        .map(|v| v.iter().zip(a).map(|(vi, ai)| vi.conj() * ai).sum::<Complex64>().norm_sqr())
        .sum()
}

/// Noise-subspace projection energy `aᴴ(θ) V_n V_nᴴ a(θ)`.
pub fn music_null(decomp: &SubspaceDecomposition, ula: &UlaConfig, theta_deg: f64) -> Result<f64> {
    check_sources(decomp)?;
    let a = crate::array::steering_vector(ula, theta_deg)?;
    Ok(projection_energy(&decomp.noise_basis(), &a.elements))
}

fn check_sources(decomp: &SubspaceDecomposition) -> Result<()> {
    if decomp.num_sources >= decomp.dim() {
        return Err(Error::NoNoiseSubspace {
            sources: decomp.num_sources,
            elements: decomp.dim(),
        });
    }
    Ok(())
}

pub fn music_spectrum(decomp: &SubspaceDecomposition, ula: &UlaConfig, grid_step_deg: f64) -> Result<Pseudospectrum> {
    check_sources(decomp)?;
    if !(grid_step_deg > 0.0 && grid_step_deg <= 180.0) {
        return Err(Error::config("grid_step_deg", "must be in (0, 180]"));
    }
    if decomp.dim() != ula.num_elements {
        return Err(Error::Shape(format!(
            "decomposition is {}-dimensional, array has {} elements",
            decomp.dim(),
            ula.num_elements
        )));
    }
    let noise = decomp.noise_basis();
    let steps = (180.0 / grid_step_deg + 1e-9).floor() as usize;
    let phase_per_sin = -2.0 * std::f64::consts::PI / ula.wavelength_m() * ula.spacing_m;

    let mut theta_deg = Vec::with_capacity(steps + 1);
    let mut null = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let theta = (-90.0 + i as f64 * grid_step_deg).min(90.0);
        let a = steering_from_mu(ula.num_elements, phase_per_sin * theta.to_radians().sin());
        theta_deg.push(theta);
        null.push(projection_energy(&noise, &a));
    }
    let power = null.iter().map(|&q| 1.0 / q.max(f64::MIN_POSITIVE)).collect();
    Ok(Pseudospectrum {
        grid_step_deg,
        theta_deg,
        power,
        null,
    })
}

/// Peak of the pseudospectrum.
///
/// Grid values within a relative 1e-9 of the maximum are ties and resolve to
/// the smallest `|θ|`. The winner is refined by fitting a parabola through the
/// projection energy at the peak and its two neighbours; the energy is
/// quadratic around a null, so the vertex lands on the true minimum even when
/// the null is exact.
pub fn music_estimate(spectrum: &Pseudospectrum) -> Result<AoaEstimate> {
    if spectrum.is_empty() {
        return Err(Error::Empty("pseudospectrum is empty"));
    }
    let max = spectrum.power.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = max * (1.0 - TIE_TOLERANCE);
    let peak = (0..spectrum.len())
        .filter(|&i| spectrum.power[i] >= floor)
        .min_by(|&i, &j| spectrum.theta_deg[i].abs().total_cmp(&spectrum.theta_deg[j].abs()))
        .unwrap();

    let mut theta = spectrum.theta_deg[peak];
    if peak > 0 && peak + 1 < spectrum.len() {
        let (left, mid, right) = (spectrum.null[peak - 1], spectrum.null[peak], spectrum.null[peak + 1]);
        let curvature = left - 2.0 * mid + right;
        if curvature > 1e-12 * left.max(right) {
            let offset = (0.5 * (left - right) / curvature).clamp(-0.5, 0.5);
            theta += offset * spectrum.grid_step_deg;
        }
    }
    let mut est = AoaEstimate::new(theta.clamp(-90.0, 90.0), Method::Music);
    est.pseudospectrum = Some(spectrum.points());
    Ok(est)
}

/// Writes `theta_deg,power` rows with a header.
pub fn write_spectrum_csv(spectrum: &Pseudospectrum, out: &mut impl Write) -> Result<()> {
    let mut text = String::from("theta_deg,power\n");
    for (t, p) in spectrum.theta_deg.iter().zip(&spectrum.power) {
        text.push_str(&format!("{t},{p}\n"));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use crate::estimators::{hermitian_eig, CovarianceMatrix};
    use rand::{Rng, SeedableRng};

    /// Exact rank-one covariance `a aᴴ` for a source at `theta`.
    fn rank_one(ula: &UlaConfig, theta: f64) -> SubspaceDecomposition {
        let a = steering_vector(ula, theta).unwrap();
        let v = nalgebra::DVector::from_vec(a.elements);
        hermitian_eig(&CovarianceMatrix::new(&v * v.adjoint()).unwrap())
    }

    #[test]
    fn noiseless_peak_and_null() {
        let ula = UlaConfig::default();
        let d = rank_one(&ula, 30.0);
        let spec = music_spectrum(&d, &ula, DEFAULT_GRID_STEP_DEG).unwrap();
        assert_eq!(spec.len(), 1801);
        assert!(spec.power.iter().all(|&p| p > 0.0 && p.is_finite()));
        let (argmax, _) = spec
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((spec.theta_deg[argmax] - 30.0).abs() < 0.05);
        assert!(music_null(&d, &ula, 30.0).unwrap() < 1e-12);
        let est = music_estimate(&spec).unwrap();
        assert!((est.theta_deg - 30.0).abs() < 0.01, "{}", est.theta_deg);
    }

    #[test]
    fn off_grid_noiseless_sources_refine_below_grid() {
        let ula = UlaConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let theta: f64 = rng.random_range(-75.0..75.0);
            let spec = music_spectrum(&rank_one(&ula, theta), &ula, DEFAULT_GRID_STEP_DEG).unwrap();
            let est = music_estimate(&spec).unwrap();
            assert!((est.theta_deg - theta).abs() < 0.01, "{theta} -> {}", est.theta_deg);
        }
    }

    #[test]
    fn boresight_spectrum_is_symmetric() {
        let ula = UlaConfig::default();
        let spec = music_spectrum(&rank_one(&ula, 0.0), &ula, DEFAULT_GRID_STEP_DEG).unwrap();
        let n = spec.len();
        for i in 0..n / 2 {
            let (a, b) = (spec.null[i], spec.null[n - 1 - i]);
            assert!((a - b).abs() <= 1e-9 * a.max(b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn identity_covariance_is_flat_and_ties_to_boresight() {
        let ula = UlaConfig::default();
        let d = hermitian_eig(&CovarianceMatrix::new(DMatrix::identity(4, 4)).unwrap());
        let spec = music_spectrum(&d, &ula, DEFAULT_GRID_STEP_DEG).unwrap();
        let max = spec.power.iter().cloned().fold(f64::MIN, f64::max);
        let min = spec.power.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.0 + 1e-6);
        assert_eq!(music_estimate(&spec).unwrap().theta_deg, 0.0);
    }

    #[test]
    fn no_noise_subspace() {
        let ula = UlaConfig::default();
        let d = rank_one(&ula, 10.0).with_sources(4);
        assert!(matches!(
            music_spectrum(&d, &ula, 0.1),
            Err(Error::NoNoiseSubspace { sources: 4, elements: 4 })
        ));
        assert!(music_spectrum(&rank_one(&ula, 10.0), &ula, 0.0).is_err());
    }

    #[test]
    fn spectrum_csv_layout() {
        let ula = UlaConfig::default();
        let spec = music_spectrum(&rank_one(&ula, 10.0), &ula, 1.0).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&spec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "theta_deg,power");
        assert_eq!(lines.len(), 182);
        assert!(lines[1].starts_with("-90,"));
        assert!(lines[181].starts_with("90,"));
    }
}
