use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{AoaEstimate, Method, SubspaceDecomposition};
use crate::array::{angle_from_spatial_frequency, UlaConfig};
use crate::error::{Error, Result};

/// Maximum-overlap subarrays: rows `0..M-1` and `1..M`.
pub const DEFAULT_SHIFT: usize = 1;

/// Smallest singular value of the first subarray basis, relative to the
/// largest, below which the invariance equation is considered rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Angles of all `num_sources` sources from the rotational invariance between
/// two subarrays displaced by `shift_k` elements.
///
/// `Ψ` solves `V_s0 Ψ = V_s1` in the least-squares sense; its eigenvalues
/// `Φ_d = e^{j k μ_d}` carry the per-source phase increment over the shift.
/// Angles are returned in ascending order.
pub fn esprit_angles(decomp: &SubspaceDecomposition, ula: &UlaConfig, shift_k: usize) -> Result<Vec<f64>> {
    let m = decomp.dim();
    let d = decomp.num_sources;
    if shift_k == 0 || shift_k >= m {
        return Err(Error::config("shift_k", format!("must be in 1..{m}")));
    }
    if d == 0 || d > m - shift_k {
        return Err(Error::config(
            "num_sources",
            format!("{d} sources do not fit subarrays of {} elements", m - shift_k),
        ));
    }
    if m != ula.num_elements {
        return Err(Error::Shape(format!(
            "decomposition is {m}-dimensional, array has {} elements",
            ula.num_elements
        )));
    }

    let vs = decomp.signal_basis();
    let rows = m - shift_k;
    let v0 = vs.rows(0, rows).into_owned();
    let v1 = vs.rows(shift_k, rows).into_owned();

    let singular = v0.clone().svd(false, false).singular_values;
    let (smax, smin) = (singular.max(), singular.min());
    if !(smax > 0.0) || smin < RANK_TOLERANCE * smax {
        return Err(Error::DegenerateSubspace(format!(
            "first subarray basis has condition {:e}",
            smax / smin
        )));
    }

    let gram = v0.adjoint() * &v0;
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSubspace("subarray Gram matrix is singular".into()))?;
    let psi: DMatrix<Complex64> = gram_inv * v0.adjoint() * v1;

    let phis: Vec<Complex64> = if d == 1 {
        vec![psi[(0, 0)]]
    } else {
        psi.clone()
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::DegenerateSubspace("rotation operator did not triangularize".into()))?
            .iter()
            .copied()
            .collect()
    };

    let mut angles = phis
        .iter()
        .map(|phi| angle_from_spatial_frequency(ula, phi.arg(), shift_k))
        .collect::<Result<Vec<_>>>()?;
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Single-source ESPRIT estimate (first angle when more sources are modelled).
pub fn esprit_estimate(decomp: &SubspaceDecomposition, ula: &UlaConfig, shift_k: usize) -> Result<AoaEstimate> {
    let angles = esprit_angles(decomp, ula, shift_k)?;
    Ok(AoaEstimate::new(angles[0], Method::Esprit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use crate::estimators::{hermitian_eig, CovarianceMatrix};
    use nalgebra::DVector;

    fn covariance_of(ula: &UlaConfig, sources: &[(f64, f64)]) -> CovarianceMatrix {
        let m = ula.num_elements;
        let mut r = DMatrix::<Complex64>::zeros(m, m);
        for &(theta, power) in sources {
            let a = DVector::from_vec(steering_vector(ula, theta).unwrap().elements);
            r += &a * a.adjoint() * Complex64::new(power, 0.0);
        }
        CovarianceMatrix::new(r).unwrap()
    }

    #[test]
    fn noiseless_single_source_exact() {
        let ula = UlaConfig::default();
        for theta in [-80.0, -33.3, 0.0, 12.5, 30.0, 80.0] {
            let d = hermitian_eig(&covariance_of(&ula, &[(theta, 1.0)]));
            let est = esprit_estimate(&d, &ula, DEFAULT_SHIFT).unwrap();
            assert!((est.theta_deg - theta).abs() < 1e-6, "{theta} -> {}", est.theta_deg);
        }
    }

    #[test]
    fn boresight_rotation_is_unity() {
        let ula = UlaConfig::default();
        let d = hermitian_eig(&covariance_of(&ula, &[(0.0, 2.0)]));
        let vs = d.signal_basis();
        let v0 = vs.rows(0, 3).into_owned();
        let v1 = vs.rows(1, 3).into_owned();
        let psi = (v0.adjoint() * &v0)[(0, 0)].inv() * (v0.adjoint() * v1)[(0, 0)];
        assert!((psi - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(esprit_estimate(&d, &ula, 1).unwrap().theta_deg.abs() < 1e-9);
    }

    #[test]
    fn larger_shift_on_longer_array() {
        let ula = UlaConfig::half_wavelength(8, 3.95e9);
        let d = hermitian_eig(&covariance_of(&ula, &[(17.0, 1.0)]));
        for k in 1..=3 {
            let est = esprit_estimate(&d, &ula, k).unwrap();
            assert!((est.theta_deg - 17.0).abs() < 1e-6);
        }
    }

    #[test]
    fn two_sources() {
        let ula = UlaConfig::half_wavelength(6, 3.95e9);
        let d = hermitian_eig(&covariance_of(&ula, &[(-20.0, 1.0), (35.0, 0.5)])).with_sources(2);
        let angles = esprit_angles(&d, &ula, 1).unwrap();
        assert!((angles[0] + 20.0).abs() < 1e-6 && (angles[1] - 35.0).abs() < 1e-6, "{angles:?}");
    }

    #[test]
    fn phase_beyond_spacing_limit_is_out_of_range() {
        // data from a λ/2 array at 60°, interpreted with λ/4 spacing: the observed
        // per-element phase exceeds what the narrower spacing can produce
        let ula = UlaConfig::default();
        let d = hermitian_eig(&covariance_of(&ula, &[(60.0, 1.0)]));
        let mut narrow = ula.clone();
        narrow.spacing_m = ula.wavelength_m() / 4.0;
        assert!(matches!(esprit_estimate(&d, &narrow, 1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn degenerate_subspace() {
        let ula = UlaConfig::default();
        // signal energy only on the last element: first subarray sees nothing
        let mut r = DMatrix::<Complex64>::zeros(4, 4);
        r[(3, 3)] = Complex64::new(1.0, 0.0);
        let d = hermitian_eig(&CovarianceMatrix::new(r).unwrap());
        assert!(matches!(esprit_estimate(&d, &ula, 1), Err(Error::DegenerateSubspace(_))));
    }

    #[test]
    fn bad_parameters() {
        let ula = UlaConfig::default();
        let d = hermitian_eig(&covariance_of(&ula, &[(5.0, 1.0)]));
        assert!(esprit_estimate(&d, &ula, 0).is_err());
        assert!(esprit_estimate(&d, &ula, 4).is_err());
        assert!(esprit_estimate(&d.clone().with_sources(4), &ula, 1).is_err());
    }
}
