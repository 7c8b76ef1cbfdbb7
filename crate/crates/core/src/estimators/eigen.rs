//! Cyclic Jacobi eigensolver for Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CovarianceMatrix, SubspaceDecomposition};

/// Sweeps stop once the off-diagonal Frobenius norm falls below this
/// fraction of the full Frobenius norm.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

fn off_diagonal_norm(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigenvalues (unsorted) and unitary eigenvector matrix of a Hermitian `a`.
pub fn jacobi_eigh(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let scale = a.norm();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= OFF_DIAGONAL_TOLERANCE * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)].re).collect();
    (values, v)
}

/// Annihilate `a[p][q]` with the unitary `U = D·G·Dᴴ`, where `D` removes the
/// phase of `a[p][q]` and `G` is the classical real Jacobi rotation.
fn rotate(a: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / r;

    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let u_pp = Complex64::new(c, 0.0);
    let u_pq = phase * s;
    let u_qp = -phase.conj() * s;
    let u_qq = Complex64::new(c, 0.0);

    let n = a.nrows();
    // A ← A·U
    for k in 0..n {
        let (x, y) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = x * u_pp + y * u_qp;
        a[(k, q)] = x * u_pq + y * u_qq;
    }
    // A ← Uᴴ·A
    for k in 0..n {
        let (x, y) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = u_pp.conj() * x + u_qp.conj() * y;
        a[(q, k)] = u_pq.conj() * x + u_qq.conj() * y;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    // V ← V·U
    for k in 0..n {
        let (x, y) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = x * u_pp + y * u_qp;
        v[(k, q)] = x * u_pq + y * u_qq;
    }
}

/// Eigendecomposition with eigenvalues sorted descending and a single-source split.
pub fn hermitian_eig(r: &CovarianceMatrix) -> SubspaceDecomposition {
    let (values, vectors) = jacobi_eigh(&r.values);
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |row, col| vectors[(row, order[col])]);
    SubspaceDecomposition {
        eigenvalues,
        eigenvectors,
        num_sources: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
        let g = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&g + g.adjoint()) * c(0.5, 0.0)
    }

    fn decompose(m: &DMatrix<Complex64>) -> SubspaceDecomposition {
        hermitian_eig(&CovarianceMatrix::new(m.clone()).unwrap())
    }

    #[test]
    fn identity() {
        let d = decompose(&DMatrix::identity(4, 4));
        assert_eq!(d.eigenvalues, vec![1.0; 4]);
        assert!((&d.eigenvectors * d.eigenvectors.adjoint() - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_sorted_descending() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(3.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]));
        let d = decompose(&m);
        assert_eq!(d.eigenvalues, vec![3.0, 2.0, 1.0, 0.0]);
        // columns are unit basis vectors
        for col in 0..4 {
            let nonzero = (0..4).filter(|&r| d.eigenvectors[(r, col)].norm() > 0.5).count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3, 4, 6] {
            for _ in 0..50 {
                let m = random_hermitian(&mut rng, n);
                let d = decompose(&m);
                let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    n,
                    d.eigenvalues.iter().map(|&x| c(x, 0.0)),
                ));
                let rebuilt = &d.eigenvectors * lam * d.eigenvectors.adjoint();
                assert!((rebuilt - &m).norm() / m.norm() < 1e-9);
                let gram = d.eigenvectors.adjoint() * &d.eigenvectors;
                assert!((gram - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-10);
                assert!(d.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn zero_matrix() {
        let d = decompose(&DMatrix::zeros(4, 4));
        assert_eq!(d.eigenvalues, vec![0.0; 4]);
    }
}
