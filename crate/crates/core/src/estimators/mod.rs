//! Subspace angle-of-arrival estimators.
//!
//! Both MUSIC and ESPRIT start from the sample covariance of a calibrated
//! snapshot and its Hermitian eigendecomposition. Eigenvalues are kept in
//! descending order, so the first `num_sources` eigenvectors span the signal
//! subspace and the rest span the noise subspace.

mod eigen;
mod esprit;
mod music;

pub use eigen::{hermitian_eig, jacobi_eigh, MAX_SWEEPS, OFF_DIAGONAL_TOLERANCE};
pub use esprit::{esprit_angles, esprit_estimate, DEFAULT_SHIFT};
pub use music::{
    music_estimate, music_null, music_spectrum, write_spectrum_csv, Pseudospectrum, DEFAULT_GRID_STEP_DEG,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::channel::SnapshotMatrix;
use crate::error::{Error, Result};

/// Hermitian tolerance, relative to the Frobenius norm.
const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub values: DMatrix<Complex64>,
}

impl CovarianceMatrix {
    pub fn new(values: DMatrix<Complex64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::Shape(format!("covariance is {}x{}", values.nrows(), values.ncols())));
        }
        let scale = values.norm();
        let skew = (&values - values.adjoint()).norm();
        if skew > HERMITIAN_TOLERANCE * scale {
            return Err(Error::Shape(format!("matrix is not Hermitian (skew {skew:e})")));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.values.diagonal().iter().map(|x| x.re).sum()
    }
}

/// `R̂ = (1/N)·Σ_n x[n]·x[n]ᴴ` over the snapshot columns.
pub fn sample_covariance(snapshot: &SnapshotMatrix) -> Result<CovarianceMatrix> {
    let (m, n) = snapshot.samples.shape();
    if n < m {
        return Err(Error::InsufficientSamples { needed: m, got: n });
    }
    let x = &snapshot.samples;
    let mut r = x * x.adjoint() / Complex64::new(n as f64, 0.0);
    // enforce exact Hermitian symmetry lost to rounding in the product
    for i in 0..m {
        r[(i, i)].im = 0.0;
        for j in i + 1..m {
            let avg = (r[(i, j)] + r[(j, i)].conj()) * 0.5;
            r[(i, j)] = avg;
            r[(j, i)] = avg.conj();
        }
    }
    Ok(CovarianceMatrix { values: r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DMatrix<Complex64>,
    pub num_sources: usize,
}

impl SubspaceDecomposition {
    pub fn with_sources(mut self, num_sources: usize) -> Self {
        self.num_sources = num_sources;
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn signal_basis(&self) -> DMatrix<Complex64> {
        self.eigenvectors.columns(0, self.num_sources.min(self.dim())).into_owned()
    }

    pub fn noise_basis(&self) -> DMatrix<Complex64> {
        let d = self.num_sources.min(self.dim());
        self.eigenvectors.columns(d, self.dim() - d).into_owned()
    }

    /// Noise power estimate: mean of the noise eigenvalues.
    pub fn noise_variance(&self) -> Option<f64> {
        let noise = &self.eigenvalues[self.num_sources.min(self.dim())..];
        (!noise.is_empty()).then(|| noise.iter().sum::<f64>() / noise.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Music,
    Esprit,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Music, Method::Esprit];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Music => "music",
            Method::Esprit => "esprit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "music" => Ok(Method::Music),
            "esprit" => Ok(Method::Esprit),
            other => Err(Error::config("method", format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoaEstimate {
    pub theta_deg: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudospectrum: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_xy_deg: Option<f64>,
    /// Clamped arcsine argument from the plane correction, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_warning: Option<f64>,
}

impl AoaEstimate {
    pub fn new(theta_deg: f64, method: Method) -> Self {
        Self {
            theta_deg,
            method,
            pseudospectrum: None,
            theta_xy_deg: None,
            range_warning: None,
        }
    }
}
