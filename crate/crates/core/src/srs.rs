//! Zadoff–Chu based sounding pilot.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_SRS_LENGTH: usize = 960;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrsConfig {
    pub length: usize,
    pub zc_root: u64,
    pub zc_length: usize,
    /// Occupied bandwidth; carried for reporting only.
    pub bandwidth_hz: f64,
}

impl Default for SrsConfig {
    fn default() -> Self {
        Self::with_length(DEFAULT_SRS_LENGTH)
    }
}

impl SrsConfig {
    /// Root 1, base length = largest prime not exceeding `length`.
    pub fn with_length(length: usize) -> Self {
        Self {
            length,
            zc_root: 1,
            zc_length: largest_prime_at_most(length).unwrap_or(0),
            bandwidth_hz: 60e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::config("srs.length", "must be positive"));
        }
        check_zc(self.zc_root, self.zc_length)
    }
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn largest_prime_at_most(n: usize) -> Option<usize> {
    (2..=n).rev().find(|&p| is_prime(p))
}

fn check_zc(root: u64, length: usize) -> Result<()> {
    if !is_prime(length) {
        return Err(Error::config("zc_length", format!("{length} is not prime")));
    }
    if root == 0 || root >= length as u64 || gcd(root, length as u64) != 1 {
        return Err(Error::config(
            "zc_root",
            format!("root {root} must satisfy 1 <= q < {length} and be coprime with it"),
        ));
    }
    Ok(())
}

/// `s[n] = exp(-jπ·q·n·(n+1)/N)` for prime `N`.
pub fn zadoff_chu(root: u64, length: usize) -> Result<Vec<Complex64>> {
    check_zc(root, length)?;
    let n_zc = length as u128;
    let modulus = 2 * n_zc;
    Ok((0..n_zc)
        .map(|n| {
            // reduce the exponent exactly before going to floating point
            let e = (root as u128 * n * (n + 1)) % modulus;
            Complex64::from_polar(1.0, -PI * e as f64 / n_zc as f64)
        })
        .collect())
}

/// Cyclic extension of the base sequence to the configured pilot length.
pub fn srs_sequence(cfg: &SrsConfig) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let base = zadoff_chu(cfg.zc_root, cfg.zc_length)?;
    Ok((0..cfg.length).map(|n| base[n % base.len()]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Periodic autocorrelation by direct summation over every lag.
    fn periodic_autocorrelation(s: &[Complex64]) -> Vec<f64> {
        let n = s.len();
        (0..n)
            .map(|tau| {
                (0..n)
                    .map(|i| s[i] * s[(i + tau) % n].conj())
                    .sum::<Complex64>()
                    .norm()
            })
            .collect()
    }

    #[test]
    fn length_three_by_hand() {
        let s = zadoff_chu(1, 3).unwrap();
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, -2.0 * PI / 3.0),
            Complex64::new(1.0, 0.0),
        ];
        for (a, b) in s.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn cazac_properties() {
        for &(q, n) in &[(1u64, 3usize), (1, 139), (25, 139), (1, 953), (7, 953), (952, 953)] {
            let s = zadoff_chu(q, n).unwrap();
            assert!(s.iter().all(|x| (x.norm() - 1.0).abs() < 1e-14));
            let acf = periodic_autocorrelation(&s);
            assert!((acf[0] - n as f64).abs() < 1e-9);
            let worst = acf[1..].iter().cloned().fold(0.0, f64::max);
            assert!(worst < 1e-9, "q={q} n={n}: sidelobe {worst}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(zadoff_chu(1, 960), Err(Error::Config { .. })));
        assert!(matches!(zadoff_chu(0, 953), Err(Error::Config { .. })));
        assert!(matches!(zadoff_chu(953, 953), Err(Error::Config { .. })));
        let mut cfg = SrsConfig::default();
        cfg.zc_length = 955;
        assert!(srs_sequence(&cfg).is_err());
    }

    #[test]
    fn default_config() {
        let cfg = SrsConfig::default();
        assert_eq!(cfg.length, 960);
        assert_eq!(cfg.zc_length, 953);
        assert_eq!(cfg.zc_root, 1);
    }

    #[test]
    fn identity_extension() {
        let cfg = SrsConfig {
            length: 139,
            zc_root: 3,
            zc_length: 139,
            bandwidth_hz: 0.0,
        };
        assert_eq!(srs_sequence(&cfg).unwrap(), zadoff_chu(3, 139).unwrap());
    }

    #[test]
    fn cyclic_extension_to_960() {
        let cfg = SrsConfig::default();
        let s = srs_sequence(&cfg).unwrap();
        let zc = zadoff_chu(1, 953).unwrap();
        assert_eq!(s.len(), 960);
        assert_eq!(&s[..953], &zc[..]);
        assert_eq!(&s[953..], &zc[..7]);
        assert!(s.iter().all(|x| (x.norm() - 1.0).abs() < 1e-14));
        // deterministic down to the bit
        assert_eq!(s, srs_sequence(&cfg).unwrap());
    }
}
