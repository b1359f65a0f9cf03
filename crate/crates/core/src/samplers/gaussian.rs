use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::models::CovarianceSpec;

/// Eigenvalues above `-SPECTRAL_TOLERANCE` are treated as zero.
pub const SPECTRAL_TOLERANCE: f64 = 1e-9;

/// Largest path length for which a dense factorisation is attempted.
pub const DENSE_FALLBACK_MAX: usize = 2048;

fn embedding_len(n: usize) -> usize {
    (2 * (n - 1)).max(1).next_power_of_two()
}

fn circulant_spectrum(cov: &CovarianceSpec, n: usize) -> (Vec<f64>, Arc<dyn Fft<f64>>) {
    let m = embedding_len(n);
    let mut buf: Vec<Complex<f64>> = (0..m)
        .map(|j| Complex::new(cov.lag(j.min(m - j)), 0.0))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut buf);
    (buf.into_iter().map(|c| c.re).collect(), fft)
}

/// Minimum eigenvalue of the circulant matrix built from the even extension
/// of `(r_0, ..., r_{n-1})`, padded to a power-of-two length.
pub fn spectral_check(cov: &CovarianceSpec, n: usize) -> f64 {
    assert!(n >= 2, "spectral_check needs n >= 2");
    let (eig, _) = circulant_spectrum(cov, n);
    eig.into_iter().fold(f64::INFINITY, f64::min)
}

fn toeplitz(cov: &CovarianceSpec, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| cov.lag(i.abs_diff(j)))
}

/// Minimum eigenvalue of the `n x n` Toeplitz covariance matrix.
pub fn dense_min_eigenvalue(cov: &CovarianceSpec, n: usize) -> f64 {
    SymmetricEigen::new(toeplitz(cov, n))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone)]
enum Method {
    Iid,
    Ar1 { rho: f64, innovation: f64 },
    MovingAverage { weights: Vec<f64> },
    Circulant { sqrt_eig: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    Dense { factor: DMatrix<f64> },
}

/// Which generation route a sampler uses; reported for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianRoute {
    Iid,
    Ar1Recursion,
    MovingAverage,
    CirculantEmbedding,
    DenseFactor,
}

/// Stationary unit-variance Gaussian path generator prepared for a fixed length.
#[derive(Clone)]
pub struct GaussianSampler {
    n: usize,
    method: Method,
}

impl std::fmt::Debug for GaussianSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianSampler")
            .field("n", &self.n)
            .field("route", &self.route())
            .finish()
    }
}

impl GaussianSampler {
    pub fn new(cov: &CovarianceSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "path length must be positive"));
        }
        let method = match cov {
            CovarianceSpec::Iid => Method::Iid,
            _ if n == 1 => Method::Iid,
            CovarianceSpec::Ar1 { rho } => Method::Ar1 {
                rho: *rho,
                innovation: (1.0 - rho * rho).sqrt(),
            },
            CovarianceSpec::MDependent { weights, .. } => {
                let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
                Method::MovingAverage {
                    weights: weights.iter().map(|w| w / norm).collect(),
                }
            }
            CovarianceSpec::PowerDecay { .. } | CovarianceSpec::Explicit { .. } => {
                let (eig, fft) = circulant_spectrum(cov, n);
                let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
                if min >= -SPECTRAL_TOLERANCE {
                    let m = eig.len() as f64;
                    Method::Circulant {
                        sqrt_eig: eig.iter().map(|l| (l.max(0.0) / m).sqrt()).collect(),
                        fft,
                    }
                } else if n <= DENSE_FALLBACK_MAX {
                    Method::Dense {
                        factor: dense_factor(cov, n)?,
                    }
                } else {
                    return Err(Error::NonPsdCovariance { n, min_eigenvalue: min });
                }
            }
        };
        Ok(GaussianSampler { n, method })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn route(&self) -> GaussianRoute {
        match self.method {
            Method::Iid => GaussianRoute::Iid,
            Method::Ar1 { .. } => GaussianRoute::Ar1Recursion,
            Method::MovingAverage { .. } => GaussianRoute::MovingAverage,
            Method::Circulant { .. } => GaussianRoute::CirculantEmbedding,
            Method::Dense { .. } => GaussianRoute::DenseFactor,
        }
    }

    /// Fills `out` (length `n`) with one path.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.n);
        match &self.method {
            Method::Iid => out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            Method::Ar1 { rho, innovation } => {
                let mut prev: f64 = rng.sample(StandardNormal);
                out[0] = prev;
                for v in &mut out[1..] {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + innovation * z;
                    *v = prev;
                }
            }
            Method::MovingAverage { weights } => {
                let q = weights.len();
                let noise: Vec<f64> = (0..self.n + q - 1).map(|_| rng.sample(StandardNormal)).collect();
                for (t, v) in out.iter_mut().enumerate() {
                    // X_t = sum_i w_i Z_{t-i}, with Z shifted by q - 1.
                    *v = weights
                        .iter()
                        .enumerate()
                        .map(|(i, w)| w * noise[t + q - 1 - i])
                        .sum();
                }
            }
            Method::Circulant { sqrt_eig, fft } => {
                let mut buf: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                for (v, c) in out.iter_mut().zip(&buf) {
                    *v = c.re;
                }
            }
            Method::Dense { factor } => {
                let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = factor * z;
                out.copy_from_slice(x.as_slice());
            }
        }
    }
}

/// Symmetric square root factor `V diag(sqrt(l))` of the Toeplitz covariance.
fn dense_factor(cov: &CovarianceSpec, n: usize) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(toeplitz(cov, n));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -SPECTRAL_TOLERANCE {
        return Err(Error::NonPsdCovariance { n, min_eigenvalue: min });
    }
    let scale = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{StreamKey, StreamTag};

    #[test]
    fn iid_spectrum_is_flat() {
        assert!((spectral_check(&CovarianceSpec::Iid, 8) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ar1_spectrum_positive() {
        // Embedding length 32; reference value from an independent numpy FFT.
        let min = spectral_check(&CovarianceSpec::Ar1 { rho: 0.5 }, 16);
        assert!(min > 0.0);
        assert!((min - 0.333_328_247_070_312_5).abs() < 1e-12);
    }

    #[test]
    fn negative_embedding_falls_back_to_dense() {
        let cov = CovarianceSpec::Explicit { r: vec![1.0, 0.9, 0.7] };
        assert!((spectral_check(&cov, 3) + 0.1).abs() < 1e-12);
        let sampler = GaussianSampler::new(&cov, 3).unwrap();
        assert_eq!(sampler.route(), GaussianRoute::DenseFactor);
    }

    #[test]
    fn non_psd_everywhere_is_rejected() {
        let cov = CovarianceSpec::Explicit { r: vec![1.0, -0.9] };
        assert!((spectral_check(&cov, 4) + 0.8).abs() < 1e-12);
        assert!(matches!(
            GaussianSampler::new(&cov, 4),
            Err(Error::NonPsdCovariance { n: 4, .. })
        ));
        // 2 x 2 is fine.
        assert!(GaussianSampler::new(&cov, 2).is_ok());
    }

    #[test]
    fn iid_path_is_raw_normals() {
        use rand_distr::StandardNormal;
        let key = StreamKey::new(11, 0, StreamTag::BasePath);
        let sampler = GaussianSampler::new(&CovarianceSpec::Iid, 3).unwrap();
        let mut out = [0.0; 3];
        sampler.sample_into(&mut key.rng(), &mut out);
        let mut rng = key.rng();
        let expected: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        assert_eq!(out.to_vec(), expected);
    }

    #[test]
    fn routes() {
        let route = |cov: CovarianceSpec, n| GaussianSampler::new(&cov, n).unwrap().route();
        assert_eq!(route(CovarianceSpec::Ar1 { rho: 0.5 }, 10), GaussianRoute::Ar1Recursion);
        assert_eq!(
            route(CovarianceSpec::PowerDecay { gamma: 2.0, scale: 0.5 }, 100),
            GaussianRoute::CirculantEmbedding
        );
        assert_eq!(
            route(CovarianceSpec::MDependent { m: 2, weights: vec![1.0, 0.5, 0.25] }, 10),
            GaussianRoute::MovingAverage
        );
        assert_eq!(route(CovarianceSpec::PowerDecay { gamma: 2.0, scale: 0.5 }, 1), GaussianRoute::Iid);
    }
}
