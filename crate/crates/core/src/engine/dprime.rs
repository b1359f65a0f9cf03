use rayon::prelude::*;
use serde::Serialize;

use super::thread_pool;
use crate::error::{Error, Result};
use crate::models::ProcessSpec;
use crate::norming::Norming;
use crate::samplers::{ProcessSampler, StreamKey, StreamTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DPrimePoint {
    pub k: usize,
    pub value: f64,
}

/// Monte Carlo estimate of `n * sum_{j=2}^{floor(n/k)} P[X_1 > u_n, X_j > u_n]`
/// at `u_n = u_n(x_level)`, from `replications` paths of length `floor(n/k)`.
///
/// Returns 0 when the range of `j` is empty (`floor(n/k) < 2`).
#[allow(clippy::too_many_arguments)]
pub fn dprime_diagnostic(
    process: &ProcessSpec,
    n: usize,
    k: usize,
    x_level: f64,
    norming: &Norming,
    replications: u64,
    seed: u64,
    workers: usize,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("k", format!("block count must be at least 2, got {k}")));
    }
    if replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let block = n / k;
    if block < 2 {
        return Ok(0.0);
    }
    let sampler = ProcessSampler::new(process, block)?;
    let level = norming.level(x_level);
    let pool = thread_pool(workers)?;
    let joint_exceedances: u64 = pool.install(|| {
        (0..replications)
            .into_par_iter()
            .map_init(
                || (sampler.workspace(), vec![0.0; block]),
                |(ws, path), rep| {
                    let key = StreamKey::new(seed, rep, StreamTag::Diagnostic);
                    sampler.sample_into(&mut key.rng(), ws, path);
                    if path[0] > level {
                        path[1..].iter().filter(|v| **v > level).count() as u64
                    } else {
                        0
                    }
                },
            )
            .sum()
    });
    Ok(n as f64 * joint_exceedances as f64 / replications as f64)
}

/// The diagnostic over several block counts `k`; stream seeds are offset by `k`.
#[allow(clippy::too_many_arguments)]
pub fn dprime_curve(
    process: &ProcessSpec,
    n: usize,
    ks: &[usize],
    x_level: f64,
    norming: &Norming,
    replications: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<DPrimePoint>> {
    ks.iter()
        .map(|&k| {
            let value = dprime_diagnostic(
                process,
                n,
                k,
                x_level,
                norming,
                replications,
                seed.wrapping_add(k as u64),
                workers,
            )?;
            Ok(DPrimePoint { k, value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CovarianceSpec;
    use crate::norming::gaussian_norming;

    #[test]
    fn empty_range_is_zero() {
        let p = ProcessSpec::Gaussian { cov: CovarianceSpec::Iid };
        let nm = gaussian_norming(10).unwrap();
        assert_eq!(dprime_diagnostic(&p, 10, 6, 0.0, &nm, 100, 1, 1).unwrap(), 0.0);
        assert!(dprime_diagnostic(&p, 10, 1, 0.0, &nm, 100, 1, 1).is_err());
    }

    #[test]
    fn strong_dependence_clusters_more() {
        // A very low level makes exceedances common, so the comparison is cheap.
        let nm = gaussian_norming(200).unwrap();
        let iid = ProcessSpec::Gaussian { cov: CovarianceSpec::Iid };
        let ar = ProcessSpec::Gaussian { cov: CovarianceSpec::Ar1 { rho: 0.9 } };
        let a = dprime_diagnostic(&iid, 200, 10, -6.0, &nm, 20_000, 3, 1).unwrap();
        let b = dprime_diagnostic(&ar, 200, 10, -6.0, &nm, 20_000, 3, 1).unwrap();
        assert!(b > a);
    }
}
