use serde::Serialize;

use super::ReplicationOutcome;
use crate::error::{Error, Result};
use crate::limits::{gumbel_cdf, missing_perturbed_marginal, LimitSurface};
use crate::models::{EvalGrid, LambdaLaw, PerturbationMode};

/// Index of the first grid point at or above `v`; `None` sorts below everything.
fn first_at_or_above(axis: &[f64], v: Option<f64>) -> usize {
    match v {
        None => 0,
        Some(v) => axis.partition_point(|g| *g < v),
    }
}

/// Joint empirical distribution function of the normalised maxima on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointEcdf {
    pub grid: EvalGrid,
    /// `counts[i][j] = #{m_perturbed <= xs[i] and m_original <= ys[j]}`.
    pub counts: Vec<Vec<u64>>,
    pub replications: u64,
}

impl JointEcdf {
    pub fn from_outcomes(grid: &EvalGrid, outcomes: &[ReplicationOutcome]) -> Self {
        let (nx, ny) = grid.shape();
        // Histogram over the cells delimited by the grid, then 2-D prefix sums.
        let mut hist = vec![vec![0u64; ny + 1]; nx + 1];
        for o in outcomes {
            let ix = first_at_or_above(&grid.xs, o.m_perturbed);
            let iy = first_at_or_above(&grid.ys, Some(o.m_original));
            hist[ix][iy] += 1;
        }
        let mut counts = vec![vec![0u64; ny]; nx];
        for i in 0..nx {
            let mut row = 0u64;
            for j in 0..ny {
                row += hist[i][j];
                counts[i][j] = row + if i > 0 { counts[i - 1][j] } else { 0 };
            }
        }
        JointEcdf {
            grid: grid.clone(),
            counts,
            replications: outcomes.len() as u64,
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.counts[i][j] as f64 / self.replications.max(1) as f64
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        (0..self.grid.xs.len())
            .map(|i| (0..self.grid.ys.len()).map(|j| self.value(i, j)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub grid: EvalGrid,
    pub empirical: Vec<Vec<f64>>,
    pub theoretical: Vec<Vec<f64>>,
    /// Empirical minus theoretical.
    pub deviations: Vec<Vec<f64>>,
    /// Binomial standard error `sqrt(v (1 - v) / R)` of each empirical cell.
    pub cell_standard_errors: Vec<Vec<f64>>,
    pub sup_distance: f64,
    /// Largest per-cell standard error.
    pub mc_standard_error: f64,
    pub replications: u64,
}

impl ComparisonReport {
    /// Cell holding the largest absolute deviation.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut worst = -1.0;
        for (i, row) in self.deviations.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                if d.abs() > worst {
                    worst = d.abs();
                    best = (i, j);
                }
            }
        }
        best
    }
}

fn binomial_se(v: f64, r: u64) -> f64 {
    (v * (1.0 - v) / r.max(1) as f64).sqrt()
}

pub fn compare(ecdf: &JointEcdf, surface: &LimitSurface) -> Result<ComparisonReport> {
    if ecdf.grid != surface.grid {
        return Err(Error::GridMismatch(format!(
            "empirical grid {:?} vs theoretical grid {:?}",
            ecdf.grid.shape(),
            surface.grid.shape()
        )));
    }
    let empirical = ecdf.values();
    let theoretical = surface.values.clone();
    let deviations: Vec<Vec<f64>> = empirical
        .iter()
        .zip(&theoretical)
        .map(|(e, t)| e.iter().zip(t).map(|(a, b)| a - b).collect())
        .collect();
    let cell_standard_errors: Vec<Vec<f64>> = empirical
        .iter()
        .map(|row| row.iter().map(|v| binomial_se(*v, ecdf.replications)).collect())
        .collect();
    let sup_distance = deviations.iter().flatten().fold(0.0f64, |m, d| m.max(d.abs()));
    let mc_standard_error = cell_standard_errors.iter().flatten().fold(0.0f64, |m, s| m.max(*s));
    Ok(ComparisonReport {
        grid: ecdf.grid.clone(),
        empirical,
        theoretical,
        deviations,
        cell_standard_errors,
        sup_distance,
        mc_standard_error,
        replications: ecdf.replications,
    })
}

/// One-dimensional marginal comparisons: the perturbed maximum on `xs` and
/// the original maximum on `ys`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalReport {
    pub xs: Vec<f64>,
    pub perturbed_empirical: Vec<f64>,
    pub perturbed_theory: Vec<f64>,
    pub perturbed_sup_distance: f64,
    pub ys: Vec<f64>,
    pub original_empirical: Vec<f64>,
    pub original_theory: Vec<f64>,
    pub original_sup_distance: f64,
    pub replications: u64,
}

fn ecdf_on(axis: &[f64], values: impl Iterator<Item = Option<f64>>, r: u64) -> Vec<f64> {
    let mut hist = vec![0u64; axis.len() + 1];
    for v in values {
        hist[first_at_or_above(axis, v)] += 1;
    }
    let mut acc = 0u64;
    hist[..axis.len()]
        .iter()
        .map(|h| {
            acc += h;
            acc as f64 / r.max(1) as f64
        })
        .collect()
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn marginal_report(
    grid: &EvalGrid,
    outcomes: &[ReplicationOutcome],
    law: &LambdaLaw,
    mode: PerturbationMode,
) -> Result<MarginalReport> {
    let r = outcomes.len() as u64;
    let perturbed_empirical = ecdf_on(&grid.xs, outcomes.iter().map(|o| o.m_perturbed), r);
    let original_empirical = ecdf_on(&grid.ys, outcomes.iter().map(|o| Some(o.m_original)), r);
    let perturbed_theory = grid
        .xs
        .iter()
        .map(|&x| match mode {
            PerturbationMode::Replacing => Ok(gumbel_cdf(x)),
            PerturbationMode::Missing => missing_perturbed_marginal(x, law),
        })
        .collect::<Result<Vec<_>>>()?;
    let original_theory: Vec<f64> = grid.ys.iter().map(|&y| gumbel_cdf(y)).collect();
    Ok(MarginalReport {
        perturbed_sup_distance: sup(&perturbed_empirical, &perturbed_theory),
        original_sup_distance: sup(&original_empirical, &original_theory),
        xs: grid.xs.clone(),
        perturbed_empirical,
        perturbed_theory,
        ys: grid.ys.clone(),
        original_empirical,
        original_theory,
        replications: r,
    })
}
