//! Declarative descriptions of the processes, covariances, selection
//! sequences and evaluation grids that every other module consumes.
//!
//! All types here are plain immutable values. `validate` methods are pure:
//! they either accept a spec (returning derived metadata) or reject it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::samplers::{dense_min_eigenvalue, spectral_check, DENSE_FALLBACK_MAX, SPECTRAL_TOLERANCE};

/// Tolerance for probability vectors summing to one.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// Whether the long-range mixing requirement (`r_k log k -> 0`) is known to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    Asserted,
    Unverified,
}

/// Covariance sequence `r_k = Cov(Y_1, Y_{1+k})` of a unit-variance stationary Gaussian sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovarianceSpec {
    Iid,
    Ar1 { rho: f64 },
    /// `r_k = scale * (1 + k)^(-gamma)` for `k >= 1`.
    PowerDecay { gamma: f64, scale: f64 },
    /// Moving average of order `m` with `m + 1` weights, normalised to unit variance.
    MDependent { m: usize, weights: Vec<f64> },
    /// `r[0] = 1`; lags beyond the list are zero.
    Explicit { r: Vec<f64> },
}

impl CovarianceSpec {
    /// Covariance at lag `k`.
    pub fn lag(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match self {
            CovarianceSpec::Iid => 0.0,
            CovarianceSpec::Ar1 { rho } => rho.powi(k.min(i32::MAX as usize) as i32),
            CovarianceSpec::PowerDecay { gamma, scale } => scale * (1.0 + k as f64).powf(-gamma),
            CovarianceSpec::MDependent { weights, .. } => {
                let norm: f64 = weights.iter().map(|w| w * w).sum();
                if k >= weights.len() {
                    return 0.0;
                }
                let cross: f64 = weights.iter().zip(&weights[k..]).map(|(a, b)| a * b).sum();
                cross / norm
            }
            CovarianceSpec::Explicit { r } => r.get(k).copied().unwrap_or(0.0),
        }
    }

    /// Accepts or rejects the covariance. `check_len` is the path length at
    /// which an explicit sequence is tested for positive semidefiniteness.
    pub fn validate(&self, check_len: usize) -> Result<Mixing> {
        match self {
            CovarianceSpec::Iid => Ok(Mixing::Asserted),
            CovarianceSpec::Ar1 { rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(Error::invalid("rho", format!("must lie in (-1, 1), got {rho}")));
                }
                Ok(Mixing::Asserted)
            }
            CovarianceSpec::PowerDecay { gamma, scale } => {
                if !gamma.is_finite() || *gamma <= 0.0 {
                    return Err(Error::invalid("gamma", format!("must be positive, got {gamma}")));
                }
                if !scale.is_finite() || scale.abs() * 2f64.powf(-gamma) > 1.0 {
                    return Err(Error::invalid(
                        "scale",
                        format!("|scale| * 2^-gamma must not exceed 1, got scale {scale}"),
                    ));
                }
                Ok(Mixing::Asserted)
            }
            CovarianceSpec::MDependent { m, weights } => {
                if *m == 0 {
                    return Err(Error::invalid("m", "must be a positive integer"));
                }
                if weights.len() != m + 1 {
                    return Err(Error::invalid(
                        "weights",
                        format!("expected m + 1 = {} weights, got {}", m + 1, weights.len()),
                    ));
                }
                if weights.iter().any(|w| !w.is_finite()) || weights.iter().all(|w| *w == 0.0) {
                    return Err(Error::invalid("weights", "must be finite and not all zero"));
                }
                Ok(Mixing::Asserted)
            }
            CovarianceSpec::Explicit { r } => {
                if r.first() != Some(&1.0) {
                    return Err(Error::invalid("acf", "first entry must be exactly 1"));
                }
                if let Some(bad) = r.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
                    return Err(Error::invalid("acf", format!("entries must satisfy |r_k| <= 1, got {bad}")));
                }
                let n = check_len.max(2);
                let min_eig = spectral_check(self, n);
                if min_eig < -SPECTRAL_TOLERANCE {
                    let dense = if n <= DENSE_FALLBACK_MAX {
                        dense_min_eigenvalue(self, n)
                    } else {
                        min_eig
                    };
                    if dense < -SPECTRAL_TOLERANCE {
                        return Err(Error::NonPsdCovariance { n, min_eigenvalue: dense });
                    }
                }
                Ok(Mixing::Unverified)
            }
        }
    }
}

/// Continuous (or, for oracle testing, finite discrete) marginals for iid processes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Marginal {
    Exponential,
    Uniform,
    /// Unit Fréchet, `F(x) = exp(-1/x)`.
    Frechet,
    /// `F(x) = 1 - x^(-alpha)` on `x >= 1`.
    Pareto { alpha: f64 },
    /// Standard normal, so that Gaussian iid data can be normed by quantiles.
    Normal,
    /// Finite support; used by the enumeration oracle.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl Marginal {
    /// Builds a marginal from its configuration name.
    pub fn from_name(name: &str, alpha: Option<f64>, values: Option<Vec<f64>>, probs: Option<Vec<f64>>) -> Result<Self> {
        match name {
            "exponential" => Ok(Marginal::Exponential),
            "uniform" => Ok(Marginal::Uniform),
            "frechet" => Ok(Marginal::Frechet),
            "normal" => Ok(Marginal::Normal),
            "pareto" => Ok(Marginal::Pareto {
                alpha: alpha.ok_or_else(|| Error::invalid("alpha", "pareto marginal needs alpha"))?,
            }),
            "discrete" => Ok(Marginal::Discrete {
                values: values.ok_or_else(|| Error::invalid("support", "discrete marginal needs support"))?,
                probs: probs.ok_or_else(|| Error::invalid("probs", "discrete marginal needs probs"))?,
            }),
            other => Err(Error::UnknownMarginal(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Marginal::Pareto { alpha } if !(alpha.is_finite() && *alpha > 0.0) => {
                Err(Error::invalid("alpha", format!("must be positive, got {alpha}")))
            }
            Marginal::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::invalid("support", "support and probs must be nonempty and of equal length"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("support", "values must be finite"));
                }
                check_probs(probs)
            }
            _ => Ok(()),
        }
    }
}

/// Which stationary sequence to simulate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProcessSpec {
    Gaussian { cov: CovarianceSpec },
    /// Pointwise Euclidean norm of `d` independent copies of a Gaussian sequence.
    Chi { d: usize, cov: CovarianceSpec },
    /// Pointwise `r`-th largest of `d` independent copies of a Gaussian sequence.
    OrderStat { d: usize, r: usize, cov: CovarianceSpec },
    GenericIid { marginal: Marginal },
}

impl ProcessSpec {
    pub fn validate(&self, n: usize) -> Result<Mixing> {
        match self {
            ProcessSpec::Gaussian { cov } => cov.validate(n),
            ProcessSpec::Chi { d, cov } => {
                if *d == 0 {
                    return Err(Error::invalid("d", "must be at least 1"));
                }
                cov.validate(n)
            }
            ProcessSpec::OrderStat { d, r, cov } => {
                if *d == 0 {
                    return Err(Error::invalid("d", "must be at least 1"));
                }
                if *r == 0 || r > d {
                    return Err(Error::invalid("r", format!("must satisfy 1 <= r <= d = {d}, got {r}")));
                }
                cov.validate(n)
            }
            ProcessSpec::GenericIid { marginal } => {
                marginal.validate()?;
                Ok(Mixing::Asserted)
            }
        }
    }

    /// The underlying Gaussian covariance, if any.
    pub fn covariance(&self) -> Option<&CovarianceSpec> {
        match self {
            ProcessSpec::Gaussian { cov } | ProcessSpec::Chi { cov, .. } | ProcessSpec::OrderStat { cov, .. } => Some(cov),
            ProcessSpec::GenericIid { .. } => None,
        }
    }
}

/// Law of the limiting observation rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaLaw {
    PointMass { p: f64 },
    Uniform01,
    Beta { alpha: f64, beta: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl LambdaLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            LambdaLaw::PointMass { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
                }
            }
            LambdaLaw::Uniform01 => {}
            LambdaLaw::Beta { alpha, beta } => {
                for (name, v) in [("alpha", alpha), ("beta", beta)] {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(Error::invalid(name, format!("must be positive, got {v}")));
                    }
                }
            }
            LambdaLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::invalid("values", "values and probs must be nonempty and of equal length"));
                }
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::invalid("values", format!("support must lie in [0, 1], got {v}")));
                }
                check_probs(probs)?;
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            LambdaLaw::PointMass { p } => *p,
            LambdaLaw::Uniform01 => 0.5,
            LambdaLaw::Beta { alpha, beta } => alpha / (alpha + beta),
            LambdaLaw::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid("probs", "probabilities must be nonnegative"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::invalid("probs", format!("must sum to 1, got {total}")));
    }
    Ok(())
}

/// How the Bernoulli observation indicators are produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectionScheme {
    /// Draw `Λ` once per replication, then indicators iid Bernoulli(`Λ`).
    ConditionallyIid,
    /// A fixed 0/1 pattern repeated along the path.
    PeriodicPattern { bits: Vec<bool> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSpec {
    pub lambda_law: LambdaLaw,
    pub scheme: SelectionScheme,
}

impl SelectionSpec {
    pub fn iid(lambda_law: LambdaLaw) -> Self {
        SelectionSpec {
            lambda_law,
            scheme: SelectionScheme::ConditionallyIid,
        }
    }

    /// Periodic pattern with the matching point-mass law.
    pub fn pattern(bits: &[bool]) -> Self {
        let ones = bits.iter().filter(|b| **b).count();
        SelectionSpec {
            lambda_law: LambdaLaw::PointMass {
                p: ones as f64 / bits.len().max(1) as f64,
            },
            scheme: SelectionScheme::PeriodicPattern { bits: bits.to_vec() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda_law.validate()?;
        if let SelectionScheme::PeriodicPattern { bits } = &self.scheme {
            if bits.is_empty() {
                return Err(Error::invalid("pattern", "must be nonempty"));
            }
            let mean = bits.iter().filter(|b| **b).count() as f64 / bits.len() as f64;
            match self.lambda_law {
                LambdaLaw::PointMass { p } if (p - mean).abs() <= PROB_SUM_TOLERANCE => {}
                _ => {
                    return Err(Error::invalid(
                        "pattern",
                        format!("periodic pattern requires a point-mass lambda equal to the pattern mean {mean}"),
                    ))
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// Unobserved values are replaced by an independent copy of the process.
    Replacing,
    /// Unobserved values are dropped (pushed to the lower endpoint of the support).
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl EvalGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("xs", &xs), ("ys", &ys)] {
            if axis.is_empty() {
                return Err(Error::invalid(name, "grid axis must be nonempty"));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(name, "grid values must be finite"));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(name, "grid values must be strictly increasing"));
            }
        }
        Ok(EvalGrid { xs, ys })
    }

    /// Square grid `start, start + step, ..., stop` on both axes.
    pub fn square(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
            return Err(Error::invalid("grid", "need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let axis: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
        EvalGrid::new(axis.clone(), axis)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.xs.len(), self.ys.len())
    }
}
