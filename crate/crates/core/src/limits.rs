//! Closed-form limit laws for the normalised maxima pair
//! `(M_n(perturbed), M_n(original))` with a Gumbel limit `G`.
//!
//! Every law reduces to an expectation `E[exp(c0 + c1 * Λ)]` over the
//! observation-rate law, which is exact for point-mass, uniform and discrete
//! laws and computed by adaptive Simpson quadrature for Beta laws.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::Result;
use crate::models::{EvalGrid, LambdaLaw, PerturbationMode};
use crate::quadrature::{adaptive_simpson, DEFAULT_TOLERANCE, MAX_INTERVALS};

/// Standard Gumbel distribution function `exp(-exp(-x))`.
#[inline]
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// `E[exp(c0 + c1 * Λ)]` for `Λ` distributed by `law`.
pub fn expected_exp_affine(law: &LambdaLaw, c0: f64, c1: f64) -> Result<f64> {
    let h = |l: f64| (c0 + c1 * l).exp();
    match law {
        LambdaLaw::PointMass { p } => Ok(h(*p)),
        LambdaLaw::Uniform01 => {
            // (e^{hi} - e^{lo}) / |c1| written as e^{hi} (1 - e^{-k}) / k.
            let hi = c0.max(c0 + c1);
            let k = c1.abs();
            let ratio = if k < 1e-12 { 1.0 - 0.5 * k } else { -(-k).exp_m1() / k };
            Ok(hi.exp() * ratio)
        }
        LambdaLaw::Discrete { values, probs } => Ok(values.iter().zip(probs).map(|(v, p)| p * h(*v)).sum()),
        LambdaLaw::Beta { alpha, beta } => {
            if c1 == 0.0 {
                return Ok(c0.exp());
            }
            // Integration by parts against the distribution function keeps the
            // integrand bounded even when the density is not:
            // E h(Λ) = h(1) - c1 ∫ h(l) F(l) dl.
            let (a, b) = (*alpha, *beta);
            let integrand = |l: f64| {
                let cdf = if l <= 0.0 {
                    0.0
                } else if l >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, l)
                };
                h(l) * cdf
            };
            let tol = DEFAULT_TOLERANCE / c1.abs().max(1.0);
            let integral = adaptive_simpson(integrand, 0.0, 1.0, tol, MAX_INTERVALS)?;
            Ok((h(1.0) - c1 * integral).max(0.0))
        }
    }
}

/// `E[G(x)^(1 - Λ)]`.
pub fn expected_survival_power(x: f64, law: &LambdaLaw) -> Result<f64> {
    let t = (-x).exp();
    expected_exp_affine(law, -t, t)
}

/// Joint limit under random replacing: `G(min(x, y)) E[G(max(x, y))^(1 - Λ)]`.
pub fn replacing_limit(x: f64, y: f64, law: &LambdaLaw) -> Result<f64> {
    Ok(gumbel_cdf(x.min(y)) * expected_survival_power(x.max(y), law)?)
}

/// Joint limit under random missing: `E[G(min(x, y))^Λ G(y)^(1 - Λ)]`.
///
/// For `x < y` this is the classical form; for `x >= y` the observed maximum
/// can never exceed the full one, so the observed block only has to clear `y`.
pub fn missing_limit(x: f64, y: f64, law: &LambdaLaw) -> Result<f64> {
    let s = (-x.min(y)).exp();
    let t = (-y).exp();
    expected_exp_affine(law, -t, t - s)
}

/// Limit of the perturbed maximum alone under random missing: `E[G(x)^Λ]`.
pub fn missing_perturbed_marginal(x: f64, law: &LambdaLaw) -> Result<f64> {
    expected_exp_affine(law, 0.0, -(-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitLaw {
    Replacing,
    MissingConstant,
    MissingRandom,
    Marginal,
}

/// Theoretical joint distribution function on a grid; `values[i][j]` is the
/// value at `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSurface {
    pub grid: EvalGrid,
    pub values: Vec<Vec<f64>>,
    pub law: LimitLaw,
}

pub fn limit_surface(grid: &EvalGrid, law: &LambdaLaw, mode: PerturbationMode) -> Result<LimitSurface> {
    let tag = match (mode, law) {
        (PerturbationMode::Replacing, _) => LimitLaw::Replacing,
        (PerturbationMode::Missing, LambdaLaw::PointMass { .. }) => LimitLaw::MissingConstant,
        (PerturbationMode::Missing, _) => LimitLaw::MissingRandom,
    };
    let values = grid
        .xs
        .iter()
        .map(|&x| {
            grid.ys
                .iter()
                .map(|&y| match mode {
                    PerturbationMode::Replacing => replacing_limit(x, y, law),
                    PerturbationMode::Missing => missing_limit(x, y, law),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitSurface {
        grid: grid.clone(),
        values,
        law: tag,
    })
}
