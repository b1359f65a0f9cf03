//! Normalising constants `(a_n, b_n)` with `u_n(x) = x / a_n + b_n`.
//!
//! The Gaussian, chi and order-statistic recipes are closed forms; the
//! quantile recipe covers other Gumbel-domain marginals through
//! `b_n = F^{-1}(1 - 1/n)` and `a_n = n f(b_n)`.

use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::models::{Marginal, ProcessSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormingFamily {
    Gaussian,
    Chi { d: usize },
    OrderStat { d: usize, r: usize },
    Quantile { marginal: String },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Norming {
    pub a_n: f64,
    pub b_n: f64,
    pub n: usize,
    pub family: NormingFamily,
}

impl Norming {
    pub fn explicit(a_n: f64, b_n: f64, n: usize) -> Result<Self> {
        if !(a_n.is_finite() && a_n > 0.0) {
            return Err(Error::invalid("a_n", format!("must be positive and finite, got {a_n}")));
        }
        if !b_n.is_finite() {
            return Err(Error::invalid("b_n", "must be finite"));
        }
        Ok(Norming {
            a_n,
            b_n,
            n,
            family: NormingFamily::Explicit,
        })
    }

    /// Threshold `u_n(x)`.
    #[inline]
    pub fn level(&self, x: f64) -> f64 {
        x / self.a_n + self.b_n
    }

    /// Inverse of [`Norming::level`]: `a_n (m - b_n)`.
    #[inline]
    pub fn normalize(&self, m: f64) -> f64 {
        self.a_n * (m - self.b_n)
    }
}

fn log_scale(n: usize) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

pub fn gaussian_norming(n: usize) -> Result<Norming> {
    if n <= 2 {
        return Err(Error::Domain(format!("gaussian norming needs n >= 3, got {n}")));
    }
    let a = log_scale(n);
    let nf = n as f64;
    let b = a - (nf.ln().ln() + (4.0 * std::f64::consts::PI).ln()) / (2.0 * a);
    Ok(Norming {
        a_n: a,
        b_n: b,
        n,
        family: NormingFamily::Gaussian,
    })
}

pub fn chi_norming(n: usize, d: usize) -> Result<Norming> {
    if n < 2 {
        return Err(Error::Domain(format!("chi norming needs n >= 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::Domain("chi norming needs d >= 1".into()));
    }
    let a = log_scale(n);
    let half = d as f64 / 2.0;
    // log(2^(1 - d/2) / Gamma(d/2) * a^(d-2)), assembled in log space.
    let log_term = (1.0 - half) * std::f64::consts::LN_2 - ln_gamma(half) + (d as f64 - 2.0) * a.ln();
    Ok(Norming {
        a_n: a,
        b_n: a + log_term / a,
        n,
        family: NormingFamily::Chi { d },
    })
}

fn ln_binomial(d: usize, r: usize) -> f64 {
    ln_gamma(d as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((d - r) as f64 + 1.0)
}

/// Order-statistic constants with leading term `a_n / r` and inner power `(a_n / r)^(-r)`.
pub fn order_stat_norming(n: usize, d: usize, r: usize) -> Result<Norming> {
    if n < 2 {
        return Err(Error::Domain(format!("order-statistic norming needs n >= 2, got {n}")));
    }
    if r == 0 || r > d {
        return Err(Error::Domain(format!("need 1 <= r <= d, got r = {r}, d = {d}")));
    }
    let rf = r as f64;
    let a = (2.0 * rf * (n as f64).ln()).sqrt();
    let lead = a / rf;
    let log_term = ln_binomial(d, r) - 0.5 * rf * (2.0 * std::f64::consts::PI).ln() - rf * lead.ln();
    Ok(Norming {
        a_n: a,
        b_n: lead + log_term / a,
        n,
        family: NormingFamily::OrderStat { d, r },
    })
}

/// Von Mises quantile constants for Gumbel-domain marginals.
pub fn quantile_norming(marginal: &Marginal, n: usize) -> Result<Norming> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "quantile norming needs n >= 2 (F^-1(1 - 1/n) is degenerate), got {n}"
        )));
    }
    let nf = n as f64;
    let (a, b, name) = match marginal {
        Marginal::Exponential => (1.0, nf.ln(), "exponential"),
        Marginal::Normal => {
            let normal = Normal::standard();
            let b = normal.inverse_cdf(1.0 - 1.0 / nf);
            (nf * normal.pdf(b), b, "normal")
        }
        Marginal::Uniform => return Err(Error::UnsupportedMarginal("uniform lies in the Weibull domain".into())),
        Marginal::Frechet | Marginal::Pareto { .. } => {
            return Err(Error::UnsupportedMarginal("heavy-tailed marginal lies in the Frechet domain".into()))
        }
        Marginal::Discrete { .. } => {
            return Err(Error::UnsupportedMarginal("discrete marginals have no max-domain of attraction".into()))
        }
    };
    Ok(Norming {
        a_n: a,
        b_n: b,
        n,
        family: NormingFamily::Quantile { marginal: name.into() },
    })
}

/// The family norming for a process: Gaussian, chi or order-statistic
/// closed forms, and the quantile recipe for iid marginals.
pub fn auto_norming(process: &ProcessSpec, n: usize) -> Result<Norming> {
    match process {
        ProcessSpec::Gaussian { .. } => gaussian_norming(n),
        ProcessSpec::Chi { d, .. } => chi_norming(n, *d),
        ProcessSpec::OrderStat { d, r, .. } => order_stat_norming(n, *d, *r),
        ProcessSpec::GenericIid { marginal } => quantile_norming(marginal, n),
    }
}

/// Quantile recipe applied to a process (Gaussian processes use the standard normal quantile).
pub fn quantile_norming_for(process: &ProcessSpec, n: usize) -> Result<Norming> {
    match process {
        ProcessSpec::Gaussian { .. } => quantile_norming(&Marginal::Normal, n),
        ProcessSpec::GenericIid { marginal } => quantile_norming(marginal, n),
        _ => Err(Error::UnsupportedMarginal(
            "quantile norming is available for Gaussian and iid processes only".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from 40-digit mpmath evaluation of the closed forms.
    const A_100: f64 = 3.034_854_258_770_293;

    #[test]
    fn gaussian_constants() {
        let g = gaussian_norming(100).unwrap();
        assert!((g.a_n - A_100).abs() < 1e-13);
        assert!((g.b_n - 2.366_254_792_906_394).abs() < 1e-12);
        let big = gaussian_norming(1_000_000).unwrap();
        assert!((big.a_n - 5.256_521_769_756_932).abs() < 1e-12);
        assert!((big.b_n - 4.766_005_760_566_718).abs() < 1e-12);
        assert_eq!(g.level(0.0), g.b_n);
    }

    #[test]
    fn gaussian_domain() {
        assert!(matches!(gaussian_norming(2), Err(Error::Domain(_))));
        assert!(gaussian_norming(3).is_ok());
    }

    #[test]
    fn chi_constants() {
        let d1 = chi_norming(100, 1).unwrap();
        assert!((d1.b_n - 2.594_650_333_996_003).abs() < 1e-12);
        let d3 = chi_norming(100, 3).unwrap();
        assert!((d3.b_n - 3.326_259_372_535_966).abs() < 1e-12);
        for n in [10, 5000, 1_000_000] {
            let d2 = chi_norming(n, 2).unwrap();
            assert_eq!(d2.b_n, d2.a_n);
            for d in 1..6 {
                assert_eq!(chi_norming(n, d).unwrap().a_n, gaussian_norming(n).unwrap().a_n);
            }
        }
    }

    #[test]
    fn order_stat_constants() {
        // r = 1, d = 1 reproduces the Gaussian constants; r = 1, d = 2 the chi(1) ones.
        let os11 = order_stat_norming(100, 1, 1).unwrap();
        assert!((os11.b_n - 2.366_254_792_906_394).abs() < 1e-12);
        let os21 = order_stat_norming(100, 2, 1).unwrap();
        assert!((os21.b_n - 2.594_650_333_996_003).abs() < 1e-12);
        let os32 = order_stat_norming(10_000, 3, 2).unwrap();
        assert!((os32.a_n - 6.069_708_517_540_585).abs() < 1e-12);
        assert!((os32.b_n - 2.547_253_976_885_868).abs() < 1e-12);
        assert!((ln_binomial(4, 2).exp() - 6.0).abs() < 1e-12);
        assert!(order_stat_norming(100, 2, 3).is_err());
    }

    #[test]
    fn quantile_constants() {
        let e = quantile_norming(&Marginal::Exponential, 100).unwrap();
        assert!((e.b_n - 100f64.ln()).abs() < 1e-14);
        assert_eq!(e.a_n, 1.0);
        assert!(matches!(quantile_norming(&Marginal::Exponential, 1), Err(Error::Domain(_))));
        assert!(matches!(
            quantile_norming(&Marginal::Uniform, 100),
            Err(Error::UnsupportedMarginal(_))
        ));
        let g = quantile_norming(&Marginal::Normal, 2000).unwrap();
        assert!((g.b_n - 3.290_526_731_491_894).abs() < 1e-9);
        assert!((g.a_n - 3.554_380_693_854_261).abs() < 1e-8);
    }

    #[test]
    fn location_increases_with_n() {
        let families: Vec<Box<dyn Fn(usize) -> Norming>> = vec![
            Box::new(|n| gaussian_norming(n).unwrap()),
            Box::new(|n| chi_norming(n, 1).unwrap()),
            Box::new(|n| chi_norming(n, 3).unwrap()),
            Box::new(|n| order_stat_norming(n, 3, 2).unwrap()),
            Box::new(|n| order_stat_norming(n, 3, 3).unwrap()),
            Box::new(|n| quantile_norming(&Marginal::Exponential, n).unwrap()),
            Box::new(|n| quantile_norming(&Marginal::Normal, n).unwrap()),
        ];
        for f in &families {
            let mut prev = f(10).b_n;
            for n in (11..5000).chain([10_000, 100_000, 1_000_000]) {
                let b = f(n).b_n;
                assert!(b > prev, "b_n not increasing at n = {n}");
                prev = b;
            }
        }
    }

    #[test]
    fn explicit_norming_checks() {
        assert!(Norming::explicit(0.0, 1.0, 10).is_err());
        let e = Norming::explicit(2.0, 1.0, 10).unwrap();
        assert!((e.normalize(e.level(0.7)) - 0.7).abs() < 1e-15);
    }
}
