//! Path generation for every [`ProcessSpec`].
//!
//! A [`ProcessSampler`] is prepared once per `(process, n)` and then draws
//! paths from any [`StreamKey`]. Chi and order-statistic paths are built
//! from `d` consecutive Gaussian paths taken from the same stream.

mod gaussian;
mod stream;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

pub use gaussian::{
    dense_min_eigenvalue, spectral_check, GaussianRoute, GaussianSampler, DENSE_FALLBACK_MAX, SPECTRAL_TOLERANCE,
};
pub use stream::{StreamKey, StreamTag};

use crate::error::Result;
use crate::models::{CovarianceSpec, Marginal, ProcessSpec};

/// One simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub values: Vec<f64>,
    pub process: ProcessSpec,
    pub replication_id: u64,
}

#[derive(Debug, Clone)]
enum Kind {
    Gaussian(GaussianSampler),
    Chi { d: usize, base: GaussianSampler },
    OrderStat { d: usize, r: usize, base: GaussianSampler },
    Iid(IidMarginal),
}

#[derive(Debug, Clone)]
enum IidMarginal {
    Exponential,
    Uniform,
    Frechet,
    Pareto { inv_alpha: f64 },
    Normal,
    Discrete { values: Vec<f64>, cumulative: Vec<f64> },
}

impl IidMarginal {
    fn new(marginal: &Marginal) -> Self {
        match marginal {
            Marginal::Exponential => IidMarginal::Exponential,
            Marginal::Uniform => IidMarginal::Uniform,
            Marginal::Frechet => IidMarginal::Frechet,
            Marginal::Pareto { alpha } => IidMarginal::Pareto { inv_alpha: 1.0 / alpha },
            Marginal::Normal => IidMarginal::Normal,
            Marginal::Discrete { values, probs } => {
                let mut acc = 0.0;
                let mut cumulative: Vec<f64> = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                if let Some(last) = cumulative.last_mut() {
                    *last = f64::INFINITY;
                }
                IidMarginal::Discrete {
                    values: values.clone(),
                    cumulative,
                }
            }
        }
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            IidMarginal::Exponential => rng.sample(Exp1),
            IidMarginal::Uniform => rng.random::<f64>(),
            IidMarginal::Frechet => {
                let u: f64 = rng.sample(Open01);
                -1.0 / u.ln()
            }
            IidMarginal::Pareto { inv_alpha } => {
                let u: f64 = rng.sample(Open01);
                u.powf(-inv_alpha)
            }
            IidMarginal::Normal => rng.sample(StandardNormal),
            IidMarginal::Discrete { values, cumulative } => {
                let u: f64 = rng.random();
                let idx = cumulative.partition_point(|c| *c <= u);
                values[idx]
            }
        }
    }
}

/// Scratch buffers reused across paths on one worker.
#[derive(Debug, Default)]
pub struct Workspace {
    coords: Vec<f64>,
    column: Vec<f64>,
}

/// A path generator for a validated process at a fixed length.
#[derive(Debug, Clone)]
pub struct ProcessSampler {
    process: ProcessSpec,
    n: usize,
    kind: Kind,
}

impl ProcessSampler {
    /// Validates the process at length `n` and prepares the generator.
    pub fn new(process: &ProcessSpec, n: usize) -> Result<Self> {
        process.validate(n)?;
        let kind = match process {
            ProcessSpec::Gaussian { cov } => Kind::Gaussian(GaussianSampler::new(cov, n)?),
            ProcessSpec::Chi { d, cov } => Kind::Chi {
                d: *d,
                base: GaussianSampler::new(cov, n)?,
            },
            ProcessSpec::OrderStat { d, r, cov } => Kind::OrderStat {
                d: *d,
                r: *r,
                base: GaussianSampler::new(cov, n)?,
            },
            ProcessSpec::GenericIid { marginal } => Kind::Iid(IidMarginal::new(marginal)),
        };
        Ok(ProcessSampler {
            process: process.clone(),
            n,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn process(&self) -> &ProcessSpec {
        &self.process
    }

    /// Route of the underlying Gaussian generator, if any.
    pub fn gaussian_route(&self) -> Option<GaussianRoute> {
        match &self.kind {
            Kind::Gaussian(g) | Kind::Chi { base: g, .. } | Kind::OrderStat { base: g, .. } => Some(g.route()),
            Kind::Iid(_) => None,
        }
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::default()
    }

    /// Fills `out` (length `n`) with one path drawn from `rng`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, ws: &mut Workspace, out: &mut [f64]) {
        let n = self.n;
        assert_eq!(out.len(), n);
        match &self.kind {
            Kind::Gaussian(g) => g.sample_into(rng, out),
            Kind::Iid(m) => out.iter_mut().for_each(|v| *v = m.draw(rng)),
            Kind::Chi { d, base } => {
                ws.coords.resize(n, 0.0);
                out.fill(0.0);
                for _ in 0..*d {
                    base.sample_into(rng, &mut ws.coords);
                    for (acc, y) in out.iter_mut().zip(&ws.coords) {
                        *acc += y * y;
                    }
                }
                out.iter_mut().for_each(|v| *v = v.sqrt());
            }
            Kind::OrderStat { d, r, base } => {
                let (d, r) = (*d, *r);
                ws.coords.resize(d * n, 0.0);
                for j in 0..d {
                    base.sample_into(rng, &mut ws.coords[j * n..(j + 1) * n]);
                }
                ws.column.resize(d, 0.0);
                for (t, v) in out.iter_mut().enumerate() {
                    for j in 0..d {
                        ws.column[j] = ws.coords[j * n + t];
                    }
                    // r-th largest = element at index r - 1 in descending order.
                    let (_, kth, _) = ws.column.select_nth_unstable_by(r - 1, |a, b| b.total_cmp(a));
                    *v = *kth;
                }
            }
        }
    }

    /// Draws the path for one stream key.
    pub fn path(&self, key: StreamKey) -> Path {
        let mut values = vec![0.0; self.n];
        self.sample_into(&mut key.rng(), &mut self.workspace(), &mut values);
        Path {
            values,
            process: self.process.clone(),
            replication_id: key.replication,
        }
    }
}

pub fn sample_gaussian_path(cov: &CovarianceSpec, n: usize, key: StreamKey) -> Result<Path> {
    Ok(ProcessSampler::new(&ProcessSpec::Gaussian { cov: cov.clone() }, n)?.path(key))
}

pub fn sample_chi_path(d: usize, cov: &CovarianceSpec, n: usize, key: StreamKey) -> Result<Path> {
    Ok(ProcessSampler::new(&ProcessSpec::Chi { d, cov: cov.clone() }, n)?.path(key))
}

pub fn sample_order_stat_path(d: usize, r: usize, cov: &CovarianceSpec, n: usize, key: StreamKey) -> Result<Path> {
    Ok(ProcessSampler::new(&ProcessSpec::OrderStat { d, r, cov: cov.clone() }, n)?.path(key))
}

pub fn sample_generic_iid_path(marginal: &Marginal, n: usize, key: StreamKey) -> Result<Path> {
    Ok(ProcessSampler::new(&ProcessSpec::GenericIid { marginal: marginal.clone() }, n)?.path(key))
}
