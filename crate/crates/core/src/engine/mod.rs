//! Replicated simulation of `(M_n(perturbed), M_n(original))` and its
//! comparison with the limit laws.
//!
//! Every replication draws from its own counter-based streams, so outcomes
//! depend only on `(seed, replication id, spec)`; worker count changes the
//! schedule, never the numbers.

mod dprime;
mod ecdf;
mod oracle;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::Serialize;

pub use dprime::{dprime_curve, dprime_diagnostic, DPrimePoint};
pub use ecdf::{compare, marginal_report, ComparisonReport, JointEcdf, MarginalReport};
pub use oracle::{brute_force_joint_cdf, ENUMERATION_LIMIT};

use crate::error::{Error, Result};
use crate::models::{EvalGrid, LambdaLaw, PerturbationMode, ProcessSpec, SelectionScheme, SelectionSpec};
use crate::norming::Norming;
use crate::samplers::{ProcessSampler, StreamKey, StreamTag, Workspace};

/// Normalised maxima of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationOutcome {
    /// `a_n (M_n(perturbed) - b_n)`; `None` when no index was observed in
    /// missing mode, i.e. the maximum lies below every threshold.
    pub m_perturbed: Option<f64>,
    pub m_original: f64,
    pub realized_lambda: f64,
    pub s_n_over_n: f64,
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub process: ProcessSpec,
    pub selection: SelectionSpec,
    pub mode: PerturbationMode,
    pub n: usize,
    pub replications: u64,
    pub grid: EvalGrid,
    pub seed: u64,
    pub norming: Norming,
}

#[derive(Default)]
struct Buffers {
    workspace: Workspace,
    base: Vec<f64>,
    copy: Vec<f64>,
    observed: Vec<bool>,
}

/// A validated, prepared simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    sampler: ProcessSampler,
    selection: SelectionSpec,
    mode: PerturbationMode,
    norming: Norming,
    seed: u64,
    lambda_beta: Option<Beta<f64>>,
}

impl Simulation {
    pub fn new(
        process: &ProcessSpec,
        selection: &SelectionSpec,
        mode: PerturbationMode,
        n: usize,
        norming: Norming,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        selection.validate()?;
        let lambda_beta = match selection.lambda_law {
            LambdaLaw::Beta { alpha, beta } => {
                Some(Beta::new(alpha, beta).map_err(|e| Error::invalid("lambda", e.to_string()))?)
            }
            _ => None,
        };
        Ok(Simulation {
            sampler: ProcessSampler::new(process, n)?,
            selection: selection.clone(),
            mode,
            norming,
            seed,
            lambda_beta,
        })
    }

    pub fn from_spec(spec: &ExperimentSpec) -> Result<Self> {
        if spec.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        Simulation::new(
            &spec.process,
            &spec.selection,
            spec.mode,
            spec.n,
            spec.norming.clone(),
            spec.seed,
        )
    }

    pub fn n(&self) -> usize {
        self.sampler.len()
    }

    pub fn sampler(&self) -> &ProcessSampler {
        &self.sampler
    }

    fn draw_lambda(&self, key: StreamKey) -> f64 {
        let mut rng = key.with_tag(StreamTag::Lambda).rng();
        match &self.selection.lambda_law {
            LambdaLaw::PointMass { p } => *p,
            LambdaLaw::Uniform01 => rng.random::<f64>(),
            LambdaLaw::Beta { .. } => self.lambda_beta.as_ref().expect("beta law prepared").sample(&mut rng),
            LambdaLaw::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated nonempty")
            }
        }
    }

    fn replicate_with(&self, replication: u64, buf: &mut Buffers) -> ReplicationOutcome {
        let n = self.n();
        let key = StreamKey::new(self.seed, replication, StreamTag::BasePath);

        let lambda = match &self.selection.scheme {
            SelectionScheme::ConditionallyIid => self.draw_lambda(key),
            SelectionScheme::PeriodicPattern { .. } => self.selection.lambda_law.mean(),
        };
        buf.observed.resize(n, false);
        match &self.selection.scheme {
            SelectionScheme::ConditionallyIid => {
                let mut rng = key.with_tag(StreamTag::Selection).rng();
                for e in buf.observed.iter_mut() {
                    *e = rng.random::<f64>() < lambda;
                }
            }
            SelectionScheme::PeriodicPattern { bits } => {
                for (i, e) in buf.observed.iter_mut().enumerate() {
                    *e = bits[i % bits.len()];
                }
            }
        }
        let observed_count = buf.observed.iter().filter(|e| **e).count();

        buf.base.resize(n, 0.0);
        self.sampler.sample_into(&mut key.rng(), &mut buf.workspace, &mut buf.base);
        let original = buf.base.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let perturbed = match self.mode {
            PerturbationMode::Missing => buf
                .base
                .iter()
                .zip(&buf.observed)
                .filter(|(_, e)| **e)
                .map(|(v, _)| *v)
                .reduce(f64::max),
            PerturbationMode::Replacing if observed_count == n => Some(original),
            PerturbationMode::Replacing => {
                buf.copy.resize(n, 0.0);
                let mut rng = key.with_tag(StreamTag::ReplacingCopy).rng();
                self.sampler.sample_into(&mut rng, &mut buf.workspace, &mut buf.copy);
                buf.base
                    .iter()
                    .zip(&buf.copy)
                    .zip(&buf.observed)
                    .map(|((x, xc), e)| if *e { *x } else { *xc })
                    .reduce(f64::max)
            }
        };

        ReplicationOutcome {
            m_perturbed: perturbed.map(|m| self.norming.normalize(m)),
            m_original: self.norming.normalize(original),
            realized_lambda: lambda,
            s_n_over_n: observed_count as f64 / n as f64,
        }
    }

    /// One replication, keyed by its id.
    pub fn replicate(&self, replication: u64) -> ReplicationOutcome {
        self.replicate_with(replication, &mut Buffers::default())
    }

    /// Replications `0..replications`, in id order, on `workers` threads.
    pub fn run(&self, replications: u64, workers: usize) -> Result<Vec<ReplicationOutcome>> {
        let pool = thread_pool(workers)?;
        Ok(pool.install(|| {
            (0..replications)
                .into_par_iter()
                .map_init(Buffers::default, |buf, rep| self.replicate_with(rep, buf))
                .collect()
        }))
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}

/// Single replication from an explicit stream key.
pub fn run_replication(
    process: &ProcessSpec,
    selection: &SelectionSpec,
    mode: PerturbationMode,
    n: usize,
    norming: &Norming,
    key: StreamKey,
) -> Result<ReplicationOutcome> {
    let sim = Simulation::new(process, selection, mode, n, norming.clone(), key.seed)?;
    Ok(sim.replicate(key.replication))
}

/// Runs the experiment and tallies the joint empirical distribution function.
pub fn estimate_joint_cdf(spec: &ExperimentSpec, workers: usize) -> Result<JointEcdf> {
    let outcomes = Simulation::from_spec(spec)?.run(spec.replications, workers)?;
    Ok(JointEcdf::from_outcomes(&spec.grid, &outcomes))
}

/// Runs the experiment and compares both one-dimensional marginals with their limits.
pub fn marginal_check(spec: &ExperimentSpec, workers: usize) -> Result<MarginalReport> {
    let outcomes = Simulation::from_spec(spec)?.run(spec.replications, workers)?;
    marginal_report(&spec.grid, &outcomes, &spec.selection.lambda_law, spec.mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CovarianceSpec, Marginal};
    use crate::norming::gaussian_norming;

    fn gaussian() -> ProcessSpec {
        ProcessSpec::Gaussian { cov: CovarianceSpec::Iid }
    }

    #[test]
    fn all_observed_gives_identical_maxima() {
        let sel = SelectionSpec::pattern(&[true]);
        for mode in [PerturbationMode::Replacing, PerturbationMode::Missing] {
            let sim = Simulation::new(&gaussian(), &sel, mode, 50, gaussian_norming(50).unwrap(), 1).unwrap();
            for rep in 0..20 {
                let o = sim.replicate(rep);
                assert_eq!(o.m_perturbed, Some(o.m_original));
                assert_eq!(o.s_n_over_n, 1.0);
            }
        }
        let iid_one = SelectionSpec::iid(LambdaLaw::PointMass { p: 1.0 });
        let sim = Simulation::new(&gaussian(), &iid_one, PerturbationMode::Replacing, 50, gaussian_norming(50).unwrap(), 1)
            .unwrap();
        let o = sim.replicate(3);
        assert_eq!(o.m_perturbed, Some(o.m_original));
    }

    #[test]
    fn all_missing_is_below_everything() {
        let sel = SelectionSpec::pattern(&[false]);
        let sim = Simulation::new(&gaussian(), &sel, PerturbationMode::Missing, 10, gaussian_norming(10).unwrap(), 1).unwrap();
        let o = sim.replicate(0);
        assert_eq!(o.m_perturbed, None);
        assert_eq!(o.s_n_over_n, 0.0);
    }

    #[test]
    fn missing_never_exceeds_original() {
        let sel = SelectionSpec::iid(LambdaLaw::Uniform01);
        let proc = ProcessSpec::Chi { d: 2, cov: CovarianceSpec::Ar1 { rho: 0.4 } };
        let sim = Simulation::new(&proc, &sel, PerturbationMode::Missing, 200, Norming::explicit(1.5, 2.0, 200).unwrap(), 9)
            .unwrap();
        for o in sim.run(500, 2).unwrap() {
            if let Some(p) = o.m_perturbed {
                assert!(p <= o.m_original);
            }
        }
    }

    #[test]
    fn run_replication_matches_simulation() {
        let sel = SelectionSpec::iid(LambdaLaw::Uniform01);
        let norming = gaussian_norming(100).unwrap();
        let key = StreamKey::new(5, 17, StreamTag::BasePath);
        let a = run_replication(&gaussian(), &sel, PerturbationMode::Replacing, 100, &norming, key).unwrap();
        let sim = Simulation::new(&gaussian(), &sel, PerturbationMode::Replacing, 100, norming, 5).unwrap();
        assert_eq!(a, sim.replicate(17));
    }

    #[test]
    fn worker_count_does_not_change_outcomes() {
        let sel = SelectionSpec::iid(LambdaLaw::Beta { alpha: 2.0, beta: 2.0 });
        let proc = ProcessSpec::Gaussian { cov: CovarianceSpec::PowerDecay { gamma: 1.5, scale: 0.4 } };
        let sim = Simulation::new(&proc, &sel, PerturbationMode::Replacing, 128, gaussian_norming(128).unwrap(), 77).unwrap();
        assert_eq!(sim.run(300, 1).unwrap(), sim.run(300, 4).unwrap());
    }

    #[test]
    fn realized_lambda_follows_the_law() {
        let values = vec![0.2, 0.9];
        let sel = SelectionSpec::iid(LambdaLaw::Discrete { values: values.clone(), probs: vec![0.5, 0.5] });
        let proc = ProcessSpec::GenericIid { marginal: Marginal::Exponential };
        let sim = Simulation::new(&proc, &sel, PerturbationMode::Replacing, 2000, Norming::explicit(1.0, 0.0, 2000).unwrap(), 3)
            .unwrap();
        let out = sim.run(400, 1).unwrap();
        for o in &out {
            assert!(values.contains(&o.realized_lambda));
            assert!((o.s_n_over_n - o.realized_lambda).abs() < 0.06);
        }
    }

    #[test]
    fn zero_replications_rejected() {
        let spec = ExperimentSpec {
            process: gaussian(),
            selection: SelectionSpec::iid(LambdaLaw::Uniform01),
            mode: PerturbationMode::Replacing,
            n: 10,
            replications: 0,
            grid: EvalGrid::new(vec![0.0], vec![0.0]).unwrap(),
            seed: 0,
            norming: gaussian_norming(10).unwrap(),
        };
        assert!(estimate_joint_cdf(&spec, 1).is_err());
    }
}
