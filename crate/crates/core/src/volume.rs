//! Monte Carlo probability that a homogeneity constraint is compatible
//! under a uniform prior on three coordinates of a system.

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coords::System;
use crate::error::{Error, Result};
use crate::homogeneity::{supports, Compatibility, CompatibilityQuery, Target};
use crate::parallel::map_chunks;
use crate::table::{in_unit_open, Measure, DEFAULT_GUARD};

/// Uniform prior on a box over the three retained coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub system: System,
    pub bounds: [(f64, f64); 3],
    pub n_samples: u64,
    pub seed: u64,
}

impl PriorSpec {
    /// Default box per system: the unit cube for `prob`, `[-2, 2]³` for
    /// `rr_op`, and `alpha0 ∈ [-1.5, 1.5]`, `e0, e1 ∈ [-1, 1]` for `rr_eta`.
    pub fn default_bounds(system: System) -> Result<[(f64, f64); 3]> {
        match system {
            System::Prob => Ok([(0.0, 1.0); 3]),
            System::RrOp => Ok([(-2.0, 2.0); 3]),
            System::RrEta => Ok([(-1.5, 1.5), (-1.0, 1.0), (-1.0, 1.0)]),
            other => Err(Error::UnsupportedSystem(format!(
                "no prior is defined on system {other}"
            ))),
        }
    }

    pub fn with_default_bounds(system: System, n_samples: u64, seed: u64) -> Result<Self> {
        let spec = PriorSpec {
            system,
            bounds: Self::default_bounds(system)?,
            n_samples,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        Self::default_bounds(self.system)?;
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "bounds[{i}] = ({lo}, {hi}) must be finite with low < high"
                )));
            }
            if self.system == System::Prob && !(lo >= 0.0 && hi <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "bounds[{i}] = ({lo}, {hi}) must lie inside (0, 1) for the prob system"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub probability: f64,
    /// `sqrt(p(1-p)/n)`; exactly 0 when every draw was compatible.
    pub std_error: f64,
    pub n_samples: u64,
    pub n_compatible: u64,
}

impl VolumeEstimate {
    pub fn from_counts(n_compatible: u64, n_samples: u64) -> Self {
        let p = n_compatible as f64 / n_samples as f64;
        VolumeEstimate {
            probability: p,
            std_error: (p * (1.0 - p) / n_samples as f64).sqrt(),
            n_samples,
            n_compatible,
        }
    }
}

/// Parallel Monte Carlo estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Estimator {
    /// Worker threads; `0` uses the rayon default.
    pub workers: usize,
    pub checker: Compatibility,
}

impl Estimator {
    pub fn with_workers(workers: usize) -> Self {
        Estimator {
            workers,
            ..Default::default()
        }
    }

    pub fn estimate(&self, prior: &PriorSpec, target: Target) -> Result<VolumeEstimate> {
        prior.validate()?;
        if !supports(prior.system, target) {
            return Err(Error::UnsupportedSystem(format!(
                "target {target} is not supported under system {}",
                prior.system
            )));
        }
        let bounds = prior.bounds;
        // Uniform draws on [lo, hi); prob draws inside the guard band are redrawn.
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> [f64; 3] {
            std::array::from_fn(|i| {
                let (lo, hi) = bounds[i];
                loop {
                    let x = lo + (hi - lo) * rng.random::<f64>();
                    if prior.system != System::Prob || in_unit_open(x, DEFAULT_GUARD) {
                        break x;
                    }
                }
            })
        };
        let counts = map_chunks(prior.n_samples, prior.seed, self.workers, |range, rng| {
            let mut hits = 0u64;
            for _ in range {
                let q = CompatibilityQuery {
                    system: prior.system,
                    point: draw(rng),
                    target,
                };
                if self.checker.check(&q)? {
                    hits += 1;
                }
            }
            Ok::<u64, Error>(hits)
        })?;
        let n_compatible = counts.into_iter().sum::<Result<u64>>()?;
        Ok(VolumeEstimate::from_counts(n_compatible, prior.n_samples))
    }
}

/// [`Estimator::estimate`] on the default worker pool.
pub fn estimate(prior: &PriorSpec, target: Target) -> Result<VolumeEstimate> {
    Estimator::default().estimate(prior, target)
}

/// Exact compatibility probability under the uniform prior on the unit
/// cube of `(p00, p10, p01)`:
///
/// * RR: `P(p10 p01 < p00) = 1 - E[p10 p01] = 3/4`;
/// * RD: `P(0 < p10 + p01 - p00 < 1) = 1 - 1/6 - 1/6 = 2/3`;
/// * OR: every triple completes, so 1.
pub fn analytic_cube_probability(target: Target) -> Ratio<u64> {
    match target {
        Measure::Rr => Ratio::new(3, 4),
        Measure::Rd => Ratio::new(2, 3),
        Measure::Or => Ratio::from_integer(1),
    }
}
