//! Repeated-sampling power of Wald interaction tests on three link scales.
//!
//! Each replicate draws binomial event counts for the four cells, estimates
//! the interaction contrast on the chosen scale from the cell proportions,
//! and divides it by its delta-method standard error. The two-sided p-value
//! uses the standard normal reference.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::parallel::map_chunks;
use crate::table::RiskTable;

/// Link scale of the interaction contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Risk differences.
    Identity,
    /// Log relative risks.
    Log,
    /// Log odds ratios.
    Logit,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::Identity, Scale::Log, Scale::Logit];

    pub fn name(self) -> &'static str {
        match self {
            Scale::Identity => "identity",
            Scale::Log => "log",
            Scale::Logit => "logit",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scale::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scale {s:?}")))
    }
}

/// Per-cell sample sizes, indexed `(v, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub n: [[u64; 2]; 2],
}

impl StudyDesign {
    pub fn new(n: [[u64; 2]; 2]) -> Result<Self> {
        if n.iter().flatten().any(|&x| x == 0) {
            return Err(Error::InvalidArgument("every cell needs at least one subject".into()));
        }
        Ok(StudyDesign { n })
    }

    pub fn balanced(n: u64) -> Result<Self> {
        Self::new([[n; 2]; 2])
    }

    /// `n00/n01/n10/n11`, as used in CSV output.
    pub fn pattern(&self) -> String {
        let n = self.n;
        format!("{}/{}/{}/{}", n[0][0], n[0][1], n[1][0], n[1][1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub events: [[u64; 2]; 2],
    pub totals: [[u64; 2]; 2],
}

impl CellCounts {
    pub fn new(events: [[u64; 2]; 2], totals: [[u64; 2]; 2]) -> Result<Self> {
        for v in 0..2 {
            for a in 0..2 {
                if totals[v][a] == 0 || events[v][a] > totals[v][a] {
                    return Err(Error::InvalidArgument(format!(
                        "cell ({v},{a}) has {} events out of {}",
                        events[v][a], totals[v][a]
                    )));
                }
            }
        }
        Ok(CellCounts { events, totals })
    }

    /// One binomial draw per cell, in the order (0,0), (0,1), (1,0), (1,1).
    pub fn sample<R: Rng + ?Sized>(truth: &RiskTable, design: &StudyDesign, rng: &mut R) -> Self {
        let mut events = [[0u64; 2]; 2];
        for v in 0..2 {
            for a in 0..2 {
                let binom = Binomial::new(design.n[v][a], truth.get(v, a))
                    .expect("risk table entries are valid probabilities");
                events[v][a] = binom.sample(rng);
            }
        }
        CellCounts {
            events,
            totals: design.n,
        }
    }

    /// Proportions and cell sizes on `scale`. Log and logit scales add 0.5
    /// to the events and 1 to the total of any cell at 0 or n.
    fn cells(&self, scale: Scale) -> [[(f64, f64); 2]; 2] {
        std::array::from_fn(|v| {
            std::array::from_fn(|a| {
                let (e, n) = (self.events[v][a] as f64, self.totals[v][a] as f64);
                let boundary = self.events[v][a] == 0 || self.events[v][a] == self.totals[v][a];
                if scale != Scale::Identity && boundary {
                    ((e + 0.5) / (n + 1.0), n + 1.0)
                } else {
                    (e / n, n)
                }
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldTest {
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided `P(|Z| > |z|)` for standard normal `Z`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Wald test of zero interaction on `scale`.
pub fn wald_interaction(counts: &CellCounts, scale: Scale) -> Result<WaldTest> {
    let cells = counts.cells(scale);
    let link = |p: f64| match scale {
        Scale::Identity => p,
        Scale::Log => p.ln(),
        Scale::Logit => (p / (1.0 - p)).ln(),
    };
    let variance = |p: f64, n: f64| match scale {
        Scale::Identity => p * (1.0 - p) / n,
        Scale::Log => (1.0 - p) / (n * p),
        Scale::Logit => 1.0 / (n * p * (1.0 - p)),
    };
    if scale != Scale::Identity {
        if let Some((p, _)) = cells.iter().flatten().find(|(p, _)| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::Degenerate(format!("adjusted proportion {p} on the {scale} scale")));
        }
    }
    let l = |v: usize, a: usize| link(cells[v][a].0);
    let estimate = (l(1, 1) - l(1, 0)) - (l(0, 1) - l(0, 0));
    let var: f64 = cells.iter().flatten().map(|&(p, n)| variance(p, n)).sum();
    let std_error = var.sqrt();
    if !(std_error > 0.0 && std_error.is_finite() && estimate.is_finite()) {
        return Err(Error::Degenerate(format!(
            "standard error {std_error} on the {scale} scale"
        )));
    }
    let z = estimate / std_error;
    Ok(WaldTest {
        estimate,
        std_error,
        z,
        p_value: two_sided_normal_p(z),
    })
}

pub fn wald_interaction_pvalue(counts: &CellCounts, scale: Scale) -> Result<f64> {
    wald_interaction(counts, scale).map(|t| t.p_value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleResult {
    pub scale: Scale,
    /// Rejections over non-degenerate replicates.
    pub rejection_rate: f64,
    pub std_error: f64,
    pub rejections: u64,
    /// Replicates whose counts admitted the test.
    pub evaluated: u64,
    pub degenerate: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub truth: RiskTable,
    pub design: StudyDesign,
    pub alpha: f64,
    pub reps: u64,
    pub seed: u64,
    pub scales: Vec<ScaleResult>,
}

impl PowerResult {
    pub fn scale(&self, scale: Scale) -> &ScaleResult {
        self.scales
            .iter()
            .find(|s| s.scale == scale)
            .expect("every scale is simulated")
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    rejections: [u64; 3],
    degenerate: [u64; 3],
}

/// Parallel power simulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerSimulator {
    /// Worker threads; `0` uses the rayon default.
    pub workers: usize,
}

impl PowerSimulator {
    pub fn with_workers(workers: usize) -> Self {
        PowerSimulator { workers }
    }

    pub fn simulate(
        &self,
        truth: &RiskTable,
        design: &StudyDesign,
        alpha: f64,
        reps: u64,
        seed: u64,
    ) -> Result<PowerResult> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")));
        }
        if reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        let tallies = map_chunks(reps, seed, self.workers, |range, rng| {
            let mut tally = Tally::default();
            for _ in range {
                let counts = CellCounts::sample(truth, design, rng);
                for (i, scale) in Scale::ALL.into_iter().enumerate() {
                    match wald_interaction_pvalue(&counts, scale) {
                        Ok(p) if p < alpha => tally.rejections[i] += 1,
                        Ok(_) => {}
                        Err(_) => tally.degenerate[i] += 1,
                    }
                }
            }
            tally
        })?;
        let total = tallies.into_iter().fold(Tally::default(), |mut acc, t| {
            for i in 0..3 {
                acc.rejections[i] += t.rejections[i];
                acc.degenerate[i] += t.degenerate[i];
            }
            acc
        });
        let scales = Scale::ALL
            .into_iter()
            .enumerate()
            .map(|(i, scale)| {
                let evaluated = reps - total.degenerate[i];
                let rate = if evaluated == 0 {
                    0.0
                } else {
                    total.rejections[i] as f64 / evaluated as f64
                };
                let std_error = if evaluated == 0 {
                    0.0
                } else {
                    (rate * (1.0 - rate) / evaluated as f64).sqrt()
                };
                ScaleResult {
                    scale,
                    rejection_rate: rate,
                    std_error,
                    rejections: total.rejections[i],
                    evaluated,
                    degenerate: total.degenerate[i],
                }
            })
            .collect();
        Ok(PowerResult {
            truth: *truth,
            design: *design,
            alpha,
            reps,
            seed,
            scales,
        })
    }
}

/// [`PowerSimulator::simulate`] on the default worker pool.
pub fn simulate_power(
    truth: &RiskTable,
    design: &StudyDesign,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<PowerResult> {
    PowerSimulator::default().simulate(truth, design, alpha, reps, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn counts(events: [[u64; 2]; 2], n: u64) -> CellCounts {
        CellCounts::new(events, [[n; 2]; 2]).unwrap()
    }

    #[test]
    fn balanced_counts_give_unit_p_value() {
        let c = counts([[50, 50], [50, 50]], 100);
        for scale in Scale::ALL {
            let t = wald_interaction(&c, scale).unwrap();
            assert_eq!(t.estimate, 0.0);
            assert_eq!(t.p_value, 1.0);
        }
    }

    #[test]
    fn rd_homogeneous_counts_have_zero_identity_estimate() {
        // p̂ = (.2, .4; .3, .5)
        let c = counts([[20, 40], [30, 50]], 100);
        let t = wald_interaction(&c, Scale::Identity).unwrap();
        assert!(t.estimate.abs() < 1e-15);
        assert!(wald_interaction(&c, Scale::Logit).unwrap().estimate.abs() > 0.0);
    }

    #[test]
    fn hand_computed_logit_test() {
        // log-odds: ln(1/4), ln(2/3), ln(3/7), ln(1); contrast and the sum
        // of 1/(n p(1-p)) evaluated by hand.
        let c = counts([[20, 40], [30, 50]], 100);
        let t = wald_interaction(&c, Scale::Logit).unwrap();
        let est = (0.0 - (3.0f64 / 7.0).ln()) - ((2.0f64 / 3.0).ln() - 0.25f64.ln());
        let var: f64 = 1.0 / 16.0 + 1.0 / 24.0 + 1.0 / 21.0 + 1.0 / 25.0;
        assert_relative_eq!(t.estimate, est, epsilon = 1e-14);
        assert_relative_eq!(t.std_error, var.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn zero_cells_are_adjusted_on_ratio_scales() {
        let c = counts([[0, 10], [5, 20]], 20);
        let log = wald_interaction(&c, Scale::Log).unwrap();
        assert!(log.p_value.is_finite());
        // adjusted p00 = 0.5 / 21
        let expected = ((20.5f64 / 21.0).ln() - 0.25f64.ln()) - (0.5f64.ln() - (0.5f64 / 21.0).ln());
        assert_relative_eq!(log.estimate, expected, epsilon = 1e-12);
        assert!(wald_interaction(&c, Scale::Identity).is_ok());
    }

    #[test]
    fn all_boundary_counts_are_degenerate_on_identity() {
        let c = counts([[0, 10], [10, 0]], 10);
        assert!(matches!(wald_interaction(&c, Scale::Identity), Err(Error::Degenerate(_))));
        assert!(wald_interaction(&c, Scale::Logit).is_ok());
    }

    #[test]
    fn invalid_counts_rejected() {
        assert!(CellCounts::new([[11, 0], [0, 0]], [[10; 2]; 2]).is_err());
        assert!(CellCounts::new([[0; 2]; 2], [[0, 1], [1, 1]]).is_err());
        assert!(StudyDesign::new([[1, 0], [1, 1]]).is_err());
    }

    #[test]
    fn normal_tail() {
        assert_relative_eq!(two_sided_normal_p(1.959963984540054), 0.05, epsilon = 1e-10);
        assert_eq!(two_sided_normal_p(0.0), 1.0);
    }

    #[test]
    fn single_replicate_rates_are_binary() {
        let truth = RiskTable::from_cells(0.2, 0.5, 0.4, 0.7).unwrap();
        let r = simulate_power(&truth, &StudyDesign::balanced(50).unwrap(), 0.05, 1, 3).unwrap();
        for s in &r.scales {
            assert!(s.rejection_rate == 0.0 || s.rejection_rate == 1.0);
        }
    }

    #[test]
    fn seed_determinism_across_workers() {
        let truth = RiskTable::from_cells(0.3, 0.4, 0.3, 0.6).unwrap();
        let d = StudyDesign::balanced(80).unwrap();
        let a = PowerSimulator::with_workers(1).simulate(&truth, &d, 0.05, 9000, 12).unwrap();
        let b = PowerSimulator::with_workers(3).simulate(&truth, &d, 0.05, 9000, 12).unwrap();
        assert_eq!(a, b);
        let c = PowerSimulator::with_workers(3).simulate(&truth, &d, 0.05, 9000, 13).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_inputs() {
        let truth = RiskTable::from_cells(0.3, 0.4, 0.3, 0.6).unwrap();
        let d = StudyDesign::balanced(80).unwrap();
        assert!(simulate_power(&truth, &d, 0.0, 10, 0).is_err());
        assert!(simulate_power(&truth, &d, 0.05, 0, 0).is_err());
    }
}
