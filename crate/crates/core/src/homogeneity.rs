//! Feasibility of homogeneity constraints.
//!
//! A homogeneity constraint fixes an interaction coordinate to zero. Given
//! the three remaining coordinates of some system, the constraint is
//! *compatible* when a valid risk table carries those coordinates and the
//! zero interaction.

use serde::{Deserialize, Serialize};

use crate::coords::{solve_stratum_from_rr_op, EtaSolver, System};
use crate::error::{Error, Result};
use crate::roots::LogitGrid;
use crate::table::{in_unit_open, Measure, RiskTable, StratumPair, DEFAULT_GUARD};

/// The interaction constrained to zero: `rd` (RD difference), `rr`
/// (`alpha1`, log-RR interaction) or `or` (`a1`, log-OR interaction).
pub type Target = Measure;

fn odds(p: f64) -> f64 {
    p / (1.0 - p)
}

/// Three known risks `(p00, p10, p01)`; `p11` is left free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityQuery {
    pub measure: Measure,
    pub known: [f64; 3],
}

impl HomogeneityQuery {
    pub fn new(measure: Measure, p00: f64, p10: f64, p01: f64) -> Result<Self> {
        for (name, p) in [("p00", p00), ("p10", p10), ("p01", p01)] {
            if !in_unit_open(p, DEFAULT_GUARD) {
                return Err(Error::InvalidProbability {
                    name: name.into(),
                    value: p,
                });
            }
        }
        Ok(HomogeneityQuery {
            measure,
            known: [p00, p10, p01],
        })
    }

    /// The unique `p11` equalising the measure across strata, whether or
    /// not it is a probability.
    pub fn candidate(&self) -> f64 {
        let [p00, p10, p01] = self.known;
        match self.measure {
            Measure::Rd => p10 + p01 - p00,
            Measure::Rr => p10 * p01 / p00,
            Measure::Or => {
                let q = odds(p10) * odds(p01) / odds(p00);
                q / (1.0 + q)
            }
        }
    }
}

/// `p11` completing a homogeneous table, or `None` when the candidate falls
/// outside `[guard, 1 - guard]`.
pub fn complete_table(q: &HomogeneityQuery) -> Option<f64> {
    let p11 = q.candidate();
    in_unit_open(p11, DEFAULT_GUARD).then_some(p11)
}

pub fn is_feasible(q: &HomogeneityQuery) -> bool {
    complete_table(q).is_some()
}

/// A system with its interaction coordinate dropped, a point in the
/// remaining three coordinates and the constrained interaction.
///
/// Retained coordinates: `prob` → `(p00, p10, p01)`, `rr_op` →
/// `(alpha0, gamma0, gamma1)`, `rr_eta` → `(alpha0, e0, e1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityQuery {
    pub system: System,
    pub point: [f64; 3],
    pub target: Target,
}

/// Systems and targets [`Compatibility`] supports.
pub fn supports(system: System, target: Target) -> bool {
    matches!(
        (system, target),
        (System::Prob, _) | (System::RrOp, Measure::Rr | Measure::Or) | (System::RrEta, Measure::Rr | Measure::Or)
    )
}

/// Homogeneity compatibility checker.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compatibility {
    /// Solver used for eta level sets; its grid also drives the stratum-1
    /// curve scan for the `rr_eta` / OR check.
    pub eta: EtaSolver,
}

impl Compatibility {
    pub fn check(&self, q: &CompatibilityQuery) -> Result<bool> {
        Ok(self.witness(q)?.is_some())
    }

    /// A table certifying compatibility, if one exists.
    pub fn witness(&self, q: &CompatibilityQuery) -> Result<Option<RiskTable>> {
        if !supports(q.system, q.target) {
            return Err(Error::UnsupportedSystem(format!(
                "target {} is not supported under system {}",
                q.target, q.system
            )));
        }
        if q.point.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("point {:?} is not finite", q.point)));
        }
        let guard = self.eta.guard;
        let [x0, x1, x2] = q.point;
        match q.system {
            System::Prob => {
                let hq = HomogeneityQuery::new(q.target, x0, x1, x2)?;
                Ok(complete_table(&hq).map(|p11| RiskTable::from_raw([[x0, x2], [x1, p11]])))
            }
            System::RrOp => {
                let (alpha0, gamma0, gamma1) = (x0, x1, x2);
                let s0 = solve_stratum_from_rr_op(alpha0, gamma0);
                let s1 = match q.target {
                    Measure::Rr => solve_stratum_from_rr_op(alpha0, gamma0 + gamma1),
                    // OP = odds0 * odds1 and OR = odds1 / odds0, so the
                    // stratum-1 odds follow from the target OR directly.
                    _ => {
                        let op1 = (gamma0 + gamma1).exp();
                        let or0 = s0.odds_ratio();
                        let (o0, o1) = ((op1 / or0).sqrt(), (op1 * or0).sqrt());
                        StratumPair {
                            p0: o0 / (1.0 + o0),
                            p1: o1 / (1.0 + o1),
                        }
                    }
                };
                let t = RiskTable::from_strata(s0, s1);
                Ok(t.is_valid(guard).then_some(t))
            }
            System::RrEta => {
                let (alpha0, e0, e1) = (x0, x1, x2);
                let c0 = e0.exp();
                let c1 = (e0 + e1).exp();
                let strata0 = self.eta.solve(alpha0, c0)?;
                match q.target {
                    Measure::Rr => {
                        let strata1 = self.eta.solve(alpha0, c1)?;
                        Ok(strata0
                            .solutions
                            .first()
                            .zip(strata1.solutions.first())
                            .map(|(a, b)| RiskTable::from_strata(*a, *b)))
                    }
                    _ => Ok(strata0.iter().find_map(|s0| {
                        self.eta_curve_with_odds_ratio(c1, s0.odds_ratio())
                            .map(|s1| RiskTable::from_strata(*s0, s1))
                    })),
                }
            }
            System::Poisson | System::Logistic => unreachable!("rejected by supports()"),
        }
    }

    /// A stratum with `eta = c` and odds ratio `target_or`, searched along
    /// both branches of the eta level set parameterised by the baseline
    /// risk.
    fn eta_curve_with_odds_ratio(&self, c: f64, target_or: f64) -> Option<StratumPair> {
        for g in [c.exp(), (-c).exp()] {
            // On the branch (1-p0)(p1+0.5) = g (1-p1) p0, p1 is explicit in p0
            // and positive once odds(p0) > 0.5 / g.
            let grid = LogitGrid::between(0.5 / (g + 0.5), 1.0, self.eta.grid_points);
            let treated = move |p0: f64| {
                let k = g * odds(p0);
                (k - 0.5) / (1.0 + k)
            };
            // Sign of log OR - log target, without the logarithms.
            let gap = |p0: f64| {
                let p1 = treated(p0);
                if p1 > 0.0 && p1 < 1.0 {
                    odds(p1) - target_or * odds(p0)
                } else {
                    f64::NAN
                }
            };
            for p0 in grid.roots(gap, self.eta.tol) {
                let s = StratumPair { p0, p1: treated(p0) };
                if s.is_valid(self.eta.guard) {
                    return Some(s);
                }
            }
        }
        None
    }
}

/// [`Compatibility::check`] with default resolution.
pub fn check_compatibility(q: &CompatibilityQuery) -> Result<bool> {
    Compatibility::default().check(q)
}
