//! Saturated four-parameter coordinate systems for the risk table.
//!
//! | system     | coordinates                    | nuisance on baseline side |
//! |------------|--------------------------------|---------------------------|
//! | `prob`     | `p00, p10, p01, p11`           | the risks themselves      |
//! | `poisson`  | `beta0, beta1, alpha0, alpha1` | log baseline risk         |
//! | `rr_op`    | `alpha0, alpha1, gamma0, gamma1` | log odds product        |
//! | `logistic` | `b0, b1, a0, a1`               | log baseline odds         |
//! | `rr_eta`   | `alpha0, alpha1, e0, e1`       | log eta                   |
//!
//! In every system the `*0` coordinate describes stratum 0 and the `*1`
//! coordinate is the stratum-1 minus stratum-0 contrast on the same scale.
//! `alpha1` is the log-RR interaction and `a1` the log-OR interaction.
//!
//! `rr_op` and `logistic` are variation independent: every real 4-tuple
//! maps to a table. `poisson` is not (exponentiated risks can exceed 1) and
//! `rr_eta` is set-valued since eta takes an absolute value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::LogitGrid;
use crate::table::{RiskTable, StratumPair, DEFAULT_GUARD};

/// Identifier of a coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Prob,
    Poisson,
    RrOp,
    Logistic,
    RrEta,
}

impl System {
    pub const ALL: [System; 5] = [
        System::Prob,
        System::Poisson,
        System::RrOp,
        System::Logistic,
        System::RrEta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            System::Prob => "prob",
            System::Poisson => "poisson",
            System::RrOp => "rr_op",
            System::Logistic => "logistic",
            System::RrEta => "rr_eta",
        }
    }

    /// Coordinate names in the order used by [`CoordinatePoint::values`].
    pub fn coordinate_names(self) -> [&'static str; 4] {
        match self {
            System::Prob => ["p00", "p10", "p01", "p11"],
            System::Poisson => ["beta0", "beta1", "alpha0", "alpha1"],
            System::RrOp => ["alpha0", "alpha1", "gamma0", "gamma1"],
            System::Logistic => ["b0", "b1", "a0", "a1"],
            System::RrEta => ["alpha0", "alpha1", "e0", "e1"],
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        System::ALL
            .into_iter()
            .find(|sys| sys.name() == s)
            .ok_or_else(|| Error::UnsupportedSystem(format!("unknown coordinate system {s:?}")))
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Saturated Poisson (log-linear) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonCoords {
    pub beta0: f64,
    pub beta1: f64,
    pub alpha0: f64,
    pub alpha1: f64,
}

pub fn to_poisson(t: &RiskTable) -> PoissonCoords {
    let (l00, l01, l10, l11) = (t.p00().ln(), t.p01().ln(), t.p10().ln(), t.p11().ln());
    PoissonCoords {
        beta0: l00,
        beta1: l10 - l00,
        alpha0: l01 - l00,
        alpha1: l11 - l10 - (l01 - l00),
    }
}

/// Inverse of [`to_poisson`]. Fails with [`Error::OutOfDomain`] naming the
/// first cell whose exponentiated risk leaves (0, 1).
pub fn from_poisson(c: &PoissonCoords) -> Result<RiskTable> {
    let cells = [
        ("p00", c.beta0),
        ("p10", c.beta0 + c.beta1),
        ("p01", c.beta0 + c.alpha0),
        ("p11", c.beta0 + c.beta1 + c.alpha0 + c.alpha1),
    ];
    let mut p = [0.0; 4];
    for (slot, (name, log_p)) in p.iter_mut().zip(cells) {
        let value = log_p.exp();
        if !(value < 1.0 - DEFAULT_GUARD) {
            return Err(Error::out_of_domain_ge1(name, value));
        }
        if value < DEFAULT_GUARD {
            return Err(Error::OutOfDomain {
                component: name.to_string(),
                value,
                relation: "≤ 0",
            });
        }
        *slot = value;
    }
    Ok(RiskTable::from_raw([[p[0], p[2]], [p[1], p[3]]]))
}

/// Log-RR / log-odds-product coordinates.
///
/// `gamma0`/`gamma1` are the odds-product nuisance coefficients: log OP in
/// stratum 0 and the log OP ratio across strata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrOpCoords {
    pub alpha0: f64,
    pub alpha1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

/// The unique stratum with `log RR = theta` and `log OP = phi`.
///
/// With `r = e^theta`, `w = e^phi` the baseline risk solves
/// `r(1-w) p0² + w(1+r) p0 - w = 0`. The root in `(0, min(1, 1/r))` is
/// evaluated as `2 / ((1+r) + sqrt((1-r)² + 4r/w))`, which never subtracts
/// nearly equal quantities and covers `w = 1` without a special case.
pub fn solve_stratum_from_rr_op(theta: f64, phi: f64) -> StratumPair {
    let r = theta.exp();
    let inv_w = (-phi).exp();
    let p0 = 2.0 / ((1.0 + r) + (1.0 - r).hypot(2.0 * (r * inv_w).sqrt()));
    StratumPair::from_raw(p0, r * p0)
}

pub fn to_rr_op(t: &RiskTable) -> RrOpCoords {
    let (s0, s1) = (t.stratum(0), t.stratum(1));
    let (lrr0, lrr1) = (s0.relative_risk().ln(), s1.relative_risk().ln());
    let (lop0, lop1) = (s0.odds_product().ln(), s1.odds_product().ln());
    RrOpCoords {
        alpha0: lrr0,
        alpha1: lrr1 - lrr0,
        gamma0: lop0,
        gamma1: lop1 - lop0,
    }
}

pub fn from_rr_op(c: &RrOpCoords) -> RiskTable {
    let s0 = solve_stratum_from_rr_op(c.alpha0, c.gamma0);
    let s1 = solve_stratum_from_rr_op(c.alpha0 + c.alpha1, c.gamma0 + c.gamma1);
    RiskTable::from_strata(s0, s1)
}

/// Saturated logistic coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticCoords {
    pub b0: f64,
    pub b1: f64,
    pub a0: f64,
    pub a1: f64,
}

pub fn to_logistic(t: &RiskTable) -> LogisticCoords {
    let (l00, l01, l10, l11) = (logit(t.p00()), logit(t.p01()), logit(t.p10()), logit(t.p11()));
    LogisticCoords {
        b0: l00,
        b1: l10 - l00,
        a0: l01 - l00,
        a1: l11 - l10 - (l01 - l00),
    }
}

pub fn from_logistic(c: &LogisticCoords) -> RiskTable {
    RiskTable::from_raw([
        [expit(c.b0), expit(c.b0 + c.a0)],
        [expit(c.b0 + c.b1), expit(c.b0 + c.b1 + c.a0 + c.a1)],
    ])
}

/// Log-RR / log-eta coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrEtaCoords {
    pub alpha0: f64,
    pub alpha1: f64,
    pub e0: f64,
    pub e1: f64,
}

/// Eta values at or below this are treated as zero (rounding noise of the
/// log-ratio).
pub const ETA_FLOOR: f64 = 1e-14;

/// Fails when a stratum has `eta = 0`, where `log eta` is undefined.
pub fn to_rr_eta(t: &RiskTable) -> Result<RrEtaCoords> {
    let (s0, s1) = (t.stratum(0), t.stratum(1));
    let (eta0, eta1) = (s0.eta(), s1.eta());
    for (name, eta) in [("eta(0)", eta0), ("eta(1)", eta1)] {
        if eta <= ETA_FLOOR {
            return Err(Error::OutOfDomain {
                component: name.to_string(),
                value: eta,
                relation: "has no logarithm",
            });
        }
    }
    let (lrr0, lrr1) = (s0.relative_risk().ln(), s1.relative_risk().ln());
    Ok(RrEtaCoords {
        alpha0: lrr0,
        alpha1: lrr1 - lrr0,
        e0: eta0.ln(),
        e1: eta1.ln() - eta0.ln(),
    })
}

/// Sorted, deduplicated strata solving an eta equation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StratumSolutionSet {
    pub solutions: Vec<StratumPair>,
}

impl StratumSolutionSet {
    pub const DEDUP_TOL: f64 = 1e-9;

    fn from_unsorted(mut solutions: Vec<StratumPair>) -> Self {
        solutions.sort_by(|a, b| a.p0.total_cmp(&b.p0));
        solutions.dedup_by(|b, a| (a.p0 - b.p0).abs() < Self::DEDUP_TOL);
        StratumSolutionSet { solutions }
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, StratumPair> {
        self.solutions.iter()
    }
}

/// Grid-then-bisection solver for strata on an eta level set.
#[derive(Debug, Clone, Copy)]
pub struct EtaSolver {
    /// Bracketing grid size per branch.
    pub grid_points: usize,
    /// Relative bisection tolerance on the root.
    pub tol: f64,
    /// Probability guard applied to returned strata.
    pub guard: f64,
}

impl Default for EtaSolver {
    fn default() -> Self {
        EtaSolver {
            grid_points: 2048,
            tol: 1e-12,
            guard: DEFAULT_GUARD,
        }
    }
}

impl EtaSolver {
    /// All strata with `log RR = theta` and `eta = c`, from both branches
    /// `log-ratio = +c` and `log-ratio = -c`.
    pub fn solve(&self, theta: f64, c: f64) -> Result<StratumSolutionSet> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("eta target must be positive, got {c}")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!("log RR must be finite, got {theta}")));
        }
        let r = theta.exp();
        let grid = LogitGrid::new(r.recip().min(1.0), self.grid_points);
        let mut found = Vec::new();
        for g in [c.exp(), (-c).exp()] {
            // log-ratio = ±c, cleared of the positive denominator (1-p1) p0.
            let f = |p0: f64| (1.0 - p0) * (r * p0 + 0.5) - g * (1.0 - r * p0) * p0;
            for p0 in grid.roots(f, self.tol) {
                let pair = StratumPair {
                    p0,
                    p1: r * p0,
                };
                if pair.is_valid(self.guard) {
                    found.push(pair);
                }
            }
        }
        Ok(StratumSolutionSet::from_unsorted(found))
    }

    pub fn from_rr_eta(&self, c: &RrEtaCoords) -> Vec<RiskTable> {
        let solve = |theta: f64, log_eta: f64| {
            self.solve(theta, log_eta.exp()).unwrap_or_default()
        };
        let s0 = solve(c.alpha0, c.e0);
        if s0.is_empty() {
            return Vec::new();
        }
        let s1 = solve(c.alpha0 + c.alpha1, c.e0 + c.e1);
        s0.iter()
            .flat_map(|a| s1.iter().map(move |b| RiskTable::from_strata(*a, *b)))
            .collect()
    }
}

/// [`EtaSolver::solve`] with default resolution.
pub fn solve_stratum_from_rr_eta(theta: f64, c: f64) -> Result<StratumSolutionSet> {
    EtaSolver::default().solve(theta, c)
}

/// All tables with the given rr_eta coordinates; empty when a stratum has
/// no solution.
pub fn from_rr_eta(c: &RrEtaCoords) -> Vec<RiskTable> {
    EtaSolver::default().from_rr_eta(c)
}

/// A point in one of the named coordinate systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum CoordinatePoint {
    Prob(RiskTable),
    Poisson(PoissonCoords),
    RrOp(RrOpCoords),
    Logistic(LogisticCoords),
    RrEta(RrEtaCoords),
}

impl CoordinatePoint {
    pub fn system(&self) -> System {
        match self {
            CoordinatePoint::Prob(_) => System::Prob,
            CoordinatePoint::Poisson(_) => System::Poisson,
            CoordinatePoint::RrOp(_) => System::RrOp,
            CoordinatePoint::Logistic(_) => System::Logistic,
            CoordinatePoint::RrEta(_) => System::RrEta,
        }
    }

    /// Builds a point from values ordered as [`System::coordinate_names`].
    pub fn from_values(system: System, v: [f64; 4]) -> Result<Self> {
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("coordinate {bad} is not finite")));
        }
        Ok(match system {
            System::Prob => CoordinatePoint::Prob(RiskTable::from_cells(v[0], v[2], v[1], v[3])?),
            System::Poisson => CoordinatePoint::Poisson(PoissonCoords {
                beta0: v[0],
                beta1: v[1],
                alpha0: v[2],
                alpha1: v[3],
            }),
            System::RrOp => CoordinatePoint::RrOp(RrOpCoords {
                alpha0: v[0],
                alpha1: v[1],
                gamma0: v[2],
                gamma1: v[3],
            }),
            System::Logistic => CoordinatePoint::Logistic(LogisticCoords {
                b0: v[0],
                b1: v[1],
                a0: v[2],
                a1: v[3],
            }),
            System::RrEta => CoordinatePoint::RrEta(RrEtaCoords {
                alpha0: v[0],
                alpha1: v[1],
                e0: v[2],
                e1: v[3],
            }),
        })
    }

    pub fn values(&self) -> [f64; 4] {
        match self {
            CoordinatePoint::Prob(t) => [t.p00(), t.p10(), t.p01(), t.p11()],
            CoordinatePoint::Poisson(c) => [c.beta0, c.beta1, c.alpha0, c.alpha1],
            CoordinatePoint::RrOp(c) => [c.alpha0, c.alpha1, c.gamma0, c.gamma1],
            CoordinatePoint::Logistic(c) => [c.b0, c.b1, c.a0, c.a1],
            CoordinatePoint::RrEta(c) => [c.alpha0, c.alpha1, c.e0, c.e1],
        }
    }

    pub fn from_table(system: System, t: &RiskTable) -> Result<Self> {
        Ok(match system {
            System::Prob => CoordinatePoint::Prob(*t),
            System::Poisson => CoordinatePoint::Poisson(to_poisson(t)),
            System::RrOp => CoordinatePoint::RrOp(to_rr_op(t)),
            System::Logistic => CoordinatePoint::Logistic(to_logistic(t)),
            System::RrEta => CoordinatePoint::RrEta(to_rr_eta(t)?),
        })
    }

    /// Tables represented by this point. Only `rr_eta` can yield more than
    /// one table (or none); `poisson` may fail with `OutOfDomain`.
    pub fn to_tables(&self) -> Result<Vec<RiskTable>> {
        Ok(match self {
            CoordinatePoint::Prob(t) => vec![*t],
            CoordinatePoint::Poisson(c) => vec![from_poisson(c)?],
            CoordinatePoint::RrOp(c) => vec![from_rr_op(c)],
            CoordinatePoint::Logistic(c) => vec![from_logistic(c)],
            CoordinatePoint::RrEta(c) => from_rr_eta(c),
        })
    }
}
