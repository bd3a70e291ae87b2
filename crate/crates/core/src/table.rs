//! The 2×2 risk table and per-stratum effect measures.
//!
//! Entries are indexed `p[v][a]`: stratum `v` first, treatment `a` second.
//! So `p01` is the treated risk in stratum 0 and `p10` the baseline risk in
//! stratum 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance from 0 and 1 an accepted probability must keep.
pub const DEFAULT_GUARD: f64 = 1e-12;

fn check_probability(name: &str, value: f64, guard: f64) -> Result<f64> {
    if value.is_finite() && value >= guard && value <= 1.0 - guard {
        Ok(value)
    } else {
        Err(Error::InvalidProbability {
            name: name.to_string(),
            value,
        })
    }
}

/// True when `value` is accepted as a probability under `guard`.
pub fn in_unit_open(value: f64, guard: f64) -> bool {
    value.is_finite() && value >= guard && value <= 1.0 - guard
}

/// Baseline and treated risk within one stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumPair {
    pub p0: f64,
    pub p1: f64,
}

impl StratumPair {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        Self::with_guard(p0, p1, DEFAULT_GUARD)
    }

    pub fn with_guard(p0: f64, p1: f64, guard: f64) -> Result<Self> {
        check_probability("p0", p0, guard)?;
        check_probability("p1", p1, guard)?;
        Ok(StratumPair { p0, p1 })
    }

    /// Builds a pair known to lie inside (0, 1) mathematically. Solver
    /// outputs may sit closer to the boundary than the guard allows.
    pub(crate) fn from_raw(p0: f64, p1: f64) -> Self {
        debug_assert!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0);
        StratumPair { p0, p1 }
    }

    pub fn is_valid(&self, guard: f64) -> bool {
        in_unit_open(self.p0, guard) && in_unit_open(self.p1, guard)
    }

    pub fn risk_difference(&self) -> f64 {
        self.p1 - self.p0
    }

    pub fn relative_risk(&self) -> f64 {
        self.p1 / self.p0
    }

    pub fn odds_ratio(&self) -> f64 {
        self.p1 * (1.0 - self.p0) / (self.p0 * (1.0 - self.p1))
    }

    /// Product of the treated and baseline odds.
    pub fn odds_product(&self) -> f64 {
        self.p1 * self.p0 / ((1.0 - self.p1) * (1.0 - self.p0))
    }

    /// Signed log-ratio `log[(1-p0)(p1+0.5) / ((1-p1) p0)]` whose absolute
    /// value is [`eta`](Self::eta).
    pub fn eta_log_ratio(&self) -> f64 {
        eta_log_ratio(self.p0, self.p1)
    }

    /// The eta nuisance: `|log[(1-p0)(p1+0.5) / ((1-p1) p0)]|`.
    ///
    /// `p1 + 0.5` may exceed 1; the expression is used as written.
    pub fn eta(&self) -> f64 {
        self.eta_log_ratio().abs()
    }

    pub fn measure(&self, measure: Measure) -> f64 {
        match measure {
            Measure::Rd => self.risk_difference(),
            Measure::Rr => self.relative_risk(),
            Measure::Or => self.odds_ratio(),
        }
    }
}

pub(crate) fn eta_log_ratio(p0: f64, p1: f64) -> f64 {
    ((1.0 - p0).ln() + (p1 + 0.5).ln()) - ((1.0 - p1).ln() + p0.ln())
}

/// Four conditional risks `p[v][a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    p: [[f64; 2]; 2],
}

impl RiskTable {
    /// Builds a table from `p[v][a]`, rejecting entries outside
    /// `[DEFAULT_GUARD, 1 - DEFAULT_GUARD]`.
    pub fn new(p: [[f64; 2]; 2]) -> Result<Self> {
        Self::with_guard(p, DEFAULT_GUARD)
    }

    pub fn with_guard(p: [[f64; 2]; 2], guard: f64) -> Result<Self> {
        for (v, row) in p.iter().enumerate() {
            for (a, &x) in row.iter().enumerate() {
                check_probability(&format!("p{v}{a}"), x, guard)?;
            }
        }
        Ok(RiskTable { p })
    }

    /// Convenience constructor taking the cells by name.
    pub fn from_cells(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        Self::new([[p00, p01], [p10, p11]])
    }

    pub(crate) fn from_raw(p: [[f64; 2]; 2]) -> Self {
        RiskTable { p }
    }

    pub fn from_strata(s0: StratumPair, s1: StratumPair) -> Self {
        RiskTable {
            p: [[s0.p0, s0.p1], [s1.p0, s1.p1]],
        }
    }

    pub fn cells(&self) -> [[f64; 2]; 2] {
        self.p
    }

    /// Risk in stratum `v` under treatment `a`.
    pub fn get(&self, v: usize, a: usize) -> f64 {
        self.p[v][a]
    }

    pub fn p00(&self) -> f64 {
        self.p[0][0]
    }
    pub fn p01(&self) -> f64 {
        self.p[0][1]
    }
    pub fn p10(&self) -> f64 {
        self.p[1][0]
    }
    pub fn p11(&self) -> f64 {
        self.p[1][1]
    }

    /// The `(p0(v), p1(v))` pair of stratum `v`.
    ///
    /// # Panics
    /// If `v > 1`.
    pub fn stratum(&self, v: usize) -> StratumPair {
        assert!(v < 2, "stratum index must be 0 or 1, got {v}");
        StratumPair {
            p0: self.p[v][0],
            p1: self.p[v][1],
        }
    }

    pub fn is_valid(&self, guard: f64) -> bool {
        self.p.iter().flatten().all(|&x| in_unit_open(x, guard))
    }

    /// Interaction on the measure's natural scale: the RD difference, or the
    /// log-ratio of RR / OR across strata.
    pub fn interaction(&self, measure: Measure) -> f64 {
        let (s0, s1) = (self.stratum(0), self.stratum(1));
        match measure {
            Measure::Rd => s1.risk_difference() - s0.risk_difference(),
            Measure::Rr => s1.relative_risk().ln() - s0.relative_risk().ln(),
            Measure::Or => s1.odds_ratio().ln() - s0.odds_ratio().ln(),
        }
    }
}

/// Effect measures with a homogeneity notion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Rd,
    Rr,
    Or,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Rd, Measure::Rr, Measure::Or];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Rd => "rd",
            Measure::Rr => "rr",
            Measure::Or => "or",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rd" => Ok(Measure::Rd),
            "rr" => Ok(Measure::Rr),
            "or" => Ok(Measure::Or),
            other => Err(Error::InvalidArgument(format!(
                "unknown measure {other:?} (expected rd, rr or or)"
            ))),
        }
    }
}

/// An open interval; `high` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x > self.low && x < self.high
    }
}

/// Values a measure can take in a stratum whose baseline risk is `p0`.
pub fn measure_range(measure: Measure, p0: f64) -> Result<Interval> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidProbability {
            name: "p0".into(),
            value: p0,
        });
    }
    Ok(match measure {
        Measure::Rd => Interval {
            low: -p0,
            high: 1.0 - p0,
        },
        Measure::Rr => Interval {
            low: 0.0,
            high: 1.0 / p0,
        },
        Measure::Or => Interval {
            low: 0.0,
            high: f64::INFINITY,
        },
    })
}
