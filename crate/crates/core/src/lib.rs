//! Geometry of binary effect measures.
//!
//! A [`RiskTable`] holds the four risks `p[v][a]` of a binary outcome across
//! a binary stratum `v` and a binary treatment `a`. On top of it this crate
//! provides:
//!
//! * per-stratum effect measures (RD, RR, OR), the odds product and the
//!   eta nuisance ([`table`]);
//! * five coordinate systems for the table with forward and inverse maps
//!   ([`coords`]);
//! * feasibility of homogeneity constraints ([`homogeneity`]);
//! * Monte Carlo estimates of the probability that homogeneity is
//!   compatible under a uniform prior on three coordinates ([`volume`]);
//! * a repeated-sampling power simulator for Wald interaction tests
//!   ([`power`]).

pub mod config;
pub mod coords;
pub mod error;
pub mod homogeneity;
pub mod parallel;
pub mod power;
mod roots;
pub mod table;
pub mod volume;

pub use coords::{CoordinatePoint, System};
pub use error::{Error, Result};
pub use homogeneity::{CompatibilityQuery, HomogeneityQuery, Target};
pub use power::{PowerResult, Scale, StudyDesign};
pub use table::{measure_range, Interval, Measure, RiskTable, StratumPair, DEFAULT_GUARD};
pub use volume::{PriorSpec, VolumeEstimate};
