//! Prior configuration documents.
//!
//! A document is TOML with flat top-level keys and one optional section per
//! target:
//!
//! ```toml
//! system = "rr_eta"
//! n_samples = 100000
//! seed = 42
//! # optional; defaults to the system's default box
//! bounds = [[-1.5, 1.5], [-1.0, 1.0], [-1.0, 1.0]]
//!
//! [target.rr]
//!
//! [target.or]
//! n_samples = 200000   # per-target override
//! seed = 7
//! ```
//!
//! Without `[target.*]` sections every target the system supports is run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::coords::System;
use crate::error::{Error, Result};
use crate::homogeneity::{supports, Target};
use crate::table::Measure;
use crate::volume::PriorSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    system: Spanned<String>,
    n_samples: Spanned<u64>,
    #[serde(default)]
    seed: u64,
    bounds: Option<Spanned<Vec<[f64; 2]>>>,
    #[serde(default)]
    target: BTreeMap<String, Spanned<RawTarget>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    n_samples: Option<u64>,
    seed: Option<u64>,
}

/// A parsed document: one prior per requested target.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeConfig {
    pub runs: Vec<(Target, PriorSpec)>,
}

fn line_of(src: &str, span: Option<Range<usize>>) -> usize {
    span.map_or(1, |s| src[..s.start.min(src.len())].matches('\n').count() + 1)
}

fn at<T>(src: &str, span: Range<usize>, err: Error) -> Result<T> {
    Err(Error::Config {
        line: line_of(src, Some(span)),
        message: err.to_string(),
    })
}

pub fn parse(src: &str) -> Result<VolumeConfig> {
    let raw: RawDocument = toml::from_str(src).map_err(|e| Error::Config {
        line: line_of(src, e.span()),
        message: e.message().trim().to_string(),
    })?;
    let system: System = match raw.system.get_ref().parse() {
        Ok(s) => s,
        Err(e) => return at(src, raw.system.span(), e),
    };
    let bounds = match &raw.bounds {
        None => match PriorSpec::default_bounds(system) {
            Ok(b) => b,
            Err(e) => return at(src, raw.system.span(), e),
        },
        Some(b) if b.get_ref().len() == 3 => {
            let v = b.get_ref();
            [(v[0][0], v[0][1]), (v[1][0], v[1][1]), (v[2][0], v[2][1])]
        }
        Some(b) => {
            let err = Error::InvalidArgument(format!(
                "bounds needs three [low, high] pairs, found {}",
                b.get_ref().len()
            ));
            return at(src, b.span(), err);
        }
    };
    let base = PriorSpec {
        system,
        bounds,
        n_samples: *raw.n_samples.get_ref(),
        seed: raw.seed,
    };
    if let Err(e) = base.validate() {
        let span = match (&e, &raw.bounds) {
            (Error::InvalidArgument(m), Some(b)) if m.starts_with("bounds") => b.span(),
            (Error::InvalidArgument(_), _) => raw.n_samples.span(),
            _ => raw.system.span(),
        };
        return at(src, span, e);
    }

    let mut runs = Vec::new();
    if raw.target.is_empty() {
        runs.extend(
            Measure::ALL
                .into_iter()
                .filter(|&t| supports(system, t))
                .map(|t| (t, base)),
        );
    }
    for (name, section) in &raw.target {
        let target: Target = match name.parse() {
            Ok(t) => t,
            Err(e) => return at(src, section.span(), e),
        };
        if !supports(system, target) {
            let err = Error::UnsupportedSystem(format!(
                "target {target} is not supported under system {system}"
            ));
            return at(src, section.span(), err);
        }
        let spec = PriorSpec {
            n_samples: section.get_ref().n_samples.unwrap_or(base.n_samples),
            seed: section.get_ref().seed.unwrap_or(base.seed),
            ..base
        };
        if let Err(e) = spec.validate() {
            return at(src, section.span(), e);
        }
        runs.push((target, spec));
    }
    runs.sort_by_key(|(t, _)| Measure::ALL.iter().position(|m| m == t));
    Ok(VolumeConfig { runs })
}

/// Renders a document that [`parse`] maps back to `config`, as long as all
/// runs share one system and box.
pub fn render(config: &VolumeConfig) -> String {
    let mut out = String::new();
    let Some((_, first)) = config.runs.first() else {
        return out;
    };
    let _ = writeln!(out, "system = \"{}\"", first.system);
    let _ = writeln!(out, "n_samples = {}", first.n_samples);
    let _ = writeln!(out, "seed = {}", first.seed);
    let pairs: Vec<String> = first
        .bounds
        .iter()
        .map(|(lo, hi)| format!("[{lo:?}, {hi:?}]"))
        .collect();
    let _ = writeln!(out, "bounds = [{}]", pairs.join(", "));
    for (target, spec) in &config.runs {
        let _ = writeln!(out, "\n[target.{target}]");
        if spec.n_samples != first.n_samples {
            let _ = writeln!(out, "n_samples = {}", spec.n_samples);
        }
        if spec.seed != first.seed {
            let _ = writeln!(out, "seed = {}", spec.seed);
        }
    }
    out
}
