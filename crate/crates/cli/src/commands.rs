use effgeo::homogeneity::{complete_table, supports, HomogeneityQuery};
use effgeo::power::PowerSimulator;
use effgeo::volume::{analytic_cube_probability, Estimator};
use effgeo::{
    CoordinatePoint, Error, Measure, PowerResult, PriorSpec, RiskTable, StudyDesign, System,
    Target, VolumeEstimate,
};
use serde::Serialize;
use serde_json::json;

use crate::format::{csv, full, plain_table, sig6, Format};
use crate::Failure;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable output");
    s.push('\n');
    s
}

fn num(fmt: Format, x: f64) -> String {
    match fmt {
        Format::Plain => sig6(x),
        _ => full(x),
    }
}

#[derive(Serialize)]
struct StratumReport {
    stratum: usize,
    p0: f64,
    p1: f64,
    rd: f64,
    rr: f64,
    or: f64,
    op: f64,
    eta: f64,
}

#[derive(Serialize)]
struct Interactions {
    rd: f64,
    rr: f64,
    or: f64,
    op: f64,
}

pub fn measures(fmt: Format, p00: f64, p10: f64, p01: f64, p11: f64) -> Result<String, Failure> {
    let table = RiskTable::from_cells(p00, p01, p10, p11)?;
    let strata: Vec<StratumReport> = (0..2)
        .map(|v| {
            let s = table.stratum(v);
            StratumReport {
                stratum: v,
                p0: s.p0,
                p1: s.p1,
                rd: s.risk_difference(),
                rr: s.relative_risk(),
                or: s.odds_ratio(),
                op: s.odds_product(),
                eta: s.eta(),
            }
        })
        .collect();
    let inter = Interactions {
        rd: table.interaction(Measure::Rd),
        rr: table.interaction(Measure::Rr),
        or: table.interaction(Measure::Or),
        op: (table.stratum(1).odds_product() / table.stratum(0).odds_product()).ln(),
    };
    let inter_rows = [("rd", inter.rd), ("rr", inter.rr), ("or", inter.or), ("op", inter.op)];
    Ok(match fmt {
        Format::Json => to_json(&json!({ "table": table, "strata": strata, "interactions": inter })),
        Format::Csv => {
            let mut rows = Vec::new();
            for s in &strata {
                for (name, value) in [("p0", s.p0), ("p1", s.p1), ("rd", s.rd), ("rr", s.rr), ("or", s.or), ("op", s.op), ("eta", s.eta)] {
                    rows.push(vec![name.to_string(), s.stratum.to_string(), full(value)]);
                }
            }
            for (name, value) in inter_rows {
                rows.push(vec![name.to_string(), "interaction".into(), full(value)]);
            }
            csv(&["quantity", "scope", "value"], &rows)
        }
        Format::Plain => {
            let rows: Vec<Vec<String>> = strata
                .iter()
                .map(|s| {
                    let mut r = vec![s.stratum.to_string()];
                    r.extend([s.p0, s.p1, s.rd, s.rr, s.or, s.op, s.eta].map(sig6));
                    r
                })
                .collect();
            let mut out = plain_table(&["stratum", "p0", "p1", "rd", "rr", "or", "op", "eta"], &rows);
            out.push('\n');
            let rows: Vec<Vec<String>> = inter_rows
                .iter()
                .map(|(n, v)| vec![n.to_string(), sig6(*v)])
                .collect();
            out.push_str(&plain_table(&["interaction", "value"], &rows));
            out
        }
    })
}

pub fn feasible(fmt: Format, measure: Measure, p00: f64, p10: f64, p01: f64) -> Result<String, Failure> {
    let q = HomogeneityQuery::new(measure, p00, p10, p01)?;
    let candidate = q.candidate();
    let p11 = complete_table(&q);
    Ok(match fmt {
        Format::Json => to_json(&json!({
            "query": q,
            "candidate": candidate,
            "feasible": p11.is_some(),
            "p11": p11,
        })),
        Format::Csv => csv(
            &["measure", "p00", "p10", "p01", "candidate", "feasible"],
            &[vec![
                measure.to_string(),
                full(p00),
                full(p10),
                full(p01),
                full(candidate),
                p11.is_some().to_string(),
            ]],
        ),
        Format::Plain => match p11 {
            Some(p) => format!("feasible, p11 = {p:.4}\n"),
            None => format!("infeasible (candidate {candidate:.4})\n"),
        },
    })
}

pub fn inline_runs(
    system: System,
    targets: &[Measure],
    bounds: [(f64, f64); 3],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<(Target, PriorSpec)>, Error> {
    let prior = PriorSpec {
        system,
        bounds,
        n_samples,
        seed,
    };
    prior.validate()?;
    let mut chosen: Vec<Measure> = if targets.is_empty() {
        Measure::ALL.into_iter().filter(|&t| supports(system, t)).collect()
    } else {
        targets.to_vec()
    };
    chosen.sort_by_key(|t| Measure::ALL.iter().position(|m| m == t));
    chosen.dedup();
    Ok(chosen.into_iter().map(|t| (t, prior)).collect())
}

#[derive(Serialize)]
struct VolumeRow {
    target: Target,
    prior: PriorSpec,
    estimate: VolumeEstimate,
    /// Exact value for the unit-cube `prob` prior.
    analytic: Option<f64>,
}

pub fn volume(fmt: Format, workers: usize, runs: &[(Target, PriorSpec)]) -> Result<String, Failure> {
    let estimator = Estimator::with_workers(workers);
    let mut rows = Vec::with_capacity(runs.len());
    for &(target, prior) in runs {
        let estimate = estimator.estimate(&prior, target)?;
        let analytic = (prior.system == System::Prob && prior.bounds == [(0.0, 1.0); 3]).then(|| {
            let r = analytic_cube_probability(target);
            *r.numer() as f64 / *r.denom() as f64
        });
        rows.push(VolumeRow {
            target,
            prior,
            estimate,
            analytic,
        });
    }
    if fmt == Format::Json {
        return Ok(to_json(&rows));
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.prior.system.to_string(),
                r.target.to_string(),
                num(fmt, r.estimate.probability),
                num(fmt, r.estimate.std_error),
                r.estimate.n_samples.to_string(),
                r.estimate.n_compatible.to_string(),
                r.prior.seed.to_string(),
                r.analytic.map(|a| num(fmt, a)).unwrap_or_default(),
            ]
        })
        .collect();
    let header = ["system", "target", "probability", "std_error", "n_samples", "n_compatible", "seed", "analytic"];
    Ok(match fmt {
        Format::Csv => csv(&header, &cells),
        _ => plain_table(&header, &cells),
    })
}

pub fn power(
    fmt: Format,
    workers: usize,
    truth: &RiskTable,
    design: &StudyDesign,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<String, Failure> {
    let result: PowerResult = PowerSimulator::with_workers(workers).simulate(truth, design, alpha, reps, seed)?;
    if fmt == Format::Json {
        return Ok(to_json(&result));
    }
    let cells: Vec<Vec<String>> = result
        .scales
        .iter()
        .map(|s| {
            vec![
                s.scale.to_string(),
                design.pattern(),
                num(fmt, alpha),
                reps.to_string(),
                num(fmt, s.rejection_rate),
                num(fmt, s.std_error),
                s.degenerate.to_string(),
            ]
        })
        .collect();
    let header = ["scale", "n_pattern", "alpha", "reps", "rejection_rate", "std_error", "degenerate_count"];
    Ok(match fmt {
        Format::Csv => csv(&header, &cells),
        _ => plain_table(&header, &cells),
    })
}

pub fn convert(fmt: Format, from: System, to: System, values: [f64; 4]) -> Result<String, Failure> {
    let point = CoordinatePoint::from_values(from, values)?;
    let tables = point.to_tables()?;
    let solutions = tables
        .iter()
        .map(|t| CoordinatePoint::from_table(to, t))
        .collect::<Result<Vec<_>, _>>()?;
    if fmt == Format::Json {
        return Ok(to_json(&json!({
            "from": point,
            "to": to,
            "count": solutions.len(),
            "solutions": solutions,
        })));
    }
    let names = to.coordinate_names();
    let mut header = vec!["solution"];
    header.extend(names);
    let cells: Vec<Vec<String>> = solutions
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(s.values().map(|x| num(fmt, x)));
            row
        })
        .collect();
    Ok(match fmt {
        Format::Csv => csv(&header, &cells),
        _ => {
            let noun = if solutions.len() == 1 { "solution" } else { "solutions" };
            let mut out = format!("{} {noun}\n", solutions.len());
            if !cells.is_empty() {
                out.push_str(&plain_table(&header, &cells));
            }
            out
        }
    })
}
