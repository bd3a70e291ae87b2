//! Acceptance criteria, one line per criterion. Exits nonzero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use effgeo::coords::{
    from_logistic, from_poisson, from_rr_eta, from_rr_op, solve_stratum_from_rr_op, to_logistic, to_poisson,
    to_rr_eta, to_rr_op,
};
use effgeo::homogeneity::{check_compatibility, is_feasible};
use effgeo::parallel::chunk_rng;
use effgeo::power::PowerSimulator;
use effgeo::volume::analytic_cube_probability;
use effgeo::{measure_range, CompatibilityQuery, HomogeneityQuery, Measure, RiskTable, Scale, StudyDesign, System};
use rand::Rng;
use serde_json::Value;

/// Headline fixture: rr_eta default box, OR target, n = 100000, seed 0.
const RR_ETA_OR_COMPATIBLE: u64 = 60_191;

/// Coordinates `(alpha0, e0, e1)` with no OR-homogeneous table.
const INCOMPATIBLE_POINT: [f64; 3] = [1.0, 1.0, -1.0];

type Outcome = Result<String, String>;

fn effgeo(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_effgeo"))
        .args(args)
        .env_remove("EFFGEO_WORKERS")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "effgeo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn effgeo_json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    serde_json::from_slice(&effgeo(&full)).expect("valid json")
}

struct VolumeRow {
    probability: f64,
    std_error: f64,
    n_samples: u64,
    n_compatible: u64,
}

fn volume_rows(args: &[&str]) -> Vec<(String, VolumeRow)> {
    let mut full = vec!["volume"];
    full.extend_from_slice(args);
    effgeo_json(&full)
        .as_array()
        .expect("array of rows")
        .iter()
        .map(|r| {
            let e = &r["estimate"];
            (
                r["target"].as_str().unwrap().to_string(),
                VolumeRow {
                    probability: e["probability"].as_f64().unwrap(),
                    std_error: e["std_error"].as_f64().unwrap(),
                    n_samples: e["n_samples"].as_u64().unwrap(),
                    n_compatible: e["n_compatible"].as_u64().unwrap(),
                },
            )
        })
        .collect()
}

fn row<'a>(rows: &'a [(String, VolumeRow)], target: &str) -> &'a VolumeRow {
    &rows.iter().find(|(t, _)| t == target).expect("target present").1
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Cube {
    rows: Vec<(String, VolumeRow)>,
    elapsed: Duration,
}

fn cube_run() -> Cube {
    let start = Instant::now();
    let rows = volume_rows(&["--system", "prob", "--n-samples", "1000000", "--seed", "42"]);
    Cube {
        rows,
        elapsed: start.elapsed(),
    }
}

fn criterion_1(cube: &Cube) -> Outcome {
    let r = row(&cube.rows, "rr");
    let diff = (r.probability - 0.75).abs();
    let secs = cube.elapsed.as_secs_f64();
    check(
        diff < 0.002 && secs < 10.0,
        format!("RR probability {} (|diff| {diff:.2e} < 0.002), three targets in {secs:.2} s", r.probability),
    )
}

fn criterion_2(cube: &Cube) -> Outcome {
    let r = row(&cube.rows, "or");
    check(
        r.probability == 1.0 && r.n_compatible == r.n_samples,
        format!("OR probability {}, n_compatible {} of {}", r.probability, r.n_compatible, r.n_samples),
    )
}

fn criterion_3(cube: &Cube) -> Outcome {
    let r = row(&cube.rows, "rd");
    let diff = (r.probability - 2.0 / 3.0).abs();
    check(diff < 0.002, format!("RD probability {} (|diff| {diff:.2e} < 0.002)", r.probability))
}

fn criterion_4(cube: &Cube) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (target, expected) in [(Measure::Rr, (3, 4)), (Measure::Rd, (2, 3)), (Measure::Or, (1, 1))] {
        let exact = analytic_cube_probability(target);
        ok &= (*exact.numer(), *exact.denom()) == expected;
        let value = *exact.numer() as f64 / *exact.denom() as f64;
        let r = row(&cube.rows, target.name());
        let dev = (r.probability - value).abs();
        ok &= if r.std_error == 0.0 { dev == 0.0 } else { dev < 4.0 * r.std_error };
        notes.push(format!("{target} {} vs {} ({:.2} SE)", exact, r.probability, dev / r.std_error.max(f64::MIN_POSITIVE)));
    }
    check(ok, notes.join(", "))
}

fn criterion_5(rr_eta: &[(String, VolumeRow)]) -> Outcome {
    let rr_op = volume_rows(&["--system", "rr_op", "--n-samples", "100000", "--bounds", "-2,2", "-2,2", "-2,2"]);
    let (op_rr, op_or) = (row(&rr_op, "rr"), row(&rr_op, "or"));
    let eta_rr = row(rr_eta, "rr");
    check(
        op_rr.probability == 1.0 && op_or.probability == 1.0 && eta_rr.probability == 1.0,
        format!(
            "rr_op RR {} OR {}; rr_eta RR {} ({} of {} compatible)",
            op_rr.probability, op_or.probability, eta_rr.probability, eta_rr.n_compatible, eta_rr.n_samples
        ),
    )
}

fn eta_log_ratio(p0: f64, p1: f64) -> f64 {
    ((1.0 - p0) * (p1 + 0.5) / ((1.0 - p1) * p0)).ln()
}

/// Strata with log RR `theta` and eta `c`, from the closed-form quadratic
/// `r(G-1)p^2 + (r - 0.5 - G)p + 0.5 = 0`, `G = exp(±c)`.
fn eta_strata(theta: f64, c: f64) -> Vec<(f64, f64)> {
    let r = theta.exp();
    let upper = r.recip().min(1.0);
    let mut out = Vec::new();
    for g in [c.exp(), (-c).exp()] {
        let (a, b, k) = (r * (g - 1.0), r - 0.5 - g, 0.5);
        let disc = b * b - 4.0 * a * k;
        if disc < 0.0 {
            continue;
        }
        for p in [(-b - disc.sqrt()) / (2.0 * a), (-b + disc.sqrt()) / (2.0 * a)] {
            if p > 0.0 && p < upper {
                out.push((p, r * p));
            }
        }
    }
    out
}

/// Smallest `|eta - c1|` along the stratum-1 curve `OR = k`, sampled on a
/// million points uniform in logit of the baseline risk.
fn min_eta_gap_on_or_curve(k: f64, c1: f64) -> (f64, bool) {
    const POINTS: usize = 1_000_000;
    let mut min_gap = f64::INFINITY;
    let mut sign_change = false;
    let mut prev: Option<f64> = None;
    for i in 0..POINTS {
        let x = -30.0 + 60.0 * i as f64 / (POINTS - 1) as f64;
        let o0 = x.exp();
        let p0 = o0 / (1.0 + o0);
        let p1 = k * o0 / (1.0 + k * o0);
        if !(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0) {
            continue;
        }
        let gap = eta_log_ratio(p0, p1).abs() - c1;
        min_gap = min_gap.min(gap.abs());
        if let Some(p) = prev {
            sign_change |= (p < 0.0) != (gap < 0.0);
        }
        prev = Some(gap);
    }
    (min_gap, sign_change)
}

fn criterion_6(rr_eta: &[(String, VolumeRow)]) -> Outcome {
    let r = row(rr_eta, "or");
    let shortfall = 1.0 - r.probability;
    let fixture_ok = r.n_compatible == RR_ETA_OR_COMPATIBLE && r.n_samples == 100_000;

    let [alpha0, e0, e1] = INCOMPATIBLE_POINT;
    let library_verdict = check_compatibility(&CompatibilityQuery {
        system: System::RrEta,
        point: INCOMPATIBLE_POINT,
        target: Measure::Or,
    })
    .expect("supported query");
    let c1 = (e0 + e1).exp();
    let candidates = eta_strata(alpha0, e0.exp());
    let mut certified = !candidates.is_empty();
    let mut closest = f64::INFINITY;
    for (p0, p1) in &candidates {
        let k = p1 * (1.0 - p0) / (p0 * (1.0 - p1));
        let (gap, crossed) = min_eta_gap_on_or_curve(k, c1);
        certified &= !crossed && gap > 1e-3;
        closest = closest.min(gap);
    }
    check(
        shortfall > 5.0 * r.std_error && fixture_ok && !library_verdict && certified,
        format!(
            "OR probability {} ({:.1} SE below 1, fixture {}); point {INCOMPATIBLE_POINT:?} incompatible, \
             {} stratum-0 candidates, grid oracle min |eta - c1| {closest:.4}",
            r.probability,
            shortfall / r.std_error,
            RR_ETA_OR_COMPATIBLE,
            candidates.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let verdict = |p01: &str| {
        String::from_utf8(effgeo(&["feasible", "--p00", ".27", "--p10", ".46", "--p01", p01, "--measure", "rd"])).unwrap()
    };
    let (above, below) = (verdict(".82"), verdict(".80"));
    let step = 0.001;
    let grid: Vec<f64> = (0..=200).map(|i| 0.70 + step * i as f64).collect();
    let feasible: Vec<bool> = grid
        .iter()
        .map(|&p01| is_feasible(&HomogeneityQuery::new(Measure::Rd, 0.27, 0.46, p01).unwrap()))
        .collect();
    let flips: Vec<usize> = (1..grid.len()).filter(|&i| feasible[i] != feasible[i - 1]).collect();
    let boundary = match flips.as_slice() {
        [i] if feasible[i - 1] => Some(0.5 * (grid[i - 1] + grid[*i])),
        _ => None,
    };
    check(
        above.starts_with("infeasible") && below.starts_with("feasible")
            && boundary.is_some_and(|b| (b - 0.81).abs() <= step),
        format!("{}; {}; boundary {:?} (step {step})", above.trim(), below.trim(), boundary),
    )
}

fn criterion_8() -> Outcome {
    let rd = measure_range(Measure::Rd, 0.5).unwrap();
    let rr = measure_range(Measure::Rr, 0.5).unwrap();
    let or = measure_range(Measure::Or, 0.5).unwrap();
    check(
        (rd.low, rd.high) == (-0.5, 0.5) && (rr.low, rr.high) == (0.0, 2.0) && (or.low, or.high) == (0.0, f64::INFINITY),
        format!("RD ({}, {}), RR ({}, {}), OR ({}, {})", rd.low, rd.high, rr.low, rr.high, or.low, or.high),
    )
}

fn random_table(rng: &mut impl Rng) -> RiskTable {
    let mut p = || rng.random_range(0.001..0.999);
    RiskTable::from_cells(p(), p(), p(), p()).unwrap()
}

fn max_diff(a: &RiskTable, b: &RiskTable) -> f64 {
    let (a, b) = (a.cells(), b.cells());
    (0..4).map(|i| (a[i / 2][i % 2] - b[i / 2][i % 2]).abs()).fold(0.0, f64::max)
}

fn criterion_9() -> Outcome {
    let mut rng = chunk_rng(9, 0);
    let (mut poisson, mut rr_op, mut logistic) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let t = random_table(&mut rng);
        poisson = poisson.max(max_diff(&t, &from_poisson(&to_poisson(&t)).unwrap()));
        rr_op = rr_op.max(max_diff(&t, &from_rr_op(&to_rr_op(&t))));
        logistic = logistic.max(max_diff(&t, &from_logistic(&to_logistic(&t))));
    }
    let mut missed = 0;
    for _ in 0..10_000 {
        let t = random_table(&mut rng);
        let back = from_rr_eta(&to_rr_eta(&t).unwrap());
        if !back.iter().any(|s| max_diff(&t, s) < 1e-8) {
            missed += 1;
        }
    }
    check(
        poisson < 1e-10 && rr_op < 1e-10 && logistic < 1e-10 && missed == 0,
        format!("max error poisson {poisson:.1e}, rr_op {rr_op:.1e}, logistic {logistic:.1e}; rr_eta misses {missed} of 10000"),
    )
}

fn criterion_10() -> Outcome {
    let mut failures = 0;
    let mut non_unique = 0;
    for i in 0..100 {
        for j in 0..100 {
            let theta = -5.0 + 10.0 * i as f64 / 99.0;
            let phi = -5.0 + 10.0 * j as f64 / 99.0;
            let (r, w) = (theta.exp(), phi.exp());
            let s = solve_stratum_from_rr_op(theta, phi);
            let valid = s.p0 > 0.0 && s.p0 < 1.0 && s.p1 > 0.0 && s.p1 < 1.0;
            if !valid
                || (s.relative_risk().ln() - theta).abs() > 1e-9
                || (s.odds_product().ln() - phi).abs() > 1e-9
            {
                failures += 1;
            }
            let upper = r.recip().min(1.0);
            let (a, b, c) = (r * (1.0 - w), w * (1.0 + r), -w);
            let roots: Vec<f64> = if a == 0.0 {
                vec![-c / b]
            } else {
                let d = (b * b - 4.0 * a * c).sqrt();
                vec![(-b - d) / (2.0 * a), (-b + d) / (2.0 * a)]
            };
            if roots.iter().filter(|&&p| p > 0.0 && p < upper).count() != 1 {
                non_unique += 1;
            }
        }
    }
    check(
        failures == 0 && non_unique == 0,
        format!("10000 grid points, {failures} failures, {non_unique} without a unique root"),
    )
}

fn criterion_11() -> Outcome {
    let sim = PowerSimulator::default();
    let null = sim
        .simulate(
            &RiskTable::from_cells(0.5, 0.5, 0.5, 0.5).unwrap(),
            &StudyDesign::balanced(500).unwrap(),
            0.05,
            10_000,
            11,
        )
        .unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for s in &null.scales {
        ok &= (s.rejection_rate - 0.05).abs() < 4.0 * s.std_error;
        notes.push(format!("null {} {}", s.scale, s.rejection_rate));
    }
    let het = sim
        .simulate(
            &RiskTable::from_cells(0.2, 0.5, 0.4, 0.7).unwrap(),
            &StudyDesign::balanced(1000).unwrap(),
            0.05,
            10_000,
            11,
        )
        .unwrap();
    let (id, logit) = (het.scale(Scale::Identity), het.scale(Scale::Logit));
    ok &= (id.rejection_rate - 0.05).abs() < 4.0 * id.std_error;
    ok &= logit.rejection_rate - 0.05 > 5.0 * logit.std_error;
    notes.push(format!("RD-homogeneous identity {} logit {}", id.rejection_rate, logit.rejection_rate));
    check(ok, notes.join(", "))
}

fn criterion_12() -> Outcome {
    let invocations: [&[&str]; 4] = [
        &["--format", "csv", "volume", "--system", "prob", "--n-samples", "200000", "--seed", "3"],
        &["--format", "json", "volume", "--system", "rr_eta", "--n-samples", "5000", "--seed", "3"],
        &["--format", "csv", "power", "--p00", ".2", "--p10", ".4", "--p01", ".5", "--p11", ".7", "--n", "300", "--reps", "20000", "--seed", "3"],
        &["--format", "json", "power", "--p00", ".3", "--p10", ".3", "--p01", ".4", "--p11", ".2", "--n", "50", "--reps", "20000", "--seed", "3"],
    ];
    let mut identical = 0;
    for args in invocations {
        let outputs: Vec<Vec<u8>> = ["1", "2", "4", "1"]
            .into_iter()
            .map(|w| {
                let mut full = vec!["--workers", w];
                full.extend_from_slice(args);
                effgeo(&full)
            })
            .collect();
        if outputs.windows(2).all(|w| w[0] == w[1]) {
            identical += 1;
        }
    }
    check(
        identical == invocations.len(),
        format!("{identical} of {} invocations byte-identical across --workers 1, 2, 4, 1", invocations.len()),
    )
}

fn main() {
    let cube = cube_run();
    let rr_eta = volume_rows(&["--system", "rr_eta", "--n-samples", "100000", "--seed", "0"]);
    let results: Vec<(u8, Outcome)> = vec![
        (1, criterion_1(&cube)),
        (2, criterion_2(&cube)),
        (3, criterion_3(&cube)),
        (4, criterion_4(&cube)),
        (5, criterion_5(&rr_eta)),
        (6, criterion_6(&rr_eta)),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10()),
        (11, criterion_11()),
        (12, criterion_12()),
    ];
    let mut failed = 0;
    for (n, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n:>2}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
