use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use effgeo::parallel::WORKERS_ENV;
use effgeo::{Error, Measure, System};

mod commands;
mod format;

use format::Format;

/// Geometry of binary effect measures on 2x2x2 risk tables.
#[derive(Debug, Parser)]
#[command(name = "effgeo", version)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "plain")]
    format: Format,

    /// Worker threads for volume and power runs; 0 uses every core.
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long)]
    p00: f64,
    #[arg(long)]
    p10: f64,
    #[arg(long)]
    p01: f64,
    #[arg(long)]
    p11: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Effect measures per stratum and their interactions.
    Measures(TableArgs),

    /// Whether a homogeneity constraint can be completed with a valid p11.
    Feasible {
        #[arg(long)]
        p00: f64,
        #[arg(long)]
        p10: f64,
        #[arg(long)]
        p01: f64,
        /// rd, rr or or.
        #[arg(long)]
        measure: Measure,
    },

    /// Monte Carlo probability that homogeneity is compatible.
    Volume(VolumeArgs),

    /// Rejection rates of Wald interaction tests.
    Power(PowerArgs),

    /// Converts a point between coordinate systems.
    Convert {
        #[arg(long)]
        from_system: System,
        #[arg(long)]
        to_system: System,
        /// Four coordinates, ordered as the system's coordinate names.
        #[arg(long, num_args = 4, allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Args)]
struct VolumeArgs {
    /// Prior configuration document.
    #[arg(long, conflicts_with_all = ["system", "target", "n_samples", "seed", "bounds"])]
    config: Option<PathBuf>,

    #[arg(long, required_unless_present = "config")]
    system: Option<System>,

    /// Targets to run; repeatable. Defaults to every supported target.
    #[arg(long)]
    target: Vec<Measure>,

    #[arg(long, default_value_t = 100_000)]
    n_samples: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Three `low,high` pairs; defaults to the system's default box.
    #[arg(long, num_args = 3, allow_hyphen_values = true, value_parser = parse_pair)]
    bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[command(flatten)]
    truth: TableArgs,

    /// Subjects per cell in a balanced design.
    #[arg(long, conflicts_with_all = ["n00", "n01", "n10", "n11"], required_unless_present_all = ["n00", "n01", "n10", "n11"])]
    n: Option<u64>,
    #[arg(long, requires_all = ["n01", "n10", "n11"])]
    n00: Option<u64>,
    #[arg(long)]
    n01: Option<u64>,
    #[arg(long)]
    n10: Option<u64>,
    #[arg(long)]
    n11: Option<u64>,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long, default_value_t = 1000)]
    reps: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected low,high but got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

/// Failures mapped to process exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Usage(e.to_string()),
            other => Failure::Domain(other),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain(Error::Numerical(_)) => 4,
            Failure::Domain(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Domain(e) => write!(f, "{e}"),
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let fmt = cli.format;
    match cli.command {
        Command::Measures(t) => commands::measures(fmt, t.p00, t.p10, t.p01, t.p11),
        Command::Feasible {
            p00,
            p10,
            p01,
            measure,
        } => commands::feasible(fmt, measure, p00, p10, p01),
        Command::Volume(v) => {
            let runs = match v.config {
                Some(path) => {
                    let src = std::fs::read_to_string(&path)
                        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                    effgeo::config::parse(&src)?.runs
                }
                None => {
                    let system = v.system.expect("clap enforces --system");
                    let bounds = match v.bounds {
                        Some(b) => [b[0], b[1], b[2]],
                        None => effgeo::PriorSpec::default_bounds(system)?,
                    };
                    commands::inline_runs(system, &v.target, bounds, v.n_samples, v.seed)?
                }
            };
            commands::volume(fmt, cli.workers, &runs)
        }
        Command::Power(p) => {
            let design = match p.n {
                Some(n) => effgeo::StudyDesign::balanced(n)?,
                None => effgeo::StudyDesign::new([
                    [p.n00.unwrap_or(0), p.n01.unwrap_or(0)],
                    [p.n10.unwrap_or(0), p.n11.unwrap_or(0)],
                ])?,
            };
            let t = p.truth;
            let truth = effgeo::RiskTable::from_cells(t.p00, t.p01, t.p10, t.p11)?;
            commands::power(fmt, cli.workers, &truth, &design, p.alpha, p.reps, p.seed)
        }
        Command::Convert {
            from_system,
            to_system,
            values,
        } => commands::convert(fmt, from_system, to_system, [values[0], values[1], values[2], values[3]]),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
