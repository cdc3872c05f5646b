use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use udw::config::{write_rows, Family, OutputRow, RunConfig, TrajectoryChoice};
use udw::critical::{find_critical, CriticalKind, CriticalQuery};
use udw::entanglement::{harvest_pair_detailed, PbBoundary};
use udw::kinematics::{CircularKinematics, DetectorSpec, PairGeometry, PairKind, UniformKinematics};
use udw::oracle::{fixture_cases, generate_fixture, read_fixture, reduced_case, write_fixture, EpsilonLadder};
use udw::quadrature::QuadratureBudget;
use udw::sweep::{evaluate_point, probability, run_sweep, Axis, Quantity, Spacing, SweepSpec};
use udw::{correlation, Error, Mirror};

#[derive(Parser)]
#[command(name = "udw", version, about = "Unruh-DeWitt detectors near a reflecting plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transition probability of detector A.
    Prob(PointArgs),
    /// Nonlocal correlation term X.
    Xterm(PointArgs),
    /// P_A, P_B, |X| and the harvested concurrence.
    Concurrence(PointArgs),
    /// One row per point of a one-dimensional parameter grid.
    Sweep(SweepArgs),
    /// Critical value of a qualitative transition.
    Critical(CriticalArgs),
    /// Regenerate or replay the brute-force fixture.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    traj: Option<TrajectoryChoice>,
    /// Relative tolerance; the absolute tolerance follows at 1e-2 of it.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    pb_boundary: Option<PbBoundary>,
    #[arg(long, value_enum)]
    mirror: Option<Mirror>,
    #[arg(long = "a-sigma")]
    a: Option<f64>,
    #[arg(long = "R-over-sigma")]
    r: Option<f64>,
    #[arg(long = "R-B-over-sigma")]
    r_b: Option<f64>,
    #[arg(long = "Omega-sigma")]
    omega: Option<f64>,
    #[arg(long = "dz-over-sigma")]
    dz: Option<f64>,
    #[arg(long = "dd-over-sigma")]
    dd: Option<f64>,
    /// Exit with status 3 if any row carries an error.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    common: Common,
    /// Emit the full result as JSON instead of a CSV row.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    axis: Axis,
    /// start:stop:steps
    #[arg(long)]
    range: String,
    #[arg(long, value_enum, default_value = "linear")]
    spacing: Spacing,
    #[arg(long, value_enum, default_value = "concurrence")]
    quantity: Quantity,
    /// Parallel evaluations (all cores when omitted).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct CriticalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: CriticalKind,
    /// lo:hi, overriding the default search interval.
    #[arg(long)]
    search: Option<String>,
    /// Width of the final bracket.
    #[arg(long, default_value_t = 1e-3)]
    precision: f64,
    /// Points of the predicate's sampling grid.
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// Write a freshly generated fixture here.
    #[arg(long, conflicts_with = "replay")]
    out: Option<PathBuf>,
    /// Compare the reduced formulas against this fixture.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Largest accepted relative deviation on replay.
    #[arg(long, default_value_t = 1e-4)]
    max_rel: f64,
    #[arg(long)]
    workers: Option<usize>,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::NonPositiveParameter { .. } | Error::CoincidentDetectors => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn parse_range(text: &str) -> Result<(f64, f64, usize), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::Config(format!("--range expects start:stop:steps, got {text:?}"));
    match parts.as_slice() {
        [a, b, n] => Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

fn parse_interval(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Config(format!("expected lo:hi, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    Ok((lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?))
}

impl Common {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.a_sigma, self.a);
        set(&mut cfg.r_over_sigma, self.r);
        set(&mut cfg.omega_sigma, self.omega);
        set(&mut cfg.dz_over_sigma, self.dz);
        set(&mut cfg.dd_over_sigma, self.dd);
        if self.r_b.is_some() {
            cfg.r_b_over_sigma = self.r_b;
        }
        if let Some(t) = self.traj {
            cfg.trajectory = t;
        }
        if let Some(p) = self.pb_boundary {
            cfg.pb_boundary = p;
        }
        if let Some(m) = self.mirror {
            cfg.mirror = m;
        }
        if let Some(tol) = self.tol {
            cfg.budget.rel_tol = tol;
            cfg.budget.abs_tol = 1e-2 * tol;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn sink(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.out {
            Some(path) => Box::new(File::create(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn finish(&self, rows: &[OutputRow]) -> Result<(), Failure> {
        write_rows(self.sink()?, rows)?;
        match rows.iter().find(|r| r.is_error()) {
            Some(r) if self.strict => Err(Failure::Numerical(r.error.clone())),
            _ => Ok(()),
        }
    }
}

fn emit_json<T: Serialize>(common: &Common, value: &T) -> Result<(), Failure> {
    let mut out = common.sink()?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Config(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn x_only(cfg: &RunConfig, family: Family) -> udw::Result<correlation::XResult> {
    let det = DetectorSpec::new(cfg.omega_sigma)?;
    let (dd, dz, m, b) = (cfg.dd_over_sigma, cfg.dz_over_sigma, cfg.mirror, &cfg.budget);
    match (family, cfg.r_b_over_sigma) {
        (Family::Uniform, _) => {
            let kin = UniformKinematics::new(cfg.a_sigma, dz)?;
            correlation::x_uniform_pair_in(&kin, &PairGeometry::new(dd, dz, PairKind::UniformPair)?, &det, b, m)
        }
        (Family::Circular, None) => {
            let kin = CircularKinematics::new(cfg.a_sigma, cfg.r_over_sigma, dz)?;
            correlation::x_comoving_circular_in(&kin, &PairGeometry::new(dd, dz, PairKind::CircularComoving)?, &det, b, m)
        }
        (Family::Circular, Some(rb)) => {
            let ka = CircularKinematics::new(cfg.a_sigma, cfg.r_over_sigma, dz)?;
            let kb = CircularKinematics::from_angular_velocity(ka.omega(), rb, dz + dd)?;
            let geom = PairGeometry::new(dd, dz, PairKind::CircularSyncTwoRadii)?;
            correlation::x_sync_two_radii_in(&ka, &kb, &geom, &det, b, m)
        }
    }
}

#[derive(Serialize)]
struct Labeled<T> {
    traj: &'static str,
    #[serde(flatten)]
    result: T,
}

fn point(args: &PointArgs, which: &str) -> Result<(), Failure> {
    let common = &args.common;
    let cfg = common.config()?;
    let families = cfg.trajectory.families();
    if args.json {
        let mut out = Vec::new();
        for &f in families {
            let value = match which {
                "prob" => serde_json::to_value(probability(&cfg, f, &cfg.budget)?),
                "xterm" => serde_json::to_value(x_only(&cfg, f)?),
                _ => {
                    let (h, pa, pb, x) = harvest_pair_detailed(&cfg.pair(f)?, &cfg.budget)?;
                    serde_json::to_value(serde_json::json!({"harvest": h, "p_a": pa, "p_b": pb, "x": x}))
                }
            }
            .map_err(|e| Failure::Config(e.to_string()))?;
            out.push(Labeled { traj: f.label(), result: value });
        }
        return emit_json(common, &out);
    }
    let rows: Vec<OutputRow> = families
        .iter()
        .map(|&f| match which {
            "prob" => evaluate_point(&cfg, f, Quantity::Probability, &cfg.budget),
            "xterm" => {
                let row = OutputRow::blank(&cfg, f);
                match x_only(&cfg, f) {
                    Ok(x) => OutputRow {
                        abs_x: Some(x.abs_x),
                        err_est: Some(x.err_est),
                        ..row
                    },
                    Err(e) => row.failed(&e),
                }
            }
            _ => evaluate_point(&cfg, f, Quantity::Concurrence, &cfg.budget),
        })
        .collect();
    common.finish(&rows)
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let cfg = args.common.config()?;
    let (start, stop, steps) = parse_range(&args.range)?;
    let spec = SweepSpec::new(args.axis, start, stop, steps, cfg.clone())
        .with_spacing(args.spacing)
        .with_quantity(args.quantity)
        .with_trajectory(cfg.trajectory);
    let rows = run_sweep(&spec, &cfg.budget, args.workers)?;
    args.common.finish(&rows)
}

fn critical(args: &CriticalArgs) -> Result<(), Failure> {
    let cfg = args.common.config()?;
    let mut query = match args.kind {
        CriticalKind::AccelMonotonicity => CriticalQuery::accel_monotonicity(cfg.omega_sigma, cfg.dz_over_sigma),
        CriticalKind::DzIntersection => CriticalQuery::dz_intersection(cfg.omega_sigma),
        CriticalKind::OmegaIntersection => CriticalQuery::omega_intersection(),
        CriticalKind::CircUniformCrossing => CriticalQuery::circ_uniform_crossing(cfg.r_over_sigma, cfg.omega_sigma, cfg.dz_over_sigma),
    };
    if let Some(s) = &args.search {
        let (lo, hi) = parse_interval(s)?;
        query = query.with_search(lo, hi);
    }
    if let Some(n) = args.grid_points {
        query.grid.points = n;
    }
    if let Some(m) = args.common.mirror {
        query.mirror = m;
    }
    if args.kind == CriticalKind::OmegaIntersection && args.common.dz.is_some() {
        query.dz = cfg.dz_over_sigma;
    }
    query = query.with_tolerance(args.precision);
    let budget = if args.common.tol.is_some() || args.common.config.is_some() {
        cfg.budget
    } else {
        query.recommended_budget()
    };
    let run = || find_critical(&query, &budget);
    let result = match args.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Failure::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    emit_json(&args.common, &serde_json::json!({"query": query, "result": result}))
}

#[derive(Serialize)]
struct ReplayLine {
    case_id: u32,
    operation: udw::oracle::FixtureOp,
    oracle_re: f64,
    oracle_im: f64,
    reduced_re: f64,
    reduced_im: f64,
    rel_dev: f64,
}

fn oracle(args: &OracleArgs) -> Result<(), Failure> {
    let ladder = EpsilonLadder::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(path) = &args.out {
        let rows = pool.install(|| generate_fixture(&fixture_cases(), &ladder))?;
        write_fixture(path, &rows)?;
        eprintln!("wrote {} rows to {}", rows.len(), path.display());
        return Ok(());
    }
    let Some(path) = &args.replay else {
        return Err(Failure::Config("oracle needs --out or --replay".into()));
    };
    let rows = read_fixture(path)?;
    let budget = QuadratureBudget::default();
    let hash = ladder.hash();
    let mut worst: f64 = 0.0;
    let mut out = io::stdout().lock();
    for row in &rows {
        if row.eps_ladder_hash != hash {
            return Err(Failure::Config(format!("case {} was generated with ladder {}, expected {hash}", row.case_id, row.eps_ladder_hash)));
        }
        let reduced = reduced_case(&row.case(), &budget)?;
        let oracle = num_complex::Complex64::new(row.value_re, row.value_im);
        let rel_dev = (reduced - oracle).norm() / oracle.norm();
        worst = worst.max(rel_dev);
        let line = ReplayLine {
            case_id: row.case_id,
            operation: row.operation,
            oracle_re: oracle.re,
            oracle_im: oracle.im,
            reduced_re: reduced.re,
            reduced_im: reduced.im,
            rel_dev,
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| Failure::Config(e.to_string()))?;
        writeln!(out)?;
    }
    eprintln!("{} cases, worst relative deviation {worst:.3e}", rows.len());
    if worst > args.max_rel {
        return Err(Failure::Numerical(format!("deviation {worst:.3e} exceeds {:.1e}", args.max_rel)));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prob(a) => point(a, "prob"),
        Command::Xterm(a) => point(a, "xterm"),
        Command::Concurrence(a) => point(a, "concurrence"),
        Command::Sweep(a) => sweep(a),
        Command::Critical(a) => critical(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("udw: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("udw: numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
