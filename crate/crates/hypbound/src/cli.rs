//! Command-line front end. Every command writes a JSON report and CSV tables
//! into the output directory.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bifurcation::{find_a_star, scan, scan_csv, GammaConfig, Observable};
use crate::config::RunConfig;
use crate::curve::PolyCurve;
use crate::curves_critical::{
    critical_gaps, extrapolate_critical_point, find_critical_point, lambda, unstable_component_in_strip, CriticalPoint,
};
use crate::error::{Error, Result};
use crate::fixed_points::{find_fixed_points, one_d_fixed_points, FixedPointData, ManifoldKind};
use crate::geometry::{Point2, Rect};
use crate::hypcoord::{integrate_stable_leaf, leaf_convergence};
use crate::hyperbolicity::{
    certify_outside, lyapunov_cycle, lyapunov_orbit, omega_approximation, periodic_orbits, splitting_diagnostics,
    ConePlan, OmegaPlan,
};
use crate::manifolds::{grow, GrowthConfig, Side};
use crate::map_core::HenonLikeMap;
use crate::onedim::{od_a_star, od_expansion_outside, od_fixed_points, od_periodic_orbits, OneDMap, OneDPerturbation};
use crate::regions::{verify_escape, DRegion, Region};
use crate::report::{write_atomic, Cell, Report, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECKS_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hypbound",
    version,
    about = "Invariant manifolds, tangency parameters and hyperbolicity diagnostics for Henon-like maps",
    after_help = "Environment:\n  HYPBOUND_THREADS  cap on worker threads\n\nExit status: 0 success, 2 a check failed, 1 usage or runtime error."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Registered perturbation name (zero, bump).
    #[arg(long, global = true)]
    pub perturbation: Option<String>,
    /// Perturbation scale s.
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long = "lambda-hat", global = true)]
    pub lambda_hat: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed points P and Q with eigen-data.
    FixedPoints,
    /// Grow a stable or unstable manifold of P or Q.
    Manifold(ManifoldArgs),
    /// Locate the first tangency parameter by bisection.
    Astar(AstarArgs),
    /// Escape check on a grid of V1..V6.
    EscapeCheck(EscapeArgs),
    /// Cone-field certificate outside the critical strip.
    CertifyCones(ConeArgs),
    /// Critical points of order k on the unstable component in the strip.
    CriticalPoints(CriticalArgs),
    /// Integrate a stable leaf of order k and its convergence in k.
    Foliation(FoliationArgs),
    /// Lyapunov exponents of the fixed points or of an orbit.
    Lyapunov(LyapunovArgs),
    /// Periodic orbits from symbolic seeds.
    PeriodicOrbits(PeriodicArgs),
    /// E_u / E_s splitting on the approximate nonwandering set.
    Splitting(SplittingArgs),
    /// Parameter scan of tangency observables.
    Scan(ScanArgs),
    /// The one-dimensional family.
    Onedim(OnedimArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    P,
    Q,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Stable,
    Unstable,
}

#[derive(Debug, Args, Serialize)]
pub struct ManifoldArgs {
    #[arg(long, value_enum, default_value = "q")]
    pub point: Which,
    #[arg(long, value_enum, default_value = "unstable")]
    pub kind: Kind,
    /// Arclength per branch.
    #[arg(long, default_value_t = 5.0)]
    pub length: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct AstarArgs {
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [1.7, 2.3], allow_hyphen_values = true)]
    pub bracket: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EscapeArgs {
    /// V1..V6, or all.
    #[arg(long, default_value = "all")]
    pub region: String,
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ConeArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 60)]
    pub max_segment: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CriticalArgs {
    #[arg(long, default_value_t = 6)]
    pub k_max: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FoliationArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub x: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub length: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LyapunovArgs {
    /// Start of an orbit; without it the fixed points are reported.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PeriodicArgs {
    #[arg(long, default_value_t = 10)]
    pub max_period: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SplittingArgs {
    #[arg(long, default_value_t = 10)]
    pub k_split: usize,
    #[arg(long, default_value_t = 0.05)]
    pub min_angle: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub max_defect: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.9)]
    pub a_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.2)]
    pub a_max: f64,
    #[arg(long, default_value_t = 31)]
    pub steps: usize,
    /// Comma-separated: gap, crossings, min_angle, lyapunov_min.
    #[arg(long, default_value = "gap,crossings")]
    pub observables: String,
}

#[derive(Debug, Args, Serialize)]
pub struct OnedimArgs {
    #[command(subcommand)]
    pub command: OnedimCommand,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum OnedimCommand {
    FixedPoints,
    PeriodicOrbits {
        #[arg(long, default_value_t = 10)]
        max_period: usize,
    },
    Astar {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [1.5, 2.5])]
        bracket: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    Expansion {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        max_len: usize,
    },
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = std::env::var("HYPBOUND_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECKS_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Merge the config file and the flag overrides.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut c = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(a) = g.a {
        c.family.a = a;
    }
    if let Some(b) = g.b {
        c.family.b = b;
    }
    if let Some(p) = &g.perturbation {
        c.family.perturbation.clone_from(p);
    }
    if let Some(s) = g.scale {
        c.family.perturbation_params.insert("s".into(), s);
    }
    if let Some(e) = g.epsilon {
        c.constants.epsilon = e;
    }
    if let Some(a) = g.alpha {
        c.constants.alpha = a;
    }
    if let Some(l) = g.lambda_hat {
        c.constants.lambda_hat = l;
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(o) = &g.out {
        c.output_dir.clone_from(o);
    }
    Ok(c)
}

struct Output<'a> {
    cfg: &'a RunConfig,
    command: &'a str,
}

impl Output<'_> {
    fn report<T: Serialize>(&self, options: impl Serialize, passed: bool, result: T) -> Result<bool> {
        let r = Report::new(self.command, self.cfg, options, passed, result)?;
        write_atomic(&self.cfg.output_dir.join(format!("{}.json", self.command)), r.to_json()?.as_bytes())?;
        Ok(passed)
    }

    fn csv(&self, suffix: &str, body: &str) -> Result<()> {
        write_atomic(&self.cfg.output_dir.join(format!("{}_{suffix}.csv", self.command)), body.as_bytes())
    }
}

fn curves_table(curves: &[PolyCurve]) -> Table {
    let mut t = Table::new(&["arc", "t", "x", "y", "tx", "ty", "kappa"]);
    for (i, c) in curves.iter().enumerate() {
        for j in 0..c.len() {
            t.push(vec![
                i.into(),
                c.param[j].into(),
                c.vertices[j].x.into(),
                c.vertices[j].y.into(),
                c.tangents[j].x.into(),
                c.tangents[j].y.into(),
                c.curvatures[j].into(),
            ]);
        }
    }
    t
}

#[derive(Serialize)]
struct FixedPointsResult {
    p: FixedPointData,
    q: FixedPointData,
    one_d: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct ManifoldResult {
    arcs: usize,
    vertices: usize,
    arclength: f64,
    generations: usize,
}

#[derive(Serialize)]
struct ConeSummary {
    epsilon: f64,
    alpha: f64,
    lambda_hat: f64,
    samples: usize,
    slope_violations: usize,
    measured_c_eps: f64,
    ue1_failures: usize,
    ue2_segments: usize,
    ue2_failures: usize,
}

#[derive(Serialize)]
struct CriticalResult {
    points: Vec<CriticalPoint>,
    errors: Vec<(usize, String)>,
    gaps: Vec<f64>,
    extrapolation: std::result::Result<crate::curves_critical::Extrapolation, String>,
    curvature_threshold: f64,
}

#[derive(Serialize)]
struct SplittingSummary {
    source: crate::hyperbolicity::OmegaSource,
    points: usize,
    k_split: usize,
    min_angle: f64,
    mean_angle: f64,
    modulus: Vec<(f64, f64, f64)>,
    invariance_defect: f64,
    matched_pairs: usize,
}

fn map_of(cfg: &RunConfig) -> Result<HenonLikeMap> {
    HenonLikeMap::from_params(&cfg.family)
}

/// Run a parsed command; Ok(false) means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve_config(&cli.global)?;
    let name = match &cli.command {
        Command::FixedPoints => "fixed-points",
        Command::Manifold(_) => "manifold",
        Command::Astar(_) => "astar",
        Command::EscapeCheck(_) => "escape-check",
        Command::CertifyCones(_) => "certify-cones",
        Command::CriticalPoints(_) => "critical-points",
        Command::Foliation(_) => "foliation",
        Command::Lyapunov(_) => "lyapunov",
        Command::PeriodicOrbits(_) => "periodic-orbits",
        Command::Splitting(_) => "splitting",
        Command::Scan(_) => "scan",
        Command::Onedim(_) => "onedim",
    };
    let out = Output { cfg: &cfg, command: name };
    let k = &cfg.constants;
    match &cli.command {
        Command::FixedPoints => {
            let map = map_of(&cfg)?;
            let (p, q) = find_fixed_points(&map)?;
            let mut t = Table::new(&["label", "x", "y", "lambda_exp", "lambda_con"]);
            for fp in [&p, &q] {
                t.push(vec![
                    format!("{:?}", fp.label).into(),
                    fp.location.x.into(),
                    fp.location.y.into(),
                    fp.lambda_exp.into(),
                    fp.lambda_con.into(),
                ]);
            }
            out.csv("table", &t.to_csv())?;
            let one_d = one_d_fixed_points(cfg.family.a).ok();
            out.report((), true, FixedPointsResult { p, q, one_d })
        }
        Command::Manifold(args) => {
            let map = map_of(&cfg)?;
            let (p, q) = find_fixed_points(&map)?;
            let fp = match args.point {
                Which::P => p,
                Which::Q => q,
            };
            let kind = match args.kind {
                Kind::Stable => ManifoldKind::Stable,
                Kind::Unstable => ManifoldKind::Unstable,
            };
            let g = GrowthConfig {
                max_arclength: args.length,
                refinement: k.tolerances.refinement,
                side: Side::Both,
                ..GrowthConfig::default()
            };
            let m = grow(&map, &fp, kind, &g)?;
            out.csv("curve", &curves_table(&m.arcs).to_csv())?;
            let r = ManifoldResult {
                arcs: m.arcs.len(),
                vertices: m.vertex_count(),
                arclength: m.arclength(),
                generations: m.generations,
            };
            out.report(args, true, r)
        }
        Command::Astar(args) => {
            let gc = GammaConfig { refinement: k.tolerances.refinement, ..GammaConfig::default() };
            let r = find_a_star(&cfg.family, &gc, (args.bracket[0], args.bracket[1]), args.tol)?;
            let mut t = Table::new(&["a", "gap"]);
            for s in &r.samples {
                t.push(vec![s.a.into(), s.gap.into()]);
            }
            out.csv("gap", &t.to_csv())?;
            out.report(args, true, r)
        }
        Command::EscapeCheck(args) => {
            let map = map_of(&cfg)?;
            let regions: Vec<Region> = if args.region.eq_ignore_ascii_case("all") {
                Region::ESCAPE.iter().map(|(r, _)| *r).collect()
            } else {
                vec![args.region.parse()?]
            };
            let reports = regions.iter().map(|r| verify_escape(&map, *r, args.grid)).collect::<Result<Vec<_>>>()?;
            let mut t = Table::new(&["region", "x", "y", "reason"]);
            for r in &reports {
                for f in &r.failures {
                    t.push(vec![format!("{:?}", r.region).into(), f.x.into(), f.y.into(), f.reason.clone().into()]);
                }
            }
            out.csv("failures", &t.to_csv())?;
            let passed = reports.iter().all(|r| r.passed());
            out.report(args, passed, reports)
        }
        Command::CertifyCones(args) => {
            let map = map_of(&cfg)?;
            let d = DRegion::build(&map, &k.tolerances.refinement)?;
            let plan = ConePlan { samples: args.samples, max_segment: args.max_segment, seed: cfg.seed, ..ConePlan::default() };
            let c = certify_outside(&map, &d, k.epsilon, k.alpha, k.lambda_hat, &plan)?;
            let mut t = Table::new(&["x", "y", "length", "log_expansion", "worst_defect", "ue2"]);
            for s in &c.segment_stats {
                let ue2 = match s.passed_ue2 {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "",
                };
                t.push(vec![s.x.into(), s.y.into(), s.length.into(), s.log_expansion.into(), s.worst_defect.into(), ue2.into()]);
            }
            out.csv("segments", &t.to_csv())?;
            let passed = c.passed();
            let summary = ConeSummary {
                epsilon: c.epsilon,
                alpha: c.alpha,
                lambda_hat: c.lambda_hat,
                samples: c.samples,
                slope_violations: c.slope_violations.len(),
                measured_c_eps: c.measured_c_eps,
                ue1_failures: c.segment_stats.iter().filter(|s| !s.passed_ue1).count(),
                ue2_segments: c.ue2_segments,
                ue2_failures: c.ue2_failures,
            };
            out.report(args, passed, summary)
        }
        Command::CriticalPoints(args) => {
            let map = map_of(&cfg)?;
            let curve = unstable_component_in_strip(&map, k.epsilon)?;
            out.csv("curve", &curves_table(std::slice::from_ref(&curve.curve)).to_csv())?;
            let mut points = Vec::new();
            let mut errors = Vec::new();
            for order in 1..=args.k_max {
                match find_critical_point(&map, &curve, order) {
                    Ok(c) => points.push(c),
                    Err(e) => errors.push((order, e.to_string())),
                }
            }
            let mut t = Table::new(&["k", "t", "cx", "cy", "c0x", "c0y", "residual", "image_curvature"]);
            for c in &points {
                t.push(vec![
                    c.order.into(),
                    c.t.into(),
                    c.c_x.into(),
                    c.c_y.into(),
                    c.c0_x.into(),
                    c.c0_y.into(),
                    c.residual.into(),
                    c.image_curvature.into(),
                ]);
            }
            out.csv("points", &t.to_csv())?;
            let threshold = map.a / map.b.abs();
            let passed = points.iter().all(|c| c.image_curvature.abs() > threshold);
            let r = CriticalResult {
                gaps: critical_gaps(&points),
                extrapolation: extrapolate_critical_point(&points).map_err(|e| e.to_string()),
                points,
                errors,
                curvature_threshold: threshold,
            };
            out.report(args, passed, r)
        }
        Command::Foliation(args) => {
            let map = map_of(&cfg)?;
            let seed = Point2::new(args.x, args.y);
            let domain = |z: Point2| Rect::R_HAT.contains(z);
            let leaf = integrate_stable_leaf(&map, seed, args.k, args.length, args.step, domain)?;
            out.csv("leaf", &curves_table(std::slice::from_ref(&leaf.curve)).to_csv())?;
            let conv = leaf_convergence(&map, seed, args.k, args.length, domain)?;
            out.report(args, true, conv)
        }
        Command::Lyapunov(args) => {
            let map = map_of(&cfg)?;
            let reports = match &args.point {
                Some(v) => vec![lyapunov_orbit(&map, Point2::new(v[0], v[1]), args.n)?],
                None => {
                    let (p, q) = find_fixed_points(&map)?;
                    vec![lyapunov_cycle(&map, &[p.location], "P")?, lyapunov_cycle(&map, &[q.location], "Q")?]
                }
            };
            let mut t = Table::new(&["label", "n", "lambda_u", "lambda_s", "residual"]);
            for r in &reports {
                t.push(vec![r.label.clone().into(), r.n.into(), r.lambda_u.into(), r.lambda_s.into(), r.residual.into()]);
            }
            out.csv("exponents", &t.to_csv())?;
            let passed = reports.iter().all(|r| r.residual <= 1e-9);
            out.report(args, passed, reports)
        }
        Command::PeriodicOrbits(args) => {
            let map = map_of(&cfg)?;
            let orbits = periodic_orbits(&map, args.max_period, &Rect::R_HAT)?;
            let mut t = Table::new(&["period", "itinerary", "index", "x", "y", "lambda_u", "lambda_s"]);
            for o in &orbits {
                for (i, z) in o.points.iter().enumerate() {
                    t.push(vec![
                        o.period.into(),
                        o.itinerary.clone().into(),
                        i.into(),
                        z.x.into(),
                        z.y.into(),
                        o.lyapunov.lambda_u.into(),
                        o.lyapunov.lambda_s.into(),
                    ]);
                }
            }
            out.csv("orbits", &t.to_csv())?;
            let bound = lambda(k.lambda_hat);
            let passed = orbits.iter().all(|o| o.lyapunov.lambda_u >= bound);
            out.report(args, passed, orbits)
        }
        Command::Splitting(args) => {
            let map = map_of(&cfg)?;
            let d = DRegion::build(&map, &k.tolerances.refinement)?;
            let omega = omega_approximation(&map, &d, &OmegaPlan::default())?;
            let s = splitting_diagnostics(&map, &omega, args.k_split)?;
            let mut t = Table::new(&["x", "y", "eu_x", "eu_y", "es_x", "es_y", "angle"]);
            for i in 0..s.points.len() {
                t.push(vec![
                    s.points[i].x.into(),
                    s.points[i].y.into(),
                    s.e_u[i].x.into(),
                    s.e_u[i].y.into(),
                    s.e_s[i].x.into(),
                    s.e_s[i].y.into(),
                    s.angles[i].into(),
                ]);
            }
            out.csv("field", &t.to_csv())?;
            let passed = s.min_angle >= args.min_angle && s.invariance_defect <= args.max_defect;
            let summary = SplittingSummary {
                source: omega.source,
                points: s.points.len(),
                k_split: s.k_split,
                min_angle: s.min_angle,
                mean_angle: s.mean_angle,
                modulus: s.modulus,
                invariance_defect: s.invariance_defect,
                matched_pairs: s.matched_pairs,
            };
            out.report(args, passed, summary)
        }
        Command::Scan(args) => {
            let observables: Vec<Observable> =
                args.observables.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
            if args.steps < 2 {
                return Err(Error::Precondition("scan needs at least two steps".into()));
            }
            let a: Vec<f64> = (0..args.steps)
                .map(|i| args.a_min + (args.a_max - args.a_min) * i as f64 / (args.steps - 1) as f64)
                .collect();
            let gc = GammaConfig { refinement: k.tolerances.refinement, ..GammaConfig::default() };
            let rows = scan(&cfg.family, &gc, &a, &observables);
            out.csv("rows", &scan_csv(&rows))?;
            out.report(args, true, rows)
        }
        Command::Onedim(args) => run_onedim(&cfg, &out, args),
    }
}

fn run_onedim(cfg: &RunConfig, out: &Output, args: &OnedimArgs) -> Result<bool> {
    let s = if cfg.family.perturbation == "zero" {
        0.0
    } else {
        cfg.family.perturbation_params.get("s").copied().unwrap_or(1e-3)
    };
    let g = OneDMap {
        a: cfg.family.a,
        perturbation: if s == 0.0 { OneDPerturbation::Zero } else { OneDPerturbation::Bump { s } },
    };
    match &args.command {
        OnedimCommand::FixedPoints => {
            let (p, q) = od_fixed_points(g.a)?;
            let mut t = Table::new(&["label", "x", "multiplier"]);
            t.push(vec!["p".into(), p.into(), g.derivative(p).into()]);
            t.push(vec!["q".into(), q.into(), g.derivative(q).into()]);
            out.csv("fixed_points", &t.to_csv())?;
            out.report(&args.command, true, (p, q))
        }
        OnedimCommand::PeriodicOrbits { max_period } => {
            let orbits = od_periodic_orbits(&g, *max_period)?;
            let mut t = Table::new(&["period", "index", "x", "multiplier"]);
            for o in &orbits {
                for (i, x) in o.points.iter().enumerate() {
                    t.push(vec![o.period.into(), i.into(), (*x).into(), o.multiplier.into()]);
                }
            }
            out.csv("orbits", &t.to_csv())?;
            let bound = lambda(cfg.constants.lambda_hat);
            let passed = orbits.iter().all(|o| o.exponent() >= bound);
            out.report(&args.command, passed, orbits)
        }
        OnedimCommand::Astar { bracket, tol } => {
            let a = od_a_star(&g, (bracket[0], bracket[1]), *tol)?;
            let mut t = Table::new(&["a_star"]);
            t.push(vec![Cell::Num(a)]);
            out.csv("a_star", &t.to_csv())?;
            out.report(&args.command, true, a)
        }
        OnedimCommand::Expansion { samples, max_len } => {
            let r = od_expansion_outside(&g, cfg.constants.epsilon, cfg.constants.lambda_hat, *samples, *max_len);
            let mut t = Table::new(&["epsilon", "lambda_hat", "measured_c_eps", "returns", "return_failures"]);
            t.push(vec![r.epsilon.into(), r.lambda_hat.into(), r.measured_c_eps.into(), r.returns.into(), r.return_failures.into()]);
            out.csv("expansion", &t.to_csv())?;
            out.report(&args.command, r.return_failures == 0, r)
        }
    }
}
