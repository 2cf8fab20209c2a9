//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use hypbound::bifurcation::{find_a_star, gamma_pieces, gap, gap_sample, GammaConfig};
use hypbound::curve::{PolyCurve, Refinement};
use hypbound::curves_critical::{
    critical_gaps, find_critical_point, hyperbolic_time_curvature_check, image_curve, lambda, unstable_component_in_strip,
    AdmissibleCurve, CriticalPoint, ALPHA, LAMBDA_HAT,
};
use hypbound::fixed_points::{find_fixed_points, one_d_fixed_points, ManifoldKind};
use hypbound::geometry::{Point2, Rect, Vec2};
use hypbound::hypcoord::frame;
use hypbound::hyperbolicity::{
    certify_outside, lyapunov_cycle, lyapunov_orbit, omega_approximation, periodic_orbits, splitting_along_curve,
    splitting_diagnostics, ConePlan, LyapunovReport, OmegaPlan,
};
use hypbound::manifolds::{map_arcs, primary_arc};
use hypbound::map_core::{Direction, HenonLikeMap, MapParams};
use hypbound::onedim::{od_a_star, od_periodic_orbits, OneDMap};
use hypbound::regions::{verify_escape, DRegion, Region, RegionContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// a*(0.05), shared by the criteria evaluated past and at the tangency.
fn a_star_005() -> f64 {
    static A: OnceLock<f64> = OnceLock::new();
    *A.get_or_init(|| {
        find_a_star(&MapParams::henon(2.0, 0.05), &GammaConfig::default(), (1.7, 2.3), 1e-8)
            .expect("a*(0.05)")
            .a_star
    })
}

fn fixed_point_closed_forms() -> Outcome {
    let (a, b) = (2.0, 0.3);
    let (p, q) = find_fixed_points(&HenonLikeMap::henon(a, b)).map_err(|e| e.to_string())?;
    // a x² + (1 − b) x − 1 = 0, y = b x.
    let disc = ((1.0 - b) * (1.0 - b) + 4.0 * a).sqrt();
    let (xp, xq) = ((-(1.0 - b) + disc) / (2.0 * a), (-(1.0 - b) - disc) / (2.0 * a));
    let err = (p.location.x - xp)
        .abs()
        .max((p.location.y - b * xp).abs())
        .max((q.location.x - xq).abs())
        .max((q.location.y - b * xq).abs());
    let one_d = one_d_fixed_points(2.0).map_err(|e| e.to_string())?;
    check(err <= 1e-12 && one_d == (0.5, -1.0), format!("max error {err:.2e}, one-d {one_d:?}"))
}

fn parabola_recovery() -> Outcome {
    let f = HenonLikeMap::henon(2.0, 1e-3);
    let (_, q) = find_fixed_points(&f).map_err(|e| e.to_string())?;
    let tol = Refinement::default();
    let arc = primary_arc(&f, &q, ManifoldKind::Stable, &Rect::R_HAT, &tol).map_err(|e| e.to_string())?;
    let g1 = map_arcs(&f, &[arc], Direction::Backward, &Rect::R_HAT, &tol).map_err(|e| e.to_string())?;
    let g2 = map_arcs(&f, &g1, Direction::Backward, &Rect::R_HAT, &tol).map_err(|e| e.to_string())?;
    let d: Vec<f64> = [-2.0, 0.0].iter().map(|c| common::parabola_hausdorff(&g2, *c, 0.1)).collect();
    check(d.iter().all(|v| *v < 1e-2), format!("Hausdorff distances {:.2e} (c=-2), {:.2e} (c=0)", d[0], d[1]))
}

/// Unit vector of maximal stretch under Df^k, by a two-level θ grid and a
/// parabolic fit through the best three values.
fn grid_argmax(f: &HenonLikeMap, z: Point2, k: usize) -> Vec2 {
    let (a, b) = (f.a, f.b);
    let gain = |t: f64| {
        let (mut u, mut w) = (z, Vec2::new(t.cos(), t.sin()));
        for _ in 0..k {
            w = Vec2::new(-2.0 * a * u.x * w.x + w.y, b * w.x);
            u = Point2::new(1.0 - a * u.x * u.x + u.y, b * u.x);
        }
        w.norm()
    };
    let n = 20_000;
    let best = |lo: f64, h: f64| {
        (0..=n).map(|i| lo + h * i as f64).map(|t| (t, gain(t))).fold((lo, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc })
    };
    let h0 = std::f64::consts::PI / n as f64;
    let (t0, _) = best(0.0, h0);
    let h1 = 4.0 * h0 / n as f64;
    let (t1, g1) = best(t0 - 2.0 * h0, h1);
    let (g0, g2) = (gain(t1 - h1), gain(t1 + h1));
    let theta = t1 + 0.5 * h1 * (g0 - g2) / (g0 - 2.0 * g1 + g2);
    Vec2::new(theta.cos(), theta.sin())
}

fn frame_oracle() -> Outcome {
    let f = HenonLikeMap::henon(2.0, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut n, mut worst, mut max_log_h) = (0, 0.0f64, f64::NEG_INFINITY);
    while n < 100 {
        let z = Point2::new(rng.gen_range(-1.2..1.2), rng.gen_range(-0.4..0.4));
        let k = rng.gen_range(1..=5);
        let Ok(fr) = frame(&f, z, k) else { continue };
        let v = grid_argmax(&f, z, k);
        worst = worst.max(v.line_angle(fr.f_k)).max(v.perp().line_angle(fr.e_k));
        max_log_h = max_log_h.max(fr.log_h);
        n += 1;
    }
    check(worst <= 1e-6 && max_log_h <= 0.0, format!("{n} samples, max angle {worst:.2e}, max log H {max_log_h:.3}"))
}

fn contraction_expansion_bounds() -> Outcome {
    let b = 0.05;
    let f = HenonLikeMap::henon(2.0, b);
    let ctx = RegionContext::new(&f).map_err(|e| e.to_string())?;
    let n = ctx.leaf.len();
    let (mut samples, mut bad) = (0, Vec::new());
    for k in 1..=10 {
        let pts: Vec<Point2> = (n / 5..4 * n / 5)
            .step_by((n / 100).max(1))
            .flat_map(|i| [0.0, 2e-6, -2e-6, 2e-5, -2e-5].map(|dx| ctx.leaf.vertices[i] + Vec2::new(dx, 0.0)))
            .filter(|z| ctx.v_order(*z, k).order().is_some_and(|o| o >= k))
            .collect();
        for z in pts.iter().step_by((pts.len() / 10).max(1)).take(10) {
            let fr = frame(&f, *z, k).map_err(|e| e.to_string())?;
            samples += 1;
            let e_ok = fr.log_e <= k as f64 * b.ln() + 2f64.ln();
            let f_ok = fr.log_f >= k as f64 * 3f64.ln() - 2f64.ln();
            if !(e_ok && f_ok) {
                bad.push((k, fr.log_e, fr.log_f));
            }
        }
    }
    check(samples >= 100 && bad.is_empty(), format!("{samples} samples in V_k (k<=10), {} violations {:?}", bad.len(), bad.first()))
}

fn critical_cauchy_rate() -> Outcome {
    let (a, b) = (2.05, 0.1);
    let f = HenonLikeMap::henon(a, b);
    let c = unstable_component_in_strip(&f, 0.15).map_err(|e| e.to_string())?;
    let pts: Vec<CriticalPoint> = (2..=8).map_while(|k| find_critical_point(&f, &c, k).ok()).collect();
    let gaps: Vec<f64> = critical_gaps(&pts).into_iter().filter(|g| *g > 0.0).collect();
    if gaps.len() < 2 {
        return Err(format!("only {} positive gaps for k=2..8", gaps.len()));
    }
    // Least-squares slope of ln gap against k.
    let m = gaps.len() as f64;
    let xs: Vec<f64> = (0..gaps.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (xm, ym) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>() / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    let ratio = slope.exp();
    check(
        (b / 2.0..=2.0 * b).contains(&ratio),
        format!("critical points found for k=2..{}, gaps {}, fitted ratio {ratio:.2e}, window [{}, {}]", pts.len() + 1, gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>().join(" "), b / 2.0, 2.0 * b),
    )
}

/// Last sign change of the gap on a 1e-2 grid over [1.7, 2.3], refined on a 1e-4 grid.
fn dense_scan_a_star(params: &MapParams, cfg: &GammaConfig) -> Result<(f64, usize), String> {
    let g = |a: f64| gap(params, cfg, a).map_err(|e| e.to_string());
    let coarse: Vec<f64> = (0..=60).map(|i| 1.7 + 0.01 * i as f64).collect();
    let vals = coarse.iter().map(|a| g(*a)).collect::<Result<Vec<_>, _>>()?;
    let changes: Vec<usize> = (0..60).filter(|&i| (vals[i] > 0.0) != (vals[i + 1] > 0.0)).collect();
    let &i = changes.last().ok_or("no sign change on the coarse grid")?;
    let mut last_positive = coarse[i];
    for j in 1..=100 {
        let a = coarse[i] + 1e-4 * j as f64;
        if g(a)? > 0.0 {
            last_positive = a;
        }
    }
    Ok((last_positive + 0.5e-4, changes.len()))
}

fn tangency_parameter() -> Outcome {
    let start = Instant::now();
    let cfg = GammaConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut found = Vec::new();
    for b in [0.01, 0.001, -0.01, -0.001] {
        let params = MapParams::henon(2.0, b);
        let a = find_a_star(&params, &cfg, (1.7, 2.3), 1e-6).map_err(|e| format!("b={b}: {e}"))?.a_star;
        let (oracle, changes) = dense_scan_a_star(&params, &cfg)?;
        let agree = (a - oracle).abs() <= 1e-4;
        ok &= (1.7..=2.3).contains(&a) && agree;
        lines.push(format!("b={b}: a*={a:.7} scan={oracle:.5} ({changes} coarse changes)"));
        found.push(a);
    }
    let closer = (found[1] - 2.0).abs() < (found[0] - 2.0).abs();
    let secs = start.elapsed().as_secs_f64();
    check(ok && closer && secs <= 300.0, format!("{}; |a*(0.001)-2| < |a*(0.01)-2|: {closer}; {secs:.0}s", lines.join("; ")))
}

fn escape_regions() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for b in [0.05, -0.05] {
        let (a, f) = (2.0, HenonLikeMap::henon(2.0, b));
        for (region, forward) in Region::ESCAPE {
            let r = verify_escape(&f, region, 100).map_err(|e| e.to_string())?;
            // Independent iteration with the closed-form map and inverse.
            let step = |z: Point2| {
                if forward {
                    Point2::new(1.0 - a * z.x * z.x + z.y, b * z.x)
                } else {
                    let x = z.y / b;
                    Point2::new(x, z.x - 1.0 + a * x * x)
                }
            };
            let bx = region.escape_box(b);
            let mut oracle_failures = 0;
            for i in 0..100 {
                for j in 0..100 {
                    let z = Point2::new(bx.x_min + bx.width() * i as f64 / 99.0, bx.y_min + bx.height() * j as f64 / 99.0);
                    if region.contains_static(z, b) != Some(true) {
                        continue;
                    }
                    let mut cur = z;
                    let mut escaped = false;
                    for _ in 0..40 {
                        let next = step(cur);
                        if region == Region::V1 && region.contains_static(cur, b) == Some(true) && next.x.abs() < 2.0 * cur.x.abs() {
                            break;
                        }
                        if !(next.x.abs() <= 10.0 && next.y.abs() <= 10.0) {
                            escaped = true;
                            break;
                        }
                        cur = next;
                    }
                    oracle_failures += usize::from(!escaped);
                }
            }
            ok &= r.passed() && r.max_steps <= 40 && oracle_failures == 0;
            if !(r.passed() && oracle_failures == 0) {
                lines.push(format!("{region:?} b={b}: {} failures, oracle {oracle_failures}", r.failures.len()));
            }
        }
    }
    check(ok, if lines.is_empty() { "V1..V6 at b=±0.05 escape within 40 steps; doubling holds in V1".into() } else { lines.join("; ") })
}

fn lyapunov_consistency() -> Outcome {
    let sum_err = |r: &LyapunovReport, b: f64| (r.lambda_u + r.lambda_s - b.abs().ln()).abs();
    let (mut eig_err, mut rule_err, mut reports) = (0.0f64, 0.0f64, 0);
    for (a, b) in [(2.0, 0.05), (2.0, 0.3), (1.9, -0.05), (2.2, 0.01)] {
        let f = HenonLikeMap::henon(a, b);
        let (p, q) = find_fixed_points(&f).map_err(|e| e.to_string())?;
        for fp in [p, q] {
            let t = -2.0 * a * fp.location.x;
            let disc = (t * t + 4.0 * b).sqrt();
            let (mu1, mu2) = ((t + disc) / 2.0, (t - disc) / 2.0);
            let (lu, ls) = if mu1.abs() > mu2.abs() { (mu1, mu2) } else { (mu2, mu1) };
            let r = lyapunov_cycle(&f, &[fp.location], "fp").map_err(|e| e.to_string())?;
            eig_err = eig_err.max((r.lambda_u - lu.abs().ln()).abs()).max((r.lambda_s - ls.abs().ln()).abs());
            rule_err = rule_err.max(sum_err(&r, b));
            let o = lyapunov_orbit(&f, fp.location + Vec2::new(1e-3, 0.0), 200).map_err(|e| e.to_string())?;
            rule_err = rule_err.max(sum_err(&o, b));
            reports += 2;
        }
    }
    let b = 0.05;
    let a = a_star_005() + 0.05;
    let f = HenonLikeMap::henon(a, b);
    let orbits = periodic_orbits(&f, 10, &Rect::R_HAT).map_err(|e| e.to_string())?;
    let min_lu = orbits.iter().map(|o| o.lyapunov.lambda_u).fold(f64::INFINITY, f64::min);
    for o in &orbits {
        rule_err = rule_err.max(sum_err(&o.lyapunov, b));
    }
    reports += orbits.len();
    check(
        eig_err <= 1e-9 && rule_err <= 1e-9 && min_lu >= 0.14 && !orbits.is_empty(),
        format!("eigenvalue error {eig_err:.1e}, sum-rule error {rule_err:.1e} over {reports} reports, {} periodic orbits at a={a:.6} with min lambda_u {min_lu:.4}", orbits.len()),
    )
}

fn random_admissible_arcs(f: &HenonLikeMap, eps: f64, count: usize, seed: u64) -> Result<Vec<PolyCurve>, String> {
    let d = DRegion::build(f, &Refinement::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let z = d.sample(1, &mut rng)[0];
        let c = common::arc(z, rng.gen_range(-ALPHA..ALPHA), rng.gen_range(-ALPHA..ALPHA), 0.02, 40);
        if c.vertices.iter().all(|p| p.x.abs() >= eps && d.contains(*p)) && AdmissibleCurve::certify(c.clone(), eps).is_admissible() {
            out.push(c);
        }
    }
    Ok(out)
}

fn curvature_suite() -> Outcome {
    // Horizontal segment through the origin.
    let (a, b) = (2.0, 0.3);
    let seg = PolyCurve::segment(Point2::new(-0.1, 0.0), Point2::new(0.1, 0.0), 40, "h");
    let k = image_curve(&HenonLikeMap::henon(a, b), &seg).curvatures[20].abs();
    let push_ok = (k - 2.0 * a / (b * b)).abs() <= 1e-6 * k;
    // Curvature of the image at every computed critical point.
    let mut crit = 0;
    let mut min_excess = f64::INFINITY;
    for (a, b) in [(2.05, 0.1), (a_star_005() + 0.05, 0.05), (2.0, 0.01)] {
        let f = HenonLikeMap::henon(a, b);
        let c = unstable_component_in_strip(&f, 0.15).map_err(|e| e.to_string())?;
        for cp in (1..=12).filter_map(|k| find_critical_point(&f, &c, k).ok()) {
            crit += 1;
            min_excess = min_excess.min(cp.image_curvature / (a / b));
        }
    }
    let poscurv_ok = crit > 0 && min_excess > 1.0;
    // Decrease of curvature at hyperbolic times along sampled admissible arcs.
    let f = HenonLikeMap::henon(a_star_005() + 0.05, 0.05);
    let arcs = random_admissible_arcs(&f, 0.15, 100, 9)?;
    let lam = lambda(LAMBDA_HAT);
    let (mut times, mut failing_arcs, mut largest_failing_k0, mut largest_violating_kn) = (0, 0, 0.0f64, 0.0f64);
    for c in &arcs {
        let mut bad = false;
        for n in 1..=10 {
            let Ok(r) = hyperbolic_time_curvature_check(&f, c, n, lam) else { continue };
            times += r.hyperbolic_count;
            for s in r.samples.iter().filter(|s| s.hyperbolic && !(s.kappa_n < s.kappa0)) {
                bad = true;
                largest_violating_kn = largest_violating_kn.max(s.kappa_n);
            }
        }
        if bad {
            failing_arcs += 1;
            largest_failing_k0 = largest_failing_k0.max(c.max_abs_curvature());
        }
    }
    let decrease_ok = times > 0 && failing_arcs == 0;
    check(
        push_ok && poscurv_ok && decrease_ok,
        format!(
            "pushforward {k:.10} (2a/b^2 = {:.10}); {crit} critical points, min kappa/(a/b) = {min_excess:.1}; {} arcs, {times} hyperbolic times, {failing_arcs} arcs with kappa_n >= kappa_0 (|kappa_0| <= {largest_failing_k0:.3}, kappa_n <= {largest_violating_kn:.3} at violations)",
            2.0 * a / (b * b),
            arcs.len()
        ),
    )
}

fn cone_certificate() -> Outcome {
    let a = a_star_005() + 0.05;
    let f = HenonLikeMap::henon(a, 0.05);
    let d = DRegion::build(&f, &Refinement::default()).map_err(|e| e.to_string())?;
    let plan = ConePlan { samples: 10_000, ..ConePlan::default() };
    let c = certify_outside(&f, &d, 0.15, 0.5, 0.3, &plan).map_err(|e| e.to_string())?;
    check(
        c.samples == 10_000 && c.slope_violations.is_empty() && c.ue2_segments > 0 && c.ue2_failures == 0,
        format!(
            "a={a:.6}: {} samples, {} slope violations, {} returning excursions, {} UE2 failures, measured C_eps {:.4}",
            c.samples,
            c.slope_violations.len(),
            c.ue2_segments,
            c.ue2_failures,
            c.measured_c_eps
        ),
    )
}

fn one_dimensional_suite() -> Outcome {
    let a = od_a_star(&OneDMap::quadratic(2.0), (1.5, 2.5), 1e-12).map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for a in [2.2, 2.0] {
        for o in od_periodic_orbits(&OneDMap::quadratic(a), 10).map_err(|e| e.to_string())? {
            worst = worst.min(o.multiplier.abs().ln() / o.period as f64);
            count += 1;
        }
    }
    check(
        (a - 2.0).abs() <= 1e-10 && worst >= 0.14 && count > 0,
        format!("od a* = {a:.13}, {count} orbits, min ln|multiplier|/p = {worst:.4}"),
    )
}

fn splitting() -> Outcome {
    let a_star = a_star_005();
    let f = HenonLikeMap::henon(a_star + 0.05, 0.05);
    let d = DRegion::build(&f, &Refinement::default()).map_err(|e| e.to_string())?;
    let omega = omega_approximation(&f, &d, &OmegaPlan::default()).map_err(|e| e.to_string())?;
    let s = splitting_diagnostics(&f, &omega, 10).map_err(|e| e.to_string())?;
    let cfg = GammaConfig::default();
    let (wu, _) = gap_sample(&MapParams::henon(a_star, 0.05), &cfg, a_star)
        .map_err(|e| e.to_string())?
        .witness
        .ok_or("no tangency witness")?;
    let g = HenonLikeMap::henon(a_star, 0.05);
    let pieces = gamma_pieces(&g, &cfg).map_err(|e| e.to_string())?;
    let (collapse, used) = pieces
        .unstable
        .iter()
        .map(|c| splitting_along_curve(&g, c, wu, 0.05, 10))
        .fold((f64::INFINITY, 0), |(m, n), (a, k)| (m.min(a), n + k));
    check(
        s.min_angle >= 0.05 && s.invariance_defect <= 1e-4 && used > 0 && collapse < 0.01,
        format!(
            "past tangency: {} points, min angle {:.3}, defect {:.1e}; at a*: min angle {collapse:.2e} over {used} points near the witness",
            s.points.len(),
            s.min_angle,
            s.invariance_defect
        ),
    )
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: [Criterion; 12] = [
        ("closed-form fixed points", fixed_point_closed_forms),
        ("parabola recovery", parabola_recovery),
        ("frame oracle", frame_oracle),
        ("contraction/expansion bounds", contraction_expansion_bounds),
        ("critical-point Cauchy rate", critical_cauchy_rate),
        ("tangency parameter", tangency_parameter),
        ("escape regions", escape_regions),
        ("Lyapunov consistency", lyapunov_consistency),
        ("curvature suite", curvature_suite),
        ("cone certificate", cone_certificate),
        ("one-dimensional suite", one_dimensional_suite),
        ("splitting diagnostics", splitting),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
