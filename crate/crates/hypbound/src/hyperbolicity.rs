//! Cone certification outside the critical strip, recovery times and N_a,
//! the constant C_a, splitting diagnostics, Lyapunov exponents and periodic orbits.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::PolyCurve;
use crate::curves_critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::fixed_points::find_fixed_points;
use crate::geometry::{Jacobian2, Point2, Rect, Vec2};
use crate::hypcoord::{frame, scaled_product};
use crate::map_core::{HenonLikeMap, MapParams, PlanarMap};
use crate::regions::{DRegion, Region, RegionContext};

// ---------------------------------------------------------------------------
// Lyapunov exponents
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub label: String,
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub n: usize,
    /// |λ_u + λ_s − mean ln|det Df||.
    pub residual: f64,
    pub mean_log_det: f64,
    /// The orbit left the blow-up box before n steps.
    pub truncated: bool,
}

/// Exponents along the forward orbit of z by Gram–Schmidt on two vectors.
pub fn lyapunov_orbit(map: &HenonLikeMap, z: Point2, n: usize) -> Result<LyapunovReport> {
    if n == 0 {
        return Err(Error::Precondition("Lyapunov exponents need n >= 1".into()));
    }
    let (mut q1, mut q2) = (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
    let (mut s1, mut s2, mut sd) = (0.0, 0.0, 0.0);
    let mut u = z;
    let mut steps = 0;
    for _ in 0..n {
        if !(u.is_finite() && u.x.abs() <= map.blow_up && u.y.abs() <= map.blow_up) {
            break;
        }
        let j = map.jacobian(u);
        let (a1, a2) = (j.apply(q1), j.apply(q2));
        let r11 = a1.norm();
        q1 = a1 * (1.0 / r11);
        let w = a2 - q1 * q1.dot(a2);
        let r22 = w.norm();
        q2 = w * (1.0 / r22);
        s1 += r11.ln();
        s2 += r22.ln();
        sd += j.det().abs().ln();
        u = map.apply(u);
        steps += 1;
    }
    if steps == 0 {
        return Err(Error::OrbitEscaped(0));
    }
    let k = steps as f64;
    let (lu, ls, md) = (s1 / k, s2 / k, sd / k);
    Ok(LyapunovReport {
        label: format!("orbit({}, {})", z.x, z.y),
        lambda_u: lu,
        lambda_s: ls,
        n: steps,
        residual: (lu + ls - md).abs(),
        mean_log_det: md,
        truncated: steps < n,
    })
}

/// Product of Df around a stored cycle, starting at `start`, log-scaled.
fn cycle_product<M: PlanarMap + ?Sized>(map: &M, points: &[Point2], start: usize) -> (Jacobian2, f64, f64) {
    let p = points.len();
    let mut m = Jacobian2::IDENTITY;
    let (mut log_scale, mut log_det) = (0.0, 0.0);
    for i in 0..p {
        let j = map.jacobian(points[(start + i) % p]);
        log_det += j.det().abs().ln();
        m = j.mul(&m);
        let s = m.max_abs();
        m = m.scale(1.0 / s);
        log_scale += s.ln();
    }
    (m, log_scale, log_det)
}

/// Exponents of a periodic orbit from the eigenvalues of its cycle product.
pub fn lyapunov_cycle<M: PlanarMap + ?Sized>(map: &M, points: &[Point2], label: impl Into<String>) -> Result<LyapunovReport> {
    if points.is_empty() {
        return Err(Error::Precondition("empty cycle".into()));
    }
    let p = points.len() as f64;
    let (m, log_scale, log_det) = cycle_product(map, points, 0);
    let (mu, _) = m.real_eigenvalues().ok_or(Error::NotSaddle(f64::NAN, f64::NAN))?;
    let lu = (mu.abs().ln() + log_scale) / p;
    let ls = log_det / p - lu;
    let md = (0..points.len()).map(|i| map.jacobian(points[i]).det().abs().ln()).sum::<f64>() / p;
    Ok(LyapunovReport {
        label: label.into(),
        lambda_u: lu,
        lambda_s: ls,
        n: points.len(),
        residual: (lu + ls - md).abs(),
        mean_log_det: md,
        truncated: false,
    })
}

// ---------------------------------------------------------------------------
// Periodic orbits
// ---------------------------------------------------------------------------

pub const MAX_PERIOD: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub period: usize,
    /// Sign of x along the orbit, 'R' for x ≥ 0.
    pub itinerary: String,
    pub points: Vec<Point2>,
    pub lyapunov: LyapunovReport,
}

/// Least rotation of a cyclic word; None when the word is a proper power.
fn canonical_primitive(word: u32, p: usize) -> Option<u32> {
    let mask = if p == 32 { u32::MAX } else { (1u32 << p) - 1 };
    let rot = |w: u32, r: usize| ((w << r) | (w >> (p - r))) & mask;
    let mut best = word;
    for r in 1..p {
        let w = rot(word, r);
        if w == word {
            return None;
        }
        best = best.min(w);
    }
    (best == word).then_some(word)
}

/// Relax x_i = s_i √((1 − x_{i+1} + b x_{i−1})/a) around the cycle.
fn itinerary_seed(a: f64, b: f64, signs: &[f64]) -> Vec<Point2> {
    let p = signs.len();
    let mut x: Vec<f64> = signs.iter().map(|s| 0.5 * s).collect();
    for _ in 0..200 {
        for i in 0..p {
            let r = (1.0 - x[(i + 1) % p] + b * x[(i + p - 1) % p]) / a;
            x[i] = signs[i] * r.max(0.0).sqrt();
        }
    }
    (0..p).map(|i| Point2::new(x[i], b * x[(i + p - 1) % p])).collect()
}

/// Multiple-shooting Newton for f(z_i) = z_{i+1} around the cycle.
fn shoot<M: PlanarMap + ?Sized>(map: &M, seed: &[Point2]) -> Option<Vec<Point2>> {
    let p = seed.len();
    let mut z = seed.to_vec();
    for _ in 0..40 {
        let mut g = DVector::<f64>::zeros(2 * p);
        let mut jac = DMatrix::<f64>::zeros(2 * p, 2 * p);
        for i in 0..p {
            let next = (i + 1) % p;
            let r = map.apply(z[i]) - z[next];
            g[2 * i] = r.x;
            g[2 * i + 1] = r.y;
            let j = map.jacobian(z[i]);
            for (r_, row) in j.0.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    jac[(2 * i + r_, 2 * i + c)] += v;
                }
                jac[(2 * i + r_, 2 * next + r_)] -= 1.0;
            }
        }
        let res = g.amax();
        if !res.is_finite() {
            return None;
        }
        if res < 1e-14 {
            return Some(z);
        }
        let step = jac.lu().solve(&g)?;
        for i in 0..p {
            z[i] = Point2::new(z[i].x - step[2 * i], z[i].y - step[2 * i + 1]);
        }
    }
    let res = (0..p).map(|i| map.apply(z[i]).dist(z[(i + 1) % p])).fold(0.0, f64::max);
    (res < 1e-11).then_some(z)
}

/// Periodic orbits up to `max_period` inside `window`, seeded from every
/// primitive two-symbol itinerary.
pub fn periodic_orbits(map: &HenonLikeMap, max_period: usize, window: &Rect) -> Result<Vec<PeriodicOrbit>> {
    if max_period > MAX_PERIOD {
        return Err(Error::Precondition(format!("max period {max_period} exceeds {MAX_PERIOD}")));
    }
    let mut found: Vec<PeriodicOrbit> = Vec::new();
    for p in 1..=max_period {
        let words: Vec<u32> = (0..(1u32 << p)).filter_map(|w| canonical_primitive(w, p)).collect();
        let candidates: Vec<(u32, Vec<Point2>)> = words
            .par_iter()
            .filter_map(|&w| {
                let signs: Vec<f64> = (0..p).map(|i| if w >> (p - 1 - i) & 1 == 1 { 1.0 } else { -1.0 }).collect();
                let z = shoot(map, &itinerary_seed(map.a, map.b, &signs))?;
                z.iter().all(|v| window.contains(*v)).then_some((w, z))
            })
            .collect();
        for (_, z) in candidates {
            // Minimal period.
            if (1..p).any(|d| p % d == 0 && z[d].dist(z[0]) < 1e-6) {
                continue;
            }
            let dup = found.iter().any(|o| o.period == p && o.points.iter().any(|v| v.dist(z[0]) < 1e-6));
            if dup {
                continue;
            }
            let itinerary: String = z.iter().map(|v| if v.x >= 0.0 { 'R' } else { 'L' }).collect();
            let lyapunov = lyapunov_cycle(map, &z, format!("period {p} {itinerary}"))?;
            found.push(PeriodicOrbit { period: p, itinerary, points: z, lyapunov });
        }
    }
    Ok(found)
}

/// Smallest unstable exponent over periodic orbits of period ≤ max_period.
pub fn min_unstable_exponent(params: &MapParams, a: f64, max_period: usize) -> Result<f64> {
    let map = HenonLikeMap::from_params(params)?.with_a(a);
    let orbits = periodic_orbits(&map, max_period, &Rect::R_HAT)?;
    orbits
        .iter()
        .map(|o| o.lyapunov.lambda_u)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Construction("no periodic orbits found".into()))
}

// ---------------------------------------------------------------------------
// The Ω-approximation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaSource {
    LongOrbit,
    PeriodicOrbits,
}

/// Points approximating the nonwandering set, with unstable tangents and
/// the index of each point's image when it is also in the sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaSample {
    pub source: OmegaSource,
    pub points: Vec<Point2>,
    pub tangents: Vec<Vec2>,
    pub next: Vec<Option<usize>>,
}

impl OmegaSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Tangent image Df^n(v) at sample i following stored successors; None
    /// when the chain leaves the sample.
    pub fn push_tangent<M: PlanarMap + ?Sized>(&self, map: &M, i: usize, n: usize) -> Option<Vec2> {
        let (mut idx, mut v) = (i, self.tangents[i]);
        for _ in 0..n {
            v = map.jacobian(self.points[idx]).apply(v);
            idx = self.next[idx]?;
        }
        Some(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OmegaPlan {
    pub orbit_steps: usize,
    pub keep_fraction: f64,
    pub stay_steps: usize,
    pub max_period: usize,
    pub max_points: usize,
}

impl Default for OmegaPlan {
    fn default() -> Self {
        Self { orbit_steps: 100_000, keep_fraction: 0.8, stay_steps: 100, max_period: 12, max_points: 4000 }
    }
}

/// The tail of a long orbit started on W^u_loc(p) when it survives;
/// otherwise (the orbit escapes, as for every a above the tangency) the
/// periodic orbits up to `max_period`, which stay in D forever.
pub fn omega_approximation(map: &HenonLikeMap, d: &DRegion, plan: &OmegaPlan) -> Result<OmegaSample> {
    let (p, _) = find_fixed_points(map)?;
    let mut z = p.location + p.e_exp * 1e-4;
    let mut v = p.e_exp;
    let mut pts = Vec::with_capacity(plan.orbit_steps);
    let mut tans = Vec::with_capacity(plan.orbit_steps);
    let mut survived = true;
    for _ in 0..plan.orbit_steps {
        if !Rect::R_HAT.contains(z) {
            survived = false;
            break;
        }
        pts.push(z);
        tans.push(v);
        v = map.jacobian(z).apply(v).normalized();
        z = map.apply(z);
    }
    if survived {
        let n = pts.len();
        let first = ((1.0 - plan.keep_fraction) * n as f64) as usize;
        let inside: Vec<bool> = pts.iter().map(|z| d.contains(*z)).collect();
        // Forward orbit stays in D for stay_steps, counted within the stored orbit.
        let mut run = vec![0usize; n + 1];
        for i in (0..n).rev() {
            run[i] = if inside[i] { run[i + 1] + 1 } else { 0 };
        }
        let keep: Vec<usize> = (first..n).filter(|&i| run[i] > plan.stay_steps).collect();
        let stride = (keep.len() / plan.max_points.max(1)).max(1);
        // Keep consecutive pairs so successor links exist.
        let chosen: Vec<usize> =
            keep.iter().step_by(stride).flat_map(|&i| [i, i + 1]).filter(|&i| i < n).collect();
        let mut chosen = chosen;
        chosen.dedup();
        if !chosen.is_empty() {
            let index: std::collections::HashMap<usize, usize> =
                chosen.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            return Ok(OmegaSample {
                source: OmegaSource::LongOrbit,
                points: chosen.iter().map(|&i| pts[i]).collect(),
                tangents: chosen.iter().map(|&i| tans[i]).collect(),
                next: chosen.iter().map(|&i| index.get(&(i + 1)).copied()).collect(),
            });
        }
    }
    let orbits = periodic_orbits(map, plan.max_period, &Rect::R_HAT)?;
    let mut sample = OmegaSample { source: OmegaSource::PeriodicOrbits, points: vec![], tangents: vec![], next: vec![] };
    for o in orbits.iter().filter(|o| o.points.iter().all(|z| d.contains(*z))) {
        if sample.len() + o.period > plan.max_points {
            break;
        }
        let (m, _, _) = cycle_product(map, &o.points, 0);
        let Some((mu, _)) = m.real_eigenvalues() else { continue };
        let mut v = m.eigenvector(mu);
        let base = sample.len();
        for (i, z) in o.points.iter().enumerate() {
            sample.points.push(*z);
            sample.tangents.push(v);
            sample.next.push(Some(base + (i + 1) % o.period));
            v = map.jacobian(*z).apply(v).normalized();
        }
    }
    if sample.is_empty() {
        return Err(Error::Construction("no orbit stays in D".into()));
    }
    Ok(sample)
}

// ---------------------------------------------------------------------------
// Cone certificate
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeViolation {
    pub x: f64,
    pub y: f64,
    pub slope_in: f64,
    pub slope_out: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentStat {
    pub x: f64,
    pub y: f64,
    pub length: usize,
    pub log_expansion: f64,
    /// min over prefixes of ln‖Df^k v‖ − λ̂k.
    pub worst_defect: f64,
    pub passed_ue1: bool,
    /// Present when the segment ends with a return to Δ.
    pub passed_ue2: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConePlan {
    pub samples: usize,
    pub directions: usize,
    pub max_segment: usize,
    pub c_eps_target: f64,
    pub seed: u64,
}

impl Default for ConePlan {
    fn default() -> Self {
        Self { samples: 10_000, directions: 8, max_segment: 60, c_eps_target: 0.1, seed: 11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda_hat: f64,
    pub samples: usize,
    pub slope_violations: Vec<SlopeViolation>,
    pub segment_stats: Vec<SegmentStat>,
    pub measured_c_eps: f64,
    pub ue2_segments: usize,
    pub ue2_failures: usize,
}

impl ConeCertificate {
    pub fn passed(&self) -> bool {
        self.slope_violations.is_empty() && self.ue2_failures == 0
    }
}

/// Uniform points of D ∩ {|y| < 4|b|} outside Δ_ε.
pub fn sample_outside_strip(d: &DRegion, b: f64, epsilon: f64, n: usize, rng: &mut impl Rng) -> Vec<Point2> {
    let r = d.bounding_rect();
    let hb = 4.0 * b.abs();
    let (y0, y1) = (r.y_min.max(-hb), r.y_max.min(hb));
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n && tries < 1000 * n.max(1) {
        tries += 1;
        let z = Point2::new(rng.gen_range(r.x_min..r.x_max), rng.gen_range(y0..y1));
        if z.x.abs() >= epsilon && d.contains(z) {
            out.push(z);
        }
    }
    out
}

/// Slope-cone invariance and segment expansion outside Δ_ε, sampled on
/// D ∩ {|y| < 4|b|}, the strip that contains the nonwandering set.
pub fn certify_outside(
    map: &HenonLikeMap,
    d: &DRegion,
    epsilon: f64,
    alpha: f64,
    lambda_hat: f64,
    plan: &ConePlan,
) -> Result<ConeCertificate> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let pts = sample_outside_strip(d, map.b, epsilon, plan.samples, &mut rng);
    let slopes: Vec<Vec<f64>> = (0..pts.len())
        .map(|_| {
            let mut s = vec![-alpha * (1.0 - 1e-12), 0.0, alpha * (1.0 - 1e-12)];
            s.extend((0..plan.directions).map(|_| rng.gen_range(-alpha..alpha)));
            s
        })
        .collect();
    let in_strip = |z: Point2| Region::DeltaEps(epsilon).contains_static(z, map.b.abs()) == Some(true);
    let results: Vec<(Vec<SlopeViolation>, SegmentStat)> = pts
        .par_iter()
        .zip(slopes.par_iter())
        .map(|(&z, ss)| {
            let j = map.jacobian(z);
            let viol = ss
                .iter()
                .filter_map(|&s| {
                    let out = j.apply(Vec2::new(1.0, s)).slope();
                    (!(out < alpha)).then_some(SlopeViolation { x: z.x, y: z.y, slope_in: s, slope_out: out })
                })
                .collect();
            let (mut u, mut v) = (z, Vec2::new(1.0, 0.0));
            let (mut log_norm, mut worst) = (0.0, f64::INFINITY);
            let mut k = 0;
            let mut ue2 = None;
            while k < plan.max_segment {
                v = map.jacobian(u).apply(v);
                u = map.apply(u);
                k += 1;
                let n = v.norm();
                log_norm += n.ln();
                v = v * (1.0 / n);
                worst = worst.min(log_norm - lambda_hat * k as f64);
                if !Rect::R_HAT.contains(u) {
                    break;
                }
                if in_strip(u) {
                    // Δ: strip points whose image leaves D.
                    if !d.contains(map.apply(u)) {
                        ue2 = Some(log_norm >= lambda_hat * k as f64);
                    }
                    break;
                }
            }
            let stat = SegmentStat {
                x: z.x,
                y: z.y,
                length: k,
                log_expansion: log_norm,
                worst_defect: worst,
                passed_ue1: worst >= plan.c_eps_target.ln(),
                passed_ue2: ue2,
            };
            (viol, stat)
        })
        .collect();
    let mut slope_violations = Vec::new();
    let mut segment_stats = Vec::with_capacity(results.len());
    for (v, s) in results {
        slope_violations.extend(v);
        segment_stats.push(s);
    }
    let worst = segment_stats.iter().map(|s| s.worst_defect).fold(f64::INFINITY, f64::min);
    let ue2_segments = segment_stats.iter().filter(|s| s.passed_ue2.is_some()).count();
    let ue2_failures = segment_stats.iter().filter(|s| s.passed_ue2 == Some(false)).count();
    Ok(ConeCertificate {
        epsilon,
        alpha,
        lambda_hat,
        samples: pts.len(),
        slope_violations,
        segment_stats,
        measured_c_eps: worst.exp().min(1.0),
        ue2_segments,
        ue2_failures,
    })
}

// ---------------------------------------------------------------------------
// Recovery times and N_a
// ---------------------------------------------------------------------------

/// Smallest N ≤ cap with d(C^(N), C) < d/2 and 3^N (d/2) ≥ e^{λN}.
pub fn solve_na(distance: f64, lambda: f64, cap: usize, approx_error: impl Fn(usize) -> f64) -> Result<usize> {
    (1..=cap)
        .find(|&n| approx_error(n) < distance / 2.0 && 3.0_f64.powi(n as i32) * distance / 2.0 >= (lambda * n as f64).exp())
        .ok_or(Error::NoValidN { cap, distance })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySample {
    pub x: f64,
    pub y: f64,
    pub n: usize,
    pub log_norm: f64,
    pub log_bound: f64,
    pub image_slope: f64,
    /// f(z) is in V_j only for j < k0, outside the regime the bound assumes.
    pub shallow: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub n_a: usize,
    pub distance: f64,
    pub samples: Vec<RecoverySample>,
    /// Strip points whose image is not in V.
    pub skipped: usize,
}

impl RecoveryReport {
    /// Every return with f(z) ∈ V_{k0} recovers.
    pub fn passed(&self) -> bool {
        self.samples.iter().all(|s| s.passed || s.shallow)
    }
}

/// Recovery times n(z) = min{order of f(z), N_a} at Ω-sample points in Δ_ε,
/// and the expansion ‖Df^{n(z)} v‖ ≥ e^{λ n(z)} of their unstable tangents.
/// Returns of order below `k0` are kept but marked shallow.
#[allow(clippy::too_many_arguments)]
pub fn recovery_and_na(
    ctx: &RegionContext,
    lambda: f64,
    epsilon: f64,
    k0: usize,
    critical: &[Point2],
    approx_error: impl Fn(usize) -> f64,
    omega: &OmegaSample,
    cap: usize,
) -> Result<RecoveryReport> {
    let map = &ctx.map;
    if omega.is_empty() || critical.is_empty() {
        return Err(Error::Precondition("empty Omega sample or critical set".into()));
    }
    let distance = omega
        .points
        .iter()
        .flat_map(|z| critical.iter().map(move |c| z.dist(*c)))
        .fold(f64::INFINITY, f64::min);
    let n_a = solve_na(distance, lambda, cap, approx_error)?;
    let mut samples = Vec::new();
    let mut skipped = 0;
    for (i, z) in omega.points.iter().enumerate() {
        if Region::DeltaEps(epsilon).contains_static(*z, map.b.abs()) != Some(true) {
            continue;
        }
        let Some(order) = ctx.vk_order(*z, n_a).order() else {
            skipped += 1;
            continue;
        };
        let n = order.clamp(1, n_a);
        let Some(w) = omega.push_tangent(map, i, n).or_else(|| direct_push(map, *z, omega.tangents[i], n)) else {
            skipped += 1;
            continue;
        };
        let log_norm = w.norm().ln();
        let log_bound = lambda * n as f64;
        samples.push(RecoverySample {
            x: z.x,
            y: z.y,
            n,
            log_norm,
            log_bound,
            image_slope: w.slope(),
            shallow: order < k0,
            passed: log_norm >= log_bound,
        });
    }
    Ok(RecoveryReport { n_a, distance, samples, skipped })
}

fn direct_push<M: PlanarMap + ?Sized>(map: &M, z: Point2, v: Vec2, n: usize) -> Option<Vec2> {
    let (mut u, mut w) = (z, v);
    for _ in 0..n {
        w = map.jacobian(u).apply(w);
        u = map.apply(u);
    }
    (w.norm().is_finite()).then_some(w)
}

// ---------------------------------------------------------------------------
// C_a
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypConstants {
    pub lambda: f64,
    pub lambda_hat: f64,
    pub epsilon: f64,
    pub k0: usize,
    pub n_a: usize,
    pub c_n_plus: f64,
    pub c_n_minus: f64,
    pub c_eps: f64,
    pub c_a: f64,
}

/// Extreme expansion and contraction of Df^j over a grid on D, j ≤ n_a, and
/// C_a = min{C_ε/C⁺, C⁻ e^{−λN}/C⁺}.
#[allow(clippy::too_many_arguments)]
pub fn assemble_ca(
    map: &HenonLikeMap,
    d: &DRegion,
    n_a: usize,
    lambda: f64,
    lambda_hat: f64,
    epsilon: f64,
    k0: usize,
    c_eps: f64,
    grid: usize,
) -> HypConstants {
    let (c_n_plus, c_n_minus) = if n_a == 0 {
        (1.0, 1.0)
    } else {
        let r = d.bounding_rect();
        let pts: Vec<Point2> = (0..grid * grid)
            .map(|i| {
                let (ix, iy) = (i % grid, i / grid);
                Point2::new(
                    r.x_min + r.width() * (ix as f64 + 0.5) / grid as f64,
                    r.y_min + r.height() * (iy as f64 + 0.5) / grid as f64,
                )
            })
            .filter(|z| d.contains(*z))
            .collect();
        pts.par_iter()
            .map(|&z| {
                let (mut hi, mut lo) = (0.0_f64, f64::INFINITY);
                for j in 1..=n_a {
                    let Ok(sp) = scaled_product(map, z, j) else { break };
                    let (s, _) = sp.matrix.singular_values();
                    let log_max = sp.log_scale + s.ln();
                    hi = hi.max(log_max.exp());
                    lo = lo.min((sp.log_det - log_max).exp());
                }
                (hi, lo)
            })
            .reduce(|| (0.0, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)))
    };
    let c_a = (c_eps / c_n_plus).min(c_n_minus * (-lambda * n_a as f64).exp() / c_n_plus);
    HypConstants { lambda, lambda_hat, epsilon, k0, n_a, c_n_plus, c_n_minus, c_eps, c_a }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub samples: usize,
    /// (sample index, n, ln‖Df^n v‖ − ln(C_a e^{λn})) for failures.
    pub failures: Vec<(usize, usize, f64)>,
    pub worst_margin: f64,
}

/// ‖Df^n(v)‖ ≥ C_a e^{λn}‖v‖ for random (z, n ≤ n_max) on the Ω-sample.
pub fn spot_check_ca(map: &HenonLikeMap, consts: &HypConstants, omega: &OmegaSample, count: usize, n_max: usize, seed: u64) -> SpotCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    let mut samples = 0;
    let mut tries = 0;
    while samples < count && tries < 100 * count && !omega.is_empty() {
        tries += 1;
        let i = rng.gen_range(0..omega.len());
        let n = rng.gen_range(1..=n_max);
        let Some(w) = omega.push_tangent(map, i, n) else { continue };
        samples += 1;
        let margin = w.norm().ln() - (consts.c_a.ln() + consts.lambda * n as f64);
        worst = worst.min(margin);
        if margin < 0.0 {
            failures.push((i, n, margin));
        }
    }
    SpotCheck { samples, failures, worst_margin: worst }
}

// ---------------------------------------------------------------------------
// Splitting diagnostics
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingField {
    pub k_split: usize,
    pub points: Vec<Point2>,
    pub e_u: Vec<Vec2>,
    pub e_s: Vec<Vec2>,
    pub angles: Vec<f64>,
    pub min_angle: f64,
    pub mean_angle: f64,
    /// (h, max E_u angle difference, max E_s angle difference) over pairs closer than h.
    pub modulus: Vec<(f64, f64, f64)>,
    /// Largest angle between Df(E_u(z)) and E_u(f(z)) over matched pairs.
    pub invariance_defect: f64,
    pub matched_pairs: usize,
}

/// E_u from the sample tangents, E_s from the order-k_split frame.
pub fn splitting_diagnostics(map: &HenonLikeMap, omega: &OmegaSample, k_split: usize) -> Result<SplittingField> {
    let frames: Vec<Option<Vec2>> = omega.points.par_iter().map(|z| frame(map, *z, k_split).ok().map(|f| f.e_k)).collect();
    let idx: Vec<usize> = (0..omega.len()).filter(|&i| frames[i].is_some()).collect();
    if idx.is_empty() {
        return Err(Error::Construction("no sample point has a frame".into()));
    }
    let points: Vec<Point2> = idx.iter().map(|&i| omega.points[i]).collect();
    let e_u: Vec<Vec2> = idx.iter().map(|&i| omega.tangents[i].normalized()).collect();
    let e_s: Vec<Vec2> = idx.iter().map(|&i| frames[i].expect("filtered")).collect();
    let angles: Vec<f64> = e_u.iter().zip(&e_s).map(|(u, s)| u.line_angle(*s)).collect();
    let min_angle = angles.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_angle = angles.iter().sum::<f64>() / angles.len() as f64;
    let modulus = [1e-2, 1e-3]
        .iter()
        .map(|&h| {
            let (mu, ms) = (0..points.len())
                .into_par_iter()
                .map(|i| {
                    let (mut mu, mut ms) = (0.0_f64, 0.0_f64);
                    for j in (i + 1)..points.len() {
                        if points[i].dist(points[j]) < h {
                            mu = mu.max(e_u[i].line_angle(e_u[j]));
                            ms = ms.max(e_s[i].line_angle(e_s[j]));
                        }
                    }
                    (mu, ms)
                })
                .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
            (h, mu, ms)
        })
        .collect();
    let (mut defect, mut matched) = (0.0_f64, 0);
    for i in 0..omega.len() {
        if let Some(j) = omega.next[i] {
            let img = map.jacobian(omega.points[i]).apply(omega.tangents[i]);
            defect = defect.max(img.line_angle(omega.tangents[j]));
            matched += 1;
        }
    }
    Ok(SplittingField {
        k_split,
        points,
        e_u,
        e_s,
        angles,
        min_angle,
        mean_angle,
        modulus,
        invariance_defect: defect,
        matched_pairs: matched,
    })
}

/// Smallest angle between a curve's tangent and e_k at its vertices within
/// `radius` of `centre`, with the number of vertices used.
pub fn splitting_along_curve(map: &HenonLikeMap, curve: &PolyCurve, centre: Point2, radius: f64, k_split: usize) -> (f64, usize) {
    curve
        .vertices
        .iter()
        .zip(&curve.tangents)
        .filter(|(v, _)| v.dist(centre) <= radius)
        .filter_map(|(v, t)| frame(map, *v, k_split).ok().map(|f| t.line_angle(f.e_k)))
        .fold((f64::INFINITY, 0), |(m, n), a| (m.min(a), n + 1))
}

/// Critical points for the solver: on-curve locations.
pub fn critical_locations(points: &[CriticalPoint]) -> Vec<Point2> {
    points.iter().map(|c| c.c()).collect()
}
