//! First-tangency parameter a*, the four-crossing parameter â, and scans in a.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{crossings_sets, CrossingReport, PolyCurve, Refinement};
use crate::error::{Error, Result};
use crate::fixed_points::{find_fixed_points, FixedPointData, ManifoldKind};
use crate::geometry::{Point2, Rect};
use crate::manifolds::{grow, map_arcs, primary_arc, stable_leaf, GrowthConfig, Side};
use crate::map_core::{Direction, HenonLikeMap, MapParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TangencyCase {
    /// b > 0: Γ^s(p) against Γ^u(q).
    ReversingPQ,
    /// b < 0: Γ^s(q) against Γ^u(q).
    PreservingQQ,
}

impl TangencyCase {
    pub fn for_b(b: f64) -> Self {
        if b > 0.0 {
            Self::ReversingPQ
        } else {
            Self::PreservingQQ
        }
    }
}

/// Conventions for the compact manifold pieces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaConfig {
    /// Arclength of the unstable branch of q heading towards p.
    pub unstable_length: f64,
    /// Pull-backs used to build the outer stable leaf of p.
    pub stable_generations: usize,
    pub refinement: Refinement,
    /// Per-branch arclength of W^u_loc(p) in the four-crossing predicate.
    pub local_length_p: f64,
    /// Per-branch arclength of W^u_loc(q) in the four-crossing predicate.
    pub local_length_q: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            unstable_length: 3.0,
            stable_generations: 10,
            refinement: Refinement::default(),
            local_length_p: 1.2,
            local_length_q: 4.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GammaPieces {
    pub case: TangencyCase,
    pub unstable: Vec<PolyCurve>,
    pub stable: Vec<PolyCurve>,
}

/// Grow the case-appropriate Γ^u and Γ^s pieces.
pub fn gamma_pieces(map: &HenonLikeMap, cfg: &GammaConfig) -> Result<GammaPieces> {
    let case = TangencyCase::for_b(map.b);
    let (p, q) = find_fixed_points(map)?;
    let growth = GrowthConfig {
        max_arclength: cfg.unstable_length,
        refinement: cfg.refinement,
        side: Side::Plus,
        ..GrowthConfig::default()
    };
    let mut unstable = grow(map, &q, ManifoldKind::Unstable, &growth)?.arcs;
    for a in &mut unstable {
        a.tag = "Gamma_u(Q)".into();
    }
    let stable = match case {
        TangencyCase::ReversingPQ => stable_leaf(map, &p, cfg.stable_generations, &cfg.refinement)?,
        TangencyCase::PreservingQQ => stable_leaf(map, &q, 0, &cfg.refinement)?,
    };
    Ok(GammaPieces { case, unstable, stable })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapSample {
    pub a: f64,
    pub gap: f64,
    pub count: usize,
    pub min_angle: Option<f64>,
    pub witness: Option<(Point2, Point2)>,
}

fn sample_from(a: f64, r: &CrossingReport) -> GapSample {
    GapSample {
        a,
        gap: r.min_clearance,
        count: r.count,
        min_angle: r.points.iter().map(|p| p.angle).reduce(f64::min),
        witness: r.witness,
    }
}

/// Signed clearance between the Γ pieces at parameter a: positive when
/// separated, negative (penetration depth) when crossing.
pub fn gap_sample(params: &MapParams, cfg: &GammaConfig, a: f64) -> Result<GapSample> {
    let map = HenonLikeMap::from_params(params)?.with_a(a);
    let pieces = gamma_pieces(&map, cfg)?;
    Ok(sample_from(a, &crossings_sets(&pieces.unstable, &pieces.stable)))
}

pub fn gap(params: &MapParams, cfg: &GammaConfig, a: f64) -> Result<f64> {
    gap_sample(params, cfg, a).map(|s| s.gap)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TangencyReport {
    pub a_star: f64,
    pub case: TangencyCase,
    pub brackets: Vec<(f64, f64)>,
    pub samples: Vec<GapSample>,
    pub witness: Option<(Point2, Point2)>,
}

/// Sign changes of consecutive samples of a predicate-like function.
fn sign_changes(values: &[(f64, f64)]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0].1 > 0.0) != (w[1].1 > 0.0))
        .map(|(i, _)| i)
        .collect()
}

/// Evaluate `f` on `n` equally spaced points of [lo, hi] in parallel.
fn scan_values<F>(lo: f64, hi: f64, n: usize, f: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            f(a).map(|v| (a, v))
        })
        .collect()
}

/// Bisect a function that is positive at `lo` and non-positive at `hi`.
fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, f: F, brackets: &mut Vec<(f64, f64)>) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    brackets.push((lo, hi));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        brackets.push((lo, hi));
    }
    Ok(0.5 * (lo + hi))
}

const SANITY_SCAN: usize = 64;

/// Locate a* in `bracket` by bisection on the gap function.
pub fn find_a_star(params: &MapParams, cfg: &GammaConfig, bracket: (f64, f64), tol: f64) -> Result<TangencyReport> {
    let (lo, hi) = bracket;
    let g = |a: f64| gap(params, cfg, a);
    let scan = scan_values(lo, hi, SANITY_SCAN, g)?;
    let (g_lo, g_hi) = (scan[0].1, scan[SANITY_SCAN - 1].1);
    if !(g_lo > 0.0 && g_hi <= 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let changes = sign_changes(&scan);
    if changes.len() > 1 {
        return Err(Error::MultipleSignChanges(changes.iter().map(|&i| scan[i].0).collect()));
    }
    let i = changes[0];
    let mut brackets = vec![(lo, hi)];
    let a_star = bisect(scan[i].0, scan[i + 1].0, tol, g, &mut brackets)?;
    let at = gap_sample(params, cfg, a_star)?;
    let mut samples: Vec<GapSample> = scan
        .iter()
        .map(|&(a, v)| GapSample { a, gap: v, count: 0, min_angle: None, witness: None })
        .collect();
    samples.push(at.clone());
    samples.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(TangencyReport { a_star, case: TangencyCase::for_b(params.b), brackets, samples, witness: at.witness })
}

/// The local pieces used by the four-crossing predicate.
pub fn local_pieces(map: &HenonLikeMap, cfg: &GammaConfig) -> Result<(FixedPointData, Vec<PolyCurve>, Vec<PolyCurve>)> {
    let (p, q) = find_fixed_points(map)?;
    let (fp, length) = match TangencyCase::for_b(map.b) {
        TangencyCase::ReversingPQ => (p, cfg.local_length_p),
        TangencyCase::PreservingQQ => (q, cfg.local_length_q),
    };
    let growth = GrowthConfig { max_arclength: length, refinement: cfg.refinement, ..GrowthConfig::default() };
    let unstable = grow(map, &fp, ManifoldKind::Unstable, &growth)?.arcs;
    let primary = primary_arc(map, &fp, ManifoldKind::Stable, &Rect::R_HAT, &cfg.refinement)?;
    let mut stable = vec![primary.clone()];
    if fp.label == crate::fixed_points::FixedPointLabel::P {
        // The fold of W^u(p) first meets the pull-back of the left arm.
        let left = crate::manifolds::clip_arcs(&[primary], &Rect::new(-2.0, 0.0, -4.0, 2.0));
        stable.extend(map_arcs(map, &left, Direction::Backward, &Rect::R_HAT, &cfg.refinement)?);
    }
    Ok((fp, unstable, stable))
}

/// Number of crossings between the local pieces away from the fixed point.
pub fn local_crossings(params: &MapParams, cfg: &GammaConfig, a: f64) -> Result<usize> {
    let map = HenonLikeMap::from_params(params)?.with_a(a);
    let (fp, u, s) = local_pieces(&map, cfg)?;
    let r = crossings_sets(&u, &s);
    Ok(r.points.iter().filter(|c| Point2::new(c.x, c.y).dist(fp.location) > 1e-6).count())
}

/// Off-fixed-point crossings that complete the four-crossing configuration.
/// They are created in transverse pairs, so two suffice.
pub const LOCAL_CROSSING_THRESHOLD: usize = 2;

/// Predicate value for bisection: positive until the extra crossings appear.
fn four_crossing_margin(params: &MapParams, cfg: &GammaConfig, a: f64) -> Result<f64> {
    Ok(if local_crossings(params, cfg, a)? >= LOCAL_CROSSING_THRESHOLD { -1.0 } else { 1.0 })
}

/// Locate â in `bracket` by bisection on the four-crossing predicate.
pub fn find_a_hat(params: &MapParams, cfg: &GammaConfig, bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (lo, hi) = bracket;
    let m = |a: f64| four_crossing_margin(params, cfg, a);
    if !(m(lo)? > 0.0 && m(hi)? <= 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    bisect(lo, hi, tol, m, &mut Vec::new())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Gap,
    Crossings,
    MinAngle,
    LyapunovMin,
}

impl std::str::FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(Self::Gap),
            "crossings" => Ok(Self::Crossings),
            "min_angle" => Ok(Self::MinAngle),
            "lyapunov_min" => Ok(Self::LyapunovMin),
            other => Err(Error::Precondition(format!("unknown observable {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ScanRow {
    pub a: f64,
    pub gap: Option<f64>,
    pub crossings: Option<usize>,
    pub min_angle: Option<f64>,
    pub lyapunov_min: Option<f64>,
    pub error: Option<String>,
}

fn scan_row(params: &MapParams, cfg: &GammaConfig, a: f64, observables: &[Observable]) -> ScanRow {
    let mut row = ScanRow { a, ..ScanRow::default() };
    let wants = |o| observables.contains(&o);
    let mut errors = Vec::new();
    if wants(Observable::Gap) || wants(Observable::Crossings) || wants(Observable::MinAngle) {
        match gap_sample(params, cfg, a) {
            Ok(s) => {
                if wants(Observable::Gap) {
                    row.gap = Some(s.gap);
                }
                if wants(Observable::Crossings) {
                    row.crossings = Some(s.count);
                }
                if wants(Observable::MinAngle) {
                    row.min_angle = s.min_angle;
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    if wants(Observable::LyapunovMin) {
        match crate::hyperbolicity::min_unstable_exponent(params, a, 10) {
            Ok(v) => row.lyapunov_min = Some(v),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// One row per a value; failures land in the row's error column.
pub fn scan(params: &MapParams, cfg: &GammaConfig, a_values: &[f64], observables: &[Observable]) -> Vec<ScanRow> {
    a_values.par_iter().map(|&a| scan_row(params, cfg, a, observables)).collect()
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let opt = |v: Option<f64>| v.map(crate::curve::fmt17).unwrap_or_default();
    let mut s = String::from("a,gap,crossings,min_angle,lyapunov_min,error\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            crate::curve::fmt17(r.a),
            opt(r.gap),
            r.crossings.map(|c| c.to_string()).unwrap_or_default(),
            opt(r.min_angle),
            opt(r.lyapunov_min),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_follows_sign_of_b() {
        assert_eq!(TangencyCase::for_b(0.05), TangencyCase::ReversingPQ);
        assert_eq!(TangencyCase::for_b(-0.05), TangencyCase::PreservingQQ);
    }

    #[test]
    fn empty_scan() {
        assert!(scan(&MapParams::default(), &GammaConfig::default(), &[], &[Observable::Gap]).is_empty());
    }

    #[test]
    fn sign_change_indices() {
        let v = [(0.0, 1.0), (1.0, 0.5), (2.0, -0.1), (3.0, -1.0)];
        assert_eq!(sign_changes(&v), vec![1]);
    }
}
