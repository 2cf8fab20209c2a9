//! Region decomposition of the plane, the fixed-point neighbourhoods Q_n and
//! V_n, the disc D, and sampling checks of the escape and localization properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{crossings_sets, CurveIndex, PolyCurve, Refinement};
use crate::error::{Error, Result};
use crate::fixed_points::{find_fixed_points, FixedPointData, ManifoldKind};
use crate::geometry::{Point2, Rect};
use crate::manifolds::{grow, primary_arc, GrowthConfig, Side};
use crate::map_core::{HenonLikeMap, PlanarMap};

/// Radius of the ball Q around q.
pub const DELTA: f64 = 0.1;
/// The box whose exit counts as escape.
pub const ESCAPE_BOX: Rect = Rect::new(-10.0, 10.0, -10.0, 10.0);
pub const ESCAPE_STEPS: usize = 40;
/// Extra iterates an orbit must survive to count as bounded.
const BOUNDED_MARGIN: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    R,
    RHat,
    DeltaEps(f64),
    /// Points of Δ_ε whose image leaves D.
    Delta(f64),
    Q,
    Qn(usize),
    Vn(usize),
    VnPlus(usize),
    VnMinus(usize),
    D,
}

impl std::str::FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "V1" => Self::V1,
            "V2" => Self::V2,
            "V3" => Self::V3,
            "V4" => Self::V4,
            "V5" => Self::V5,
            "V6" => Self::V6,
            "R" => Self::R,
            "Rhat" => Self::RHat,
            "Q" => Self::Q,
            "D" => Self::D,
            other => return Err(Error::Precondition(format!("unknown region {other:?}"))),
        })
    }
}

impl Region {
    /// The escape regions, with forward (true) or backward escape.
    pub const ESCAPE: [(Region, bool); 6] = [
        (Region::V1, true),
        (Region::V2, true),
        (Region::V3, true),
        (Region::V4, false),
        (Region::V5, false),
        (Region::V6, false),
    ];

    /// Membership for the regions given by inequalities alone. The strip
    /// heights use |b| so the same tests serve b < 0.
    pub fn contains_static(&self, z: Point2, b: f64) -> Option<bool> {
        let (x, y, b) = (z.x, z.y, b.abs());
        Some(match *self {
            Region::V1 => x <= -2.0 && y <= x.abs(),
            Region::V2 => x <= 2.0 && y <= -4.0,
            Region::V3 => x >= 2.0 && y <= 2.0,
            Region::V4 => x >= -2.0 && y >= 2.0,
            Region::V5 => x <= -2.0 && y >= x.abs(),
            Region::V6 => x.abs() <= 2.0 && y >= 4.0 * b,
            Region::R => x.abs() < 2.0 && y > -4.0 && y < 4.0 * b,
            Region::RHat => Rect::R_HAT.contains(z),
            Region::DeltaEps(eps) => x.abs() < eps && y.abs() < 4.0 * b,
            _ => return None,
        })
    }

    /// Bounding box of region ∩ [−10,10]² for the escape regions.
    pub fn escape_box(&self, b: f64) -> Rect {
        match self {
            Region::V1 => Rect::new(-10.0, -2.0, -10.0, 10.0),
            Region::V2 => Rect::new(-10.0, 2.0, -10.0, -4.0),
            Region::V3 => Rect::new(2.0, 10.0, -10.0, 2.0),
            Region::V4 => Rect::new(-2.0, 10.0, 2.0, 10.0),
            Region::V5 => Rect::new(-10.0, -2.0, 2.0, 10.0),
            _ => Rect::new(-2.0, 2.0, 4.0 * b.abs(), 10.0),
        }
    }
}

/// Order of membership in the nested sets V_k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VkOrder {
    NotInV,
    Finite(usize),
    /// Still in Q after `k_cap` steps: treated as infinite.
    Capped(usize),
}

impl VkOrder {
    pub fn order(&self) -> Option<usize> {
        match *self {
            VkOrder::NotInV => None,
            VkOrder::Finite(k) | VkOrder::Capped(k) => Some(k),
        }
    }
}

/// Everything needed for the map-dependent regions.
pub struct RegionContext {
    pub map: HenonLikeMap,
    pub p: FixedPointData,
    pub q: FixedPointData,
    /// f^{-1}(W^s_δ(q)) near (1, 0): the boundary between V^+ and V^-.
    pub leaf: PolyCurve,
    pub d: Option<DRegion>,
}

impl RegionContext {
    /// Build the context; D is attempted and left empty if it cannot be closed.
    pub fn new(map: &HenonLikeMap) -> Result<Self> {
        let (p, q) = find_fixed_points(map)?;
        let leaf = stable_leaf_in_v(map, &q)?;
        let d = DRegion::build(map, &Refinement::default()).ok();
        Ok(Self { map: map.clone(), p, q, leaf, d })
    }

    pub fn in_q(&self, z: Point2) -> bool {
        z.dist(self.q.location) < DELTA
    }

    /// V = f^{-1}(Q) near (1, 0).
    pub fn in_v(&self, z: Point2) -> bool {
        z.x > 0.0 && z.y.abs() < 0.5 && self.in_q(self.map.apply(z))
    }

    /// Largest n ≤ cap with f^i(z) ∈ Q for 0 ≤ i ≤ n; None if z ∉ Q.
    fn q_order(&self, z: Point2, cap: usize) -> Option<usize> {
        let mut u = z;
        let mut k = None;
        for i in 0..=cap {
            if !self.in_q(u) {
                break;
            }
            k = Some(i);
            u = self.map.apply(u);
        }
        k
    }

    /// Largest k ≤ cap with w ∈ V_k.
    pub fn v_order(&self, w: Point2, cap: usize) -> VkOrder {
        if !self.in_v(w) {
            return VkOrder::NotInV;
        }
        match self.q_order(self.map.apply(w), cap) {
            Some(k) if k == cap => VkOrder::Capped(k),
            Some(k) => VkOrder::Finite(k),
            None => VkOrder::NotInV,
        }
    }

    /// Largest k ≤ cap with f(z) ∈ V_k.
    pub fn vk_order(&self, z: Point2, cap: usize) -> VkOrder {
        self.v_order(self.map.apply(z), cap)
    }

    /// Signed horizontal offset from the leaf at height z.y (negative on the D side).
    pub fn leaf_offset(&self, z: Point2) -> Option<f64> {
        let v = &self.leaf.vertices;
        v.windows(2).find_map(|w| {
            let (lo, hi) = if w[0].y <= w[1].y { (w[0], w[1]) } else { (w[1], w[0]) };
            (z.y >= lo.y && z.y <= hi.y && hi.y > lo.y).then(|| {
                let t = (z.y - lo.y) / (hi.y - lo.y);
                z.x - (lo.x + t * (hi.x - lo.x))
            })
        })
    }

    pub fn distance_to_leaf(&self, z: Point2) -> f64 {
        CurveIndex::new(std::slice::from_ref(&self.leaf)).distance(z)
    }

    pub fn contains(&self, z: Point2, region: &Region) -> bool {
        if let Some(v) = region.contains_static(z, self.map.b) {
            return v;
        }
        match *region {
            Region::Q => self.in_q(z),
            Region::Qn(n) => self.q_order(z, n) == Some(n),
            Region::Vn(n) => self.v_order(z, n).order() == Some(n),
            Region::VnMinus(n) => {
                self.contains(z, &Region::Vn(n)) && self.leaf_offset(z).is_some_and(|o| o < 0.0)
            }
            Region::VnPlus(n) => {
                self.contains(z, &Region::Vn(n)) && !self.leaf_offset(z).is_some_and(|o| o < 0.0)
            }
            Region::D => self.d.as_ref().is_some_and(|d| d.contains(z)),
            Region::Delta(eps) => {
                Region::DeltaEps(eps).contains_static(z, self.map.b) == Some(true)
                    && !self.d.as_ref().is_some_and(|d| d.contains(self.map.apply(z)))
            }
            _ => unreachable!("static regions handled above"),
        }
    }

    /// Smallest order of V_k reached by f(Δ_ε) on an n×n grid (the largest k
    /// with f(Δ_ε) ⊂ V_k); None when some image leaves V.
    pub fn delta_containment_order(&self, eps: f64, n: usize, cap: usize) -> Option<usize> {
        let hb = 4.0 * self.map.b.abs();
        let mut worst = cap;
        for i in 0..n {
            for j in 0..n {
                let x = -eps + 2.0 * eps * (i as f64 + 0.5) / n as f64;
                let y = -hb + 2.0 * hb * (j as f64 + 0.5) / n as f64;
                worst = worst.min(self.vk_order(Point2::new(x, y), cap).order()?);
            }
        }
        Some(worst)
    }
}

/// The piece of the primary stable arc of q whose image lies in Q, near (1, 0).
fn stable_leaf_in_v(map: &HenonLikeMap, q: &FixedPointData) -> Result<PolyCurve> {
    let arc = primary_arc(map, q, ManifoldKind::Stable, &Rect::R_HAT, &Refinement::default())?;
    let keep: Vec<bool> = arc
        .vertices
        .iter()
        .map(|v| v.x > 0.0 && v.y.abs() < 0.5 && map.apply(*v).dist(q.location) < DELTA)
        .collect();
    // Longest run of kept vertices.
    let (mut best, mut start) = ((0, 0), None);
    for i in 0..=keep.len() {
        match (i < keep.len() && keep[i], start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    if best.1 - best.0 < 2 {
        return Err(Error::Construction("stable leaf near (1,0) not found".into()));
    }
    let mut leaf = arc.slice(best.0, best.1 - 1);
    leaf.tag = "f^-1(Ws_delta(Q))".into();
    Ok(leaf)
}

// ---------------------------------------------------------------------------
// The disc D
// ---------------------------------------------------------------------------

const BANDS: usize = 512;

/// Closed boundary polygon with banded ray-casting membership.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DRegion {
    /// Counterclockwise.
    pub boundary: Vec<Point2>,
    /// The unstable arc did not reach the stable arc and was closed by a segment.
    pub closed_by_segment: bool,
    pub area: f64,
    #[serde(skip)]
    bands: Vec<Vec<u32>>,
    #[serde(skip)]
    y_range: (f64, f64),
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y).sum::<f64>()
}

/// Position along a set of arcs: (arc, segment + t).
type Pos = (usize, f64);

fn pos_cmp(a: &Pos, b: &Pos) -> std::cmp::Ordering {
    a.0.cmp(&b.0).then(a.1.total_cmp(&b.1))
}

/// Vertices strictly between two positions of one arc, in walking order.
fn walk(arc: &PolyCurve, from: f64, to: f64) -> Vec<Point2> {
    if from <= to {
        (from.floor() as usize..=to.ceil() as usize)
            .filter(|&i| (i as f64) > from && (i as f64) < to)
            .map(|i| arc.vertices[i])
            .collect()
    } else {
        let mut v = walk(arc, to, from);
        v.reverse();
        v
    }
}

fn at(arc: &PolyCurve, s: f64) -> Point2 {
    let i = (s.floor() as usize).min(arc.len() - 2);
    arc.vertices[i].lerp(arc.vertices[i + 1], s - i as f64)
}

impl DRegion {
    /// Assemble the boundary: for b > 0 the arc of W^u(p) through p between its
    /// first crossings with the primary stable arc of q, closed along that
    /// arc through its bottom; for b < 0 the arc of W^u(q) from q instead.
    pub fn build(map: &HenonLikeMap, tol: &Refinement) -> Result<Self> {
        let (p, q) = find_fixed_points(map)?;
        let stable = primary_arc(map, &q, ManifoldKind::Stable, &Rect::R_HAT, tol)?;
        let (fp, side) = if map.b > 0.0 { (p, Side::Both) } else { (q, Side::Plus) };
        let cfg = GrowthConfig { max_arclength: 4.0, refinement: *tol, side, ..GrowthConfig::default() };
        let unstable = grow(map, &fp, ManifoldKind::Unstable, &cfg)?.arcs;
        let (ua, ui) = unstable
            .iter()
            .enumerate()
            .find_map(|(a, arc)| arc.vertices.iter().position(|v| v.dist(fp.location) < 1e-9).map(|i| (a, i)))
            .ok_or_else(|| Error::Construction("fixed point not on its unstable arc".into()))?;
        let arc = &unstable[ua];
        let start: Pos = (ua, ui as f64);
        let r = crossings_sets(&unstable, std::slice::from_ref(&stable));
        let hits: Vec<(Pos, f64)> = r
            .points
            .iter()
            .filter(|c| c.a_curve == ua && Point2::new(c.x, c.y).dist(fp.location) > 1e-6)
            .map(|c| ((c.a_curve, c.a_segment as f64 + c.a_t), c.b_segment as f64 + c.b_t))
            .collect();
        let forward = hits.iter().filter(|h| pos_cmp(&h.0, &start).is_gt()).min_by(|x, y| pos_cmp(&x.0, &y.0));
        let backward = hits.iter().filter(|h| pos_cmp(&h.0, &start).is_lt()).max_by(|x, y| pos_cmp(&x.0, &y.0));
        let index = CurveIndex::new(std::slice::from_ref(&stable));
        let stable_pos = |z: Point2| index.nearest(z).map(|n| n.2 as f64 + n.3);
        let mut closed_by_segment = false;
        // Backward end: a crossing, or the fixed point itself when it lies on the stable arc.
        let (u_lo, s_lo) = match (backward, map.b > 0.0) {
            (Some(h), _) => (h.0 .1, h.1),
            (None, false) => (start.1, stable_pos(fp.location).unwrap_or(0.0)),
            (None, true) => return Err(Error::Construction("unstable arc of p misses the stable arc on the left".into())),
        };
        let (u_hi, s_hi) = match forward {
            Some(h) => (h.0 .1, h.1),
            None => {
                // Close at the fold tip (rightmost point) with a straight segment.
                closed_by_segment = true;
                let tip = (ui..arc.len())
                    .max_by(|&i, &j| arc.vertices[i].x.total_cmp(&arc.vertices[j].x))
                    .unwrap_or(ui);
                let s = stable_pos(arc.vertices[tip])
                    .ok_or_else(|| Error::Construction("empty stable arc".into()))?;
                (tip as f64, s)
            }
        };
        let mut boundary = vec![at(arc, u_lo)];
        boundary.extend(walk(arc, u_lo, u_hi));
        boundary.push(at(arc, u_hi));
        if closed_by_segment {
            boundary.push(at(&stable, s_hi));
        }
        boundary.extend(walk(&stable, s_hi, s_lo));
        boundary.dedup();
        if signed_area(&boundary) < 0.0 {
            boundary.reverse();
        }
        Ok(Self::from_boundary(boundary, closed_by_segment))
    }

    pub fn from_boundary(boundary: Vec<Point2>, closed_by_segment: bool) -> Self {
        let area = signed_area(&boundary).abs();
        let lo = boundary.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let hi = boundary.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let mut bands = vec![Vec::new(); BANDS];
        let h = (hi - lo) / BANDS as f64;
        let band_of = |y: f64| (((y - lo) / h).floor().max(0.0) as usize).min(BANDS - 1);
        let n = boundary.len();
        for i in 0..n {
            let (a, b) = (boundary[i], boundary[(i + 1) % n]);
            for band in &mut bands[band_of(a.y.min(b.y))..=band_of(a.y.max(b.y))] {
                band.push(i as u32);
            }
        }
        Self { boundary, closed_by_segment, area, bands, y_range: (lo, hi) }
    }

    pub fn contains(&self, z: Point2) -> bool {
        let (lo, hi) = self.y_range;
        if !(z.y > lo && z.y < hi) {
            return false;
        }
        let band = (((z.y - lo) / (hi - lo) * BANDS as f64) as usize).min(BANDS - 1);
        let n = self.boundary.len();
        let mut inside = false;
        for &i in &self.bands[band] {
            let (a, b) = (self.boundary[i as usize], self.boundary[(i as usize + 1) % n]);
            if (a.y > z.y) != (b.y > z.y) {
                let x = a.x + (z.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > z.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bounding_rect(&self) -> Rect {
        let (lo, hi) = crate::geometry::bbox(&self.boundary).expect("non-empty boundary");
        Rect::new(lo.x, hi.x, lo.y, hi.y)
    }

    /// Uniform samples inside D by rejection from its bounding box.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<Point2> {
        let r = self.bounding_rect();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let z = Point2::new(rng.gen_range(r.x_min..r.x_max), rng.gen_range(r.y_min..r.y_max));
            if self.contains(z) {
                out.push(z);
            }
        }
        out
    }

    /// Self-intersections of the boundary (should be none).
    pub fn self_crossings(&self) -> usize {
        let c = PolyCurve::from_points(self.boundary.clone(), "D");
        let mut closed = c.vertices.clone();
        closed.push(closed[0]);
        let n = closed.len() - 1;
        let mut count = 0;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_cross(closed[i], closed[i + 1], closed[j], closed[j + 1]) {
                    count += 1;
                }
            }
        }
        count
    }
}

fn segments_cross(p: Point2, p2: Point2, q: Point2, q2: Point2) -> bool {
    let (d1, d2) = (p2 - p, q2 - q);
    let den = d1.cross(d2);
    if den == 0.0 {
        return false;
    }
    let w = q - p;
    let (t, u) = (w.cross(d2) / den, w.cross(d1) / den);
    (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u)
}

// ---------------------------------------------------------------------------
// Escape and localization checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub x: f64,
    pub y: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EscapeReport {
    pub region: Region,
    pub grid: usize,
    pub points: usize,
    pub forward: bool,
    pub max_steps: usize,
    pub failures: Vec<Failure>,
}

impl EscapeReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.points > 0
    }
}

/// Steps until the orbit leaves the escape box, with any doubling failures
/// recorded while the orbit stays in V1.
fn escape_orbit(map: &HenonLikeMap, z: Point2, forward: bool, check_doubling: bool) -> std::result::Result<usize, String> {
    let mut cur = z;
    for step in 1..=ESCAPE_STEPS {
        let next = if forward {
            map.apply(cur)
        } else {
            map.apply_inverse(cur).map_err(|e| e.to_string())?
        };
        if check_doubling && Region::V1.contains_static(cur, map.b) == Some(true) && next.x.abs() < 2.0 * cur.x.abs() {
            return Err(format!("doubling fails at step {step}: |x| {} -> {}", cur.x.abs(), next.x.abs()));
        }
        if !(next.x.abs() <= 10.0 && next.y.abs() <= 10.0) {
            return Ok(step);
        }
        cur = next;
    }
    Err(format!("no exit within {ESCAPE_STEPS} steps"))
}

/// Iterate an n×n grid of region ∩ [−10,10]² forward (V1–V3) or backward
/// (V4–V6) and check that every point leaves the box.
pub fn verify_escape(map: &HenonLikeMap, region: Region, grid: usize) -> Result<EscapeReport> {
    let forward = Region::ESCAPE
        .iter()
        .find(|(r, _)| *r == region)
        .map(|(_, f)| *f)
        .ok_or_else(|| Error::Precondition(format!("{region:?} is not an escape region")))?;
    let bx = region.escape_box(map.b);
    let n = grid.max(2);
    let points: Vec<Point2> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            Point2::new(
                bx.x_min + bx.width() * i as f64 / (n - 1) as f64,
                bx.y_min + bx.height() * j as f64 / (n - 1) as f64,
            )
        })
        .filter(|z| region.contains_static(*z, map.b) == Some(true))
        .collect();
    let results: Vec<std::result::Result<usize, String>> = points
        .par_iter()
        .map(|z| escape_orbit(map, *z, forward, region == Region::V1))
        .collect();
    let mut max_steps = 0;
    let mut failures = Vec::new();
    for (z, r) in points.iter().zip(results) {
        match r {
            Ok(s) => max_steps = max_steps.max(s),
            Err(reason) => failures.push(Failure { x: z.x, y: z.y, reason }),
        }
    }
    Ok(EscapeReport { region, grid: n, points: points.len(), forward, max_steps, failures })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub samples: usize,
    pub n_iter: usize,
    pub bounded: usize,
    pub max_distance_to_wu: f64,
    pub violations: Vec<Failure>,
    pub area_steps: usize,
    pub area_ratio: f64,
    pub area_bound: f64,
}

impl LocalizationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LocalizationPlan {
    pub samples: usize,
    pub n_iter: usize,
    pub tol_loc: f64,
    pub area_samples: usize,
    pub area_steps: usize,
    pub seed: u64,
    /// Per-branch arclength of the W^u(p) oracle polyline.
    pub wu_length: f64,
}

impl Default for LocalizationPlan {
    fn default() -> Self {
        Self { samples: 2000, n_iter: 50, tol_loc: 1e-2, area_samples: 100_000, area_steps: 5, seed: 7, wu_length: 30.0 }
    }
}

/// Sample D, iterate, and check that bounded orbits end in the strip
/// [−2,2]×(−4|b|,4|b|) close to W^u(p); estimate area(f^n D)/area(D).
pub fn verify_localization(map: &HenonLikeMap, d: &DRegion, plan: &LocalizationPlan) -> Result<LocalizationReport> {
    let (p, _) = find_fixed_points(map)?;
    let cfg = GrowthConfig { max_arclength: plan.wu_length, ..GrowthConfig::default() };
    let wu = grow(map, &p, ManifoldKind::Unstable, &cfg)?.arcs;
    let index = CurveIndex::new(&wu);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let starts = d.sample(plan.samples, &mut rng);
    let strip = Rect::new(-2.0, 2.0, -4.0 * map.b.abs(), 4.0 * map.b.abs());
    let ends: Vec<Option<Point2>> = starts
        .par_iter()
        .map(|z| {
            // Bounded: still in the box well after the evaluation step.
            let o = map.iterate(*z, (plan.n_iter + BOUNDED_MARGIN) as i64).ok()?;
            let inside = !o.escaped && o.points.iter().all(|p| ESCAPE_BOX.contains(*p));
            inside.then(|| o.points[plan.n_iter])
        })
        .collect();
    let mut violations = Vec::new();
    let mut bounded = 0;
    let mut max_distance: f64 = 0.0;
    for (z, end) in starts.iter().zip(&ends) {
        let Some(end) = end else { continue };
        bounded += 1;
        let dist = index.distance(*end);
        max_distance = max_distance.max(dist);
        if !(end.x.abs() <= 2.0 && strip.contains(Point2::new(0.0, end.y))) {
            violations.push(Failure { x: z.x, y: z.y, reason: format!("ends outside strip at ({}, {})", end.x, end.y) });
        } else if dist > plan.tol_loc {
            violations.push(Failure { x: z.x, y: z.y, reason: format!("ends {dist:e} from W^u(p)") });
        }
    }
    let area_pts = d.sample(plan.area_samples, &mut rng);
    let area_ratio = area_pts
        .par_iter()
        .map(|z| {
            let mut cur = *z;
            let mut det = 1.0;
            for _ in 0..plan.area_steps {
                det *= map.jacobian(cur).det().abs();
                cur = map.apply(cur);
            }
            det
        })
        .sum::<f64>()
        / plan.area_samples as f64;
    let area_bound = (map.b.abs() + 12.0 * map.eta_bound).powi(plan.area_steps as i32);
    Ok(LocalizationReport {
        samples: plan.samples,
        n_iter: plan.n_iter,
        bounded,
        max_distance_to_wu: max_distance,
        violations,
        area_steps: plan.area_steps,
        area_ratio,
        area_bound,
    })
}
