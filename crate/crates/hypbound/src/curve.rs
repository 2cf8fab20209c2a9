//! Adaptive polylines carrying tangent and curvature data, plus the
//! intersection/clearance machinery used for tangency detection.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point2, Vec2};

/// Refinement tolerances for adaptive curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Refinement {
    pub max_spacing: f64,
    pub max_turn: f64,
    pub vertex_cap: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Self { max_spacing: 1e-3, max_turn: 0.05, vertex_cap: 1_000_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolyCurve {
    pub vertices: Vec<Point2>,
    /// Unit tangents, oriented along increasing parameter.
    pub tangents: Vec<Vec2>,
    /// Signed curvature (positive when turning counterclockwise).
    pub curvatures: Vec<f64>,
    /// Cumulative arclength.
    pub param: Vec<f64>,
    pub tag: String,
}

impl PolyCurve {
    pub fn new(vertices: Vec<Point2>, tangents: Vec<Vec2>, curvatures: Vec<f64>, tag: impl Into<String>) -> Self {
        debug_assert_eq!(vertices.len(), tangents.len());
        debug_assert_eq!(vertices.len(), curvatures.len());
        let param = cumulative_arclength(&vertices);
        Self { vertices, tangents, curvatures, param, tag: tag.into() }
    }

    /// Build from bare points, estimating tangents and curvature by finite differences.
    pub fn from_points(vertices: Vec<Point2>, tag: impl Into<String>) -> Self {
        let n = vertices.len();
        let mut tangents = Vec::with_capacity(n);
        let mut curvatures = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let t = if hi > lo { (vertices[hi] - vertices[lo]).normalized() } else { Vec2::new(1.0, 0.0) };
            tangents.push(t);
            curvatures.push(if i > 0 && i + 1 < n {
                menger_curvature(vertices[i - 1], vertices[i], vertices[i + 1])
            } else {
                0.0
            });
        }
        if n >= 3 {
            curvatures[0] = curvatures[1];
            curvatures[n - 1] = curvatures[n - 2];
        }
        Self::new(vertices, tangents, curvatures, tag)
    }

    /// Uniformly sampled straight segment.
    pub fn segment(p0: Point2, p1: Point2, n_segments: usize, tag: impl Into<String>) -> Self {
        let n = n_segments.max(1);
        let t = (p1 - p0).normalized();
        let vertices: Vec<Point2> = (0..=n).map(|i| p0.lerp(p1, i as f64 / n as f64)).collect();
        let m = vertices.len();
        Self::new(vertices, vec![t; m], vec![0.0; m], tag)
    }

    /// Sample a parametrized curve t ↦ (γ, γ̇, γ̈) at the given parameters.
    pub fn sample<F>(ts: impl IntoIterator<Item = f64>, tag: impl Into<String>, jet: F) -> Self
    where
        F: Fn(f64) -> (Point2, Vec2, Vec2),
    {
        let (mut v, mut tg, mut k) = (Vec::new(), Vec::new(), Vec::new());
        for t in ts {
            let (p, d1, d2) = jet(t);
            v.push(p);
            tg.push(d1.normalized());
            k.push(signed_curvature(d1, d2));
        }
        Self::new(v, tg, k, tag)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn arclength(&self) -> f64 {
        self.param.last().copied().unwrap_or(0.0)
    }

    pub fn reversed(&self) -> PolyCurve {
        let vertices: Vec<Point2> = self.vertices.iter().rev().copied().collect();
        let tangents = self.tangents.iter().rev().map(|t| -*t).collect();
        let curvatures = self.curvatures.iter().rev().map(|k| -k).collect();
        PolyCurve::new(vertices, tangents, curvatures, self.tag.clone())
    }

    /// Sub-curve on the vertex range `lo..=hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> PolyCurve {
        PolyCurve::new(
            self.vertices[lo..=hi].to_vec(),
            self.tangents[lo..=hi].to_vec(),
            self.curvatures[lo..=hi].to_vec(),
            self.tag.clone(),
        )
    }

    pub fn max_spacing(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).fold(0.0, f64::max)
    }

    pub fn max_turn(&self) -> f64 {
        self.tangents.windows(2).map(|w| w[0].signed_angle_to(w[1]).abs()).fold(0.0, f64::max)
    }

    pub fn max_slope(&self) -> f64 {
        self.tangents.iter().map(|t| t.slope()).fold(0.0, f64::max)
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.curvatures.iter().map(|k| k.abs()).fold(0.0, f64::max)
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)))
    }

    /// Linear interpolation by arclength.
    pub fn point_at(&self, s: f64) -> Point2 {
        let i = self.param.partition_point(|&p| p <= s);
        if i == 0 {
            return self.vertices[0];
        }
        if i >= self.len() {
            return *self.vertices.last().expect("non-empty");
        }
        let (s0, s1) = (self.param[i - 1], self.param[i]);
        self.vertices[i - 1].lerp(self.vertices[i], (s - s0) / (s1 - s0))
    }

    /// Violations of the spacing / turning / monotone-parameter invariants.
    pub fn invariant_violations(&self, tol: &Refinement) -> Vec<String> {
        let mut out = Vec::new();
        for (i, w) in self.vertices.windows(2).enumerate() {
            let d = w[0].dist(w[1]);
            if d == 0.0 {
                out.push(format!("duplicate vertex at {i}"));
            }
            if d > tol.max_spacing * (1.0 + 1e-9) {
                out.push(format!("spacing {d:e} at {i}"));
            }
        }
        for (i, w) in self.tangents.windows(2).enumerate() {
            let turn = w[0].signed_angle_to(w[1]).abs();
            if turn > tol.max_turn * (1.0 + 1e-9) {
                out.push(format!("turn {turn:e} at {i}"));
            }
        }
        if self.param.windows(2).any(|w| w[1] <= w[0]) {
            out.push("arclength not strictly increasing".into());
        }
        out
    }

    /// Curve CSV: `t,x,y,tx,ty,kappa`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y,tx,ty,kappa")?;
        for i in 0..self.len() {
            let (p, t) = (self.vertices[i], self.tangents[i]);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt17(self.param[i]),
                fmt17(p.x),
                fmt17(p.y),
                fmt17(t.x),
                fmt17(t.y),
                fmt17(self.curvatures[i])
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn cumulative_arclength(v: &[Point2]) -> Vec<f64> {
    let mut s = 0.0;
    let mut out = Vec::with_capacity(v.len());
    for (i, p) in v.iter().enumerate() {
        if i > 0 {
            s += p.dist(v[i - 1]);
        }
        out.push(s);
    }
    out
}

/// Signed curvature (γ̇ × γ̈)/|γ̇|³.
pub fn signed_curvature(d1: Vec2, d2: Vec2) -> f64 {
    d1.cross(d2) / d1.norm().powi(3)
}

/// κ = |γ̇ × γ̈|/|γ̇|³ for a parametrized curve.
pub fn curvature_at(d1: Vec2, d2: Vec2) -> Result<f64> {
    let speed = d1.norm();
    if speed < 1e-12 {
        return Err(Error::SingularParametrization(speed));
    }
    Ok(signed_curvature(d1, d2).abs())
}

/// Curvature of the circle through three points, signed by turning direction.
pub fn menger_curvature(p0: Point2, p1: Point2, p2: Point2) -> f64 {
    let (u, v) = (p1 - p0, p2 - p1);
    let denom = u.norm() * v.norm() * (p2 - p0).norm();
    if denom == 0.0 {
        0.0
    } else {
        2.0 * u.cross(v) / denom
    }
}

/// Finite-difference curvature of a polyline at vertex `i` (arclength-based).
pub fn polyline_curvature(curve: &PolyCurve, i: usize) -> Result<f64> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::Precondition("curvature needs at least three vertices".into()));
    }
    let i = i.clamp(1, n - 2);
    let (p0, p1, p2) = (curve.vertices[i - 1], curve.vertices[i], curve.vertices[i + 1]);
    let h = p0.dist(p1).min(p1.dist(p2));
    if h < 1e-12 {
        return Err(Error::SingularParametrization(h));
    }
    Ok(menger_curvature(p0, p1, p2).abs())
}

// ---------------------------------------------------------------------------
// Intersections and clearance
// ---------------------------------------------------------------------------

const CHUNK: usize = 32;

#[derive(Clone, Copy, Debug)]
struct Chunk {
    curve: usize,
    /// Segments `seg_lo..seg_hi` (vertex `seg_hi` included).
    seg_lo: usize,
    seg_hi: usize,
    lo: Point2,
    hi: Point2,
}

impl Chunk {
    fn box_distance(&self, o: &Chunk) -> f64 {
        let dx = (o.lo.x - self.hi.x).max(self.lo.x - o.hi.x).max(0.0);
        let dy = (o.lo.y - self.hi.y).max(self.lo.y - o.hi.y).max(0.0);
        dx.hypot(dy)
    }

    fn point_distance(&self, p: Point2) -> f64 {
        let dx = (self.lo.x - p.x).max(p.x - self.hi.x).max(0.0);
        let dy = (self.lo.y - p.y).max(p.y - self.hi.y).max(0.0);
        dx.hypot(dy)
    }
}

/// Segment-chunk index over a set of polylines.
pub struct CurveIndex<'a> {
    curves: &'a [PolyCurve],
    chunks: Vec<Chunk>,
}

impl<'a> CurveIndex<'a> {
    pub fn new(curves: &'a [PolyCurve]) -> Self {
        let mut chunks = Vec::new();
        for (ci, c) in curves.iter().enumerate() {
            if c.len() < 2 {
                continue;
            }
            let nseg = c.len() - 1;
            let mut s = 0;
            while s < nseg {
                let e = (s + CHUNK).min(nseg);
                let pts = &c.vertices[s..=e];
                let (lo, hi) = crate::geometry::bbox(pts).expect("non-empty");
                chunks.push(Chunk { curve: ci, seg_lo: s, seg_hi: e, lo, hi });
                s = e;
            }
        }
        Self { curves, chunks }
    }

    /// Nearest point of the indexed set to `p`: (distance, curve, segment, foot parameter).
    pub fn nearest(&self, p: Point2) -> Option<(f64, usize, usize, f64)> {
        let mut order: Vec<(f64, usize)> =
            self.chunks.iter().enumerate().map(|(i, c)| (c.point_distance(p), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for (lb, ci) in order {
            if best.is_some_and(|b| lb >= b.0) {
                break;
            }
            let ch = &self.chunks[ci];
            let v = &self.curves[ch.curve].vertices;
            for s in ch.seg_lo..ch.seg_hi {
                let (d, t) = point_segment_distance(p, v[s], v[s + 1]);
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, ch.curve, s, t));
                }
            }
        }
        best
    }

    pub fn distance(&self, p: Point2) -> f64 {
        self.nearest(p).map_or(f64::INFINITY, |n| n.0)
    }

    fn foot(&self, curve: usize, seg: usize, t: f64) -> Point2 {
        let v = &self.curves[curve].vertices;
        v[seg].lerp(v[seg + 1], t)
    }
}

/// One transversal intersection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub x: f64,
    pub y: f64,
    /// Angle between the two segment directions, in [0, π/2].
    pub angle: f64,
    pub a_curve: usize,
    pub a_segment: usize,
    pub a_t: f64,
    pub b_curve: usize,
    pub b_segment: usize,
    pub b_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub points: Vec<CrossingPoint>,
    pub count: usize,
    /// Positive: minimal distance. Negative: deepest penetration, negated.
    pub min_clearance: f64,
    /// Closest (or deepest) pair realising `min_clearance`, first on A then on B.
    pub witness: Option<(Point2, Point2)>,
}

/// Crossings of two single polylines.
pub fn crossings(a: &PolyCurve, b: &PolyCurve) -> CrossingReport {
    crossings_sets(std::slice::from_ref(a), std::slice::from_ref(b))
}

/// Crossings between two families of polylines (e.g. clipped manifold arcs).
pub fn crossings_sets(a: &[PolyCurve], b: &[PolyCurve]) -> CrossingReport {
    let ia = CurveIndex::new(a);
    let ib = CurveIndex::new(b);
    let points = intersections(&ia, &ib);
    let count = points.len();
    let (min_clearance, witness) = if count == 0 {
        separation(&ia, &ib)
    } else {
        let (da, wa) = penetration(&ia, &ib, &points, false);
        let (db, wb) = penetration(&ib, &ia, &points, true);
        if da >= db {
            (-da, wa)
        } else {
            (-db, wb.map(|(p, q)| (q, p)))
        }
    };
    CrossingReport { points, count, min_clearance, witness }
}

fn intersections(ia: &CurveIndex, ib: &CurveIndex) -> Vec<CrossingPoint> {
    let mut out = Vec::new();
    for ca in &ia.chunks {
        for cb in &ib.chunks {
            if ca.box_distance(cb) > 0.0 {
                continue;
            }
            let va = &ia.curves[ca.curve].vertices;
            let vb = &ib.curves[cb.curve].vertices;
            for i in ca.seg_lo..ca.seg_hi {
                let (p, p2) = (va[i], va[i + 1]);
                let d1 = p2 - p;
                for j in cb.seg_lo..cb.seg_hi {
                    let (q, q2) = (vb[j], vb[j + 1]);
                    let d2 = q2 - q;
                    let denom = d1.cross(d2);
                    if denom == 0.0 {
                        continue;
                    }
                    let w = q - p;
                    let t = w.cross(d2) / denom;
                    let u = w.cross(d1) / denom;
                    // Half-open so a crossing through a shared vertex counts once.
                    if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
                        let x = p + d1 * t;
                        out.push(CrossingPoint {
                            x: x.x,
                            y: x.y,
                            angle: d1.line_angle(d2),
                            a_curve: ca.curve,
                            a_segment: i,
                            a_t: t,
                            b_curve: cb.curve,
                            b_segment: j,
                            b_t: u,
                        });
                    }
                }
            }
        }
    }
    out.sort_by(|p, q| {
        (p.a_curve, p.a_segment).cmp(&(q.a_curve, q.a_segment)).then(p.a_t.total_cmp(&q.a_t))
    });
    out
}

/// Quadratic refinement of an extremum of vertex distances d(s) sampled at
/// three consecutive arclength positions.
fn quadratic_extremum(s: [f64; 3], d: [f64; 3]) -> Option<f64> {
    let (h0, h1) = (s[1] - s[0], s[2] - s[1]);
    if h0 <= 0.0 || h1 <= 0.0 {
        return None;
    }
    let (m0, m1) = ((d[1] - d[0]) / h0, (d[2] - d[1]) / h1);
    let c2 = (m1 - m0) / (h0 + h1);
    if c2 == 0.0 {
        return None;
    }
    // d(s) = d1 + c1 (s − s1) + c2 (s − s1)² around the middle sample.
    let c1 = (m0 * h1 + m1 * h0) / (h0 + h1);
    let ds = -c1 / (2.0 * c2);
    if ds < -h0 || ds > h1 {
        return None;
    }
    Some(d[1] - c1 * c1 / (4.0 * c2))
}

fn refined_distance(curve: &PolyCurve, i: usize, other: &CurveIndex, d_i: f64, minimise: bool) -> f64 {
    if i == 0 || i + 1 >= curve.len() {
        return d_i;
    }
    let d0 = other.distance(curve.vertices[i - 1]);
    let d2 = other.distance(curve.vertices[i + 1]);
    let s = [curve.param[i - 1], curve.param[i], curve.param[i + 1]];
    match quadratic_extremum(s, [d0, d_i, d2]) {
        Some(v) if minimise && v < d_i && d0 >= d_i && d2 >= d_i => v.max(0.0),
        Some(v) if !minimise && v > d_i && d0 <= d_i && d2 <= d_i => v,
        _ => d_i,
    }
}

type Witness = Option<(Point2, Point2)>;

#[allow(clippy::needless_range_loop)]
fn separation(ia: &CurveIndex, ib: &CurveIndex) -> (f64, Witness) {
    if ia.chunks.is_empty() || ib.chunks.is_empty() {
        return (f64::INFINITY, None);
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(ia.chunks.len() * ib.chunks.len());
    for (i, ca) in ia.chunks.iter().enumerate() {
        for (j, cb) in ib.chunks.iter().enumerate() {
            pairs.push((ca.box_distance(cb), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    // Best vertex-to-segment candidate in each direction: (distance, curve, vertex, foot).
    let mut best = [(f64::INFINITY, 0, 0, Point2::default()); 2];
    for (lb, i, j) in pairs {
        if lb >= best[0].0.min(best[1].0) {
            break;
        }
        let (ca, cb) = (&ia.chunks[i], &ib.chunks[j]);
        let va = &ia.curves[ca.curve].vertices;
        let vb = &ib.curves[cb.curve].vertices;
        for k in ca.seg_lo..=ca.seg_hi {
            for s in cb.seg_lo..cb.seg_hi {
                let (d, t) = point_segment_distance(va[k], vb[s], vb[s + 1]);
                if d < best[0].0 {
                    best[0] = (d, ca.curve, k, vb[s].lerp(vb[s + 1], t));
                }
            }
        }
        for k in cb.seg_lo..=cb.seg_hi {
            for s in ca.seg_lo..ca.seg_hi {
                let (d, t) = point_segment_distance(vb[k], va[s], va[s + 1]);
                if d < best[1].0 {
                    best[1] = (d, cb.curve, k, va[s].lerp(va[s + 1], t));
                }
            }
        }
    }
    let mut out = (f64::INFINITY, None);
    for (side, &(d, c, k, foot)) in best.iter().enumerate() {
        if !d.is_finite() {
            continue;
        }
        let (curve, other) = if side == 0 { (&ia.curves[c], ib) } else { (&ib.curves[c], ia) };
        let refined = refined_distance(curve, k, other, d, true);
        let v = curve.vertices[k];
        if refined < out.0 {
            out = (refined, Some(if side == 0 { (v, foot) } else { (foot, v) }));
        }
    }
    out
}

/// Deepest excursion of `ia` across `ib` between consecutive crossings.
/// Intervals alternate sides starting from the side of each curve's first
/// vertex; only the far-side intervals count as penetration.
fn penetration(ia: &CurveIndex, ib: &CurveIndex, points: &[CrossingPoint], swapped: bool) -> (f64, Witness) {
    let key = |p: &CrossingPoint| {
        if swapped {
            (p.b_curve, p.b_segment, p.b_t)
        } else {
            (p.a_curve, p.a_segment, p.a_t)
        }
    };
    let mut keys: Vec<(usize, usize, f64)> = points.iter().map(key).collect();
    keys.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)).then(p.2.total_cmp(&q.2)));
    let mut best = (0.0_f64, None);
    let mut idx = 0;
    while idx < keys.len() {
        let c = keys[idx].0;
        let run: Vec<(usize, f64)> = keys[idx..].iter().take_while(|k| k.0 == c).map(|k| (k.1, k.2)).collect();
        idx += run.len();
        let curve = &ia.curves[c];
        for pair in run.chunks(2) {
            if pair.len() < 2 {
                break;
            }
            let (lo, hi) = (pair[0].0 + 1, pair[1].0);
            let mut local: Option<(f64, usize, Point2)> = None;
            for k in lo..=hi.min(curve.len() - 1) {
                if let Some((d, bc, bs, bt)) = ib.nearest(curve.vertices[k]) {
                    if local.is_none_or(|l| d > l.0) {
                        local = Some((d, k, ib.foot(bc, bs, bt)));
                    }
                }
            }
            if let Some((d, k, foot)) = local {
                let d = refined_distance(curve, k, ib, d, false);
                if d > best.0 {
                    best = (d, Some((curve.vertices[k], foot)));
                }
            }
        }
    }
    best
}

/// Largest distance from any point of `points` to the indexed set.
pub fn directed_hausdorff(points: &[Point2], target: &CurveIndex) -> f64 {
    points.iter().map(|p| target.distance(*p)).fold(0.0, f64::max)
}
