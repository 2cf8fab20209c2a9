//! Growth of compact stable/unstable manifold pieces as adaptive polylines.
//!
//! A generation maps every arc of the previous one (forward for unstable,
//! backward for stable manifolds), subdividing preimage segments by cubic
//! Hermite interpolation until the image meets the spacing and turning
//! tolerances. Vertices leaving the window are dropped; since W^u and W^s
//! cannot re-enter R̂ from the escape regions this clipping is exact there.

use serde::{Deserialize, Serialize};

use crate::curve::{signed_curvature, PolyCurve, Refinement};
use crate::error::{Error, Result};
use crate::fixed_points::{local_manifold_seed, FixedPointData, ManifoldKind};
use crate::geometry::{Hessian2, Jacobian2, Point2, Rect, Vec2};
use crate::map_core::{step_jet, Direction, PlanarMap};

const MAX_DEPTH: u32 = 60;
const MAX_GENERATIONS: usize = 200;
const PRIMARY_CAP: f64 = 20.0;
/// Fold tips thinner than this fraction of the spacing are not resolved in angle.
const MIN_SPACING_FACTOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Both branches through the fixed point.
    Both,
    /// The branch along +eigenvector.
    Plus,
    /// The branch along −eigenvector.
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    /// Per-branch arclength cap, measured from the fixed point along in-window arcs.
    pub max_arclength: f64,
    pub window: Rect,
    pub refinement: Refinement,
    pub max_generations: usize,
    pub seed_half_length: f64,
    pub side: Side,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            max_arclength: f64::INFINITY,
            window: Rect::R_HAT,
            refinement: Refinement::default(),
            max_generations: MAX_GENERATIONS,
            seed_half_length: 0.05,
            side: Side::Both,
        }
    }
}

/// A manifold piece: clipped arcs in branch order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifold {
    pub arcs: Vec<PolyCurve>,
    pub kind: ManifoldKind,
    pub generations: usize,
}

impl Manifold {
    pub fn arclength(&self) -> f64 {
        self.arcs.iter().map(PolyCurve::arclength).sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.arcs.iter().map(PolyCurve::len).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Point2> {
        self.arcs.iter().flat_map(|a| a.vertices.iter())
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    p: Point2,
    t: Vec2,
    k: f64,
}

#[derive(Clone, Copy, Debug)]
struct Image {
    node: Node,
    finite: bool,
}

fn push_forward(map: &(impl PlanarMap + ?Sized), n: Node, dir: Direction) -> Result<Image> {
    let (w, j, h) = step_jet(map, n.p, dir)?;
    Ok(image_node(w, &j, &h, n))
}

/// Tangent and curvature of the image of a unit-speed curve through `n`.
fn image_node(w: Point2, j: &Jacobian2, h: &Hessian2, n: Node) -> Image {
    let d1 = j.apply(n.t);
    let d2 = h.apply(n.t, n.t) + j.apply(n.t.perp() * n.k);
    let finite = w.is_finite() && d1.norm().is_finite() && d1.norm() > 0.0;
    let node = if finite {
        Node { p: w, t: d1.normalized(), k: signed_curvature(d1, d2) }
    } else {
        Node { p: w, t: Vec2::new(1.0, 0.0), k: 0.0 }
    };
    Image { node, finite }
}

/// Cubic Hermite patch between two oriented vertices.
fn hermite(a: Node, b: Node, s: f64) -> Node {
    let l = a.p.dist(b.p);
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let p = Point2::new(
        h00 * a.p.x + h10 * l * a.t.x + h01 * b.p.x + h11 * l * b.t.x,
        h00 * a.p.y + h10 * l * a.t.y + h01 * b.p.y + h11 * l * b.t.y,
    );
    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = -6.0 * s2 + 6.0 * s;
    let d11 = 3.0 * s2 - 2.0 * s;
    let e00 = 12.0 * s - 6.0;
    let e10 = 6.0 * s - 4.0;
    let e01 = -12.0 * s + 6.0;
    let e11 = 6.0 * s - 2.0;
    let dv = |c0: f64, c1: f64, c2: f64, c3: f64| {
        Vec2::new(
            c0 * a.p.x + c1 * l * a.t.x + c2 * b.p.x + c3 * l * b.t.x,
            c0 * a.p.y + c1 * l * a.t.y + c2 * b.p.y + c3 * l * b.t.y,
        )
    };
    let d1 = dv(d00, d10, d01, d11);
    let d2 = dv(e00, e10, e01, e11);
    if d1.norm() == 0.0 {
        return Node { p, t: a.t, k: a.k };
    }
    Node { p, t: d1.normalized(), k: signed_curvature(d1, d2) }
}

struct Mapper<'a, M: PlanarMap + ?Sized> {
    map: &'a M,
    dir: Direction,
    window: Rect,
    tol: Refinement,
    budget: usize,
    emitted: usize,
}

impl<M: PlanarMap + ?Sized> Mapper<'_, M> {
    fn needs_split(&self, i0: &Image, i1: &Image) -> bool {
        if !(i0.finite && i1.finite) {
            return false;
        }
        let d = i0.node.p.dist(i1.node.p);
        let turning = d > MIN_SPACING_FACTOR * self.tol.max_spacing
            && i0.node.t.signed_angle_to(i1.node.t).abs() > self.tol.max_turn;
        if d <= self.tol.max_spacing && !turning {
            return false;
        }
        // Far outside the window and short: irrelevant.
        self.window.distance(i0.node.p) <= d || self.window.distance(i1.node.p) <= d
    }

    fn refine(
        &mut self,
        a: Node,
        b: Node,
        span: (f64, f64),
        ends: (Image, Image),
        depth: u32,
        out: &mut Vec<Image>,
    ) -> Result<()> {
        let (s0, s1) = span;
        let (i0, i1) = ends;
        if depth < MAX_DEPTH && self.needs_split(&i0, &i1) {
            let sm = 0.5 * (s0 + s1);
            let im = push_forward(self.map, hermite(a, b, sm), self.dir)?;
            self.refine(a, b, (s0, sm), (i0, im), depth + 1, out)?;
            self.refine(a, b, (sm, s1), (im, i1), depth + 1, out)?;
        } else {
            self.emitted += 1;
            if self.emitted > self.budget {
                return Err(Error::RefinementBudget(self.emitted));
            }
            out.push(i1);
        }
        Ok(())
    }

    fn map_arc(&mut self, arc: &PolyCurve, out: &mut Vec<PolyCurve>) -> Result<()> {
        if arc.len() < 2 {
            return Ok(());
        }
        let nodes: Vec<Node> = (0..arc.len())
            .map(|i| Node { p: arc.vertices[i], t: arc.tangents[i], k: arc.curvatures[i] })
            .collect();
        let mut images = vec![push_forward(self.map, nodes[0], self.dir)?];
        let mut prev = images[0];
        for w in nodes.windows(2) {
            let next = push_forward(self.map, w[1], self.dir)?;
            let start = images.len();
            self.refine(w[0], w[1], (0.0, 1.0), (prev, next), 0, &mut images)?;
            debug_assert!(images.len() > start);
            prev = next;
        }
        split_inside(&images, &self.window, &arc.tag, out);
        Ok(())
    }
}

fn split_inside(images: &[Image], window: &Rect, tag: &str, out: &mut Vec<PolyCurve>) {
    let mut run: Vec<Node> = Vec::new();
    let flush = |run: &mut Vec<Node>, out: &mut Vec<PolyCurve>| {
        if run.len() >= 2 {
            out.push(PolyCurve::new(
                run.iter().map(|n| n.p).collect(),
                run.iter().map(|n| n.t).collect(),
                run.iter().map(|n| n.k).collect(),
                tag,
            ));
        }
        run.clear();
    };
    for im in images {
        if im.finite && window.contains(im.node.p) {
            if run.last().is_some_and(|l| l.p == im.node.p) {
                continue;
            }
            run.push(im.node);
        } else {
            flush(&mut run, out);
        }
    }
    flush(&mut run, out);
}

/// Map every arc one step, refining and clipping to the window.
pub fn map_arcs<M: PlanarMap + ?Sized>(
    map: &M,
    arcs: &[PolyCurve],
    dir: Direction,
    window: &Rect,
    tol: &Refinement,
) -> Result<Vec<PolyCurve>> {
    let mut mapper = Mapper { map, dir, window: *window, tol: *tol, budget: tol.vertex_cap, emitted: 0 };
    let mut out = Vec::new();
    for arc in arcs {
        mapper.map_arc(arc, &mut out)?;
    }
    Ok(out)
}

/// Restrict arcs to a window, splitting where they leave it.
pub fn clip_arcs(arcs: &[PolyCurve], window: &Rect) -> Vec<PolyCurve> {
    let mut out = Vec::new();
    for arc in arcs {
        let images: Vec<Image> = (0..arc.len())
            .map(|i| Image {
                node: Node { p: arc.vertices[i], t: arc.tangents[i], k: arc.curvatures[i] },
                finite: true,
            })
            .collect();
        split_inside(&images, window, &arc.tag, &mut out);
    }
    out
}

fn seed_for(fp: &FixedPointData, kind: ManifoldKind, cfg: &GrowthConfig) -> Result<PolyCurve> {
    let full = local_manifold_seed(fp, kind, cfg.seed_half_length)?;
    let mid = full.len() / 2;
    Ok(match cfg.side {
        Side::Both => full,
        Side::Plus => full.slice(mid, full.len() - 1),
        Side::Minus => full.slice(0, mid).reversed(),
    })
}

/// Locate the fixed point among the arcs: (arc, vertex).
fn locate(arcs: &[PolyCurve], p: Point2) -> Option<(usize, usize)> {
    locate_within(arcs, p, 1e-9)
}

fn locate_within(arcs: &[PolyCurve], p: Point2, tol: f64) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (a, arc) in arcs.iter().enumerate() {
        for (i, v) in arc.vertices.iter().enumerate() {
            let d = v.dist(p);
            if best.is_none_or(|b| d < b.0) {
                best = Some((d, a, i));
            }
        }
    }
    best.filter(|b| b.0 < tol).map(|b| (b.1, b.2))
}

/// Pin the image of the fixed point back onto it; backward iteration would
/// otherwise amplify its rounding error along the manifold.
fn snap(arcs: &mut [PolyCurve], p: Point2) {
    if let Some((a, i)) = locate_within(arcs, p, 1e-8) {
        arcs[a].vertices[i] = p;
    }
}

/// Keep at most `cap` arclength on each side of the fixed point.
fn truncate(arcs: Vec<PolyCurve>, fp: Point2, cap: f64) -> Vec<PolyCurve> {
    if !cap.is_finite() {
        return arcs;
    }
    let Some((a0, i0)) = locate(&arcs, fp) else {
        return arcs;
    };
    // Forward side: from (a0, i0) to the end of the list.
    let mut forward = Vec::new();
    let mut budget = cap;
    for (a, arc) in arcs.iter().enumerate().skip(a0) {
        let start = if a == a0 { i0 } else { 0 };
        let base = arc.param[start];
        let end = arc.param.partition_point(|&s| s - base <= budget).max(start + 1);
        if end - start >= 2 {
            forward.push(arc.slice(start, end - 1));
        }
        budget -= arc.param[end - 1] - base;
        if end < arc.len() || budget <= 0.0 {
            break;
        }
    }
    // Backward side, walking toward the start of the list.
    let mut backward = Vec::new();
    let mut budget = cap;
    for a in (0..=a0).rev() {
        let arc = &arcs[a];
        let stop = if a == a0 { i0 } else { arc.len() - 1 };
        let top = arc.param[stop];
        let begin = arc.param[..=stop].partition_point(|&s| top - s > budget).min(stop);
        if stop - begin >= 1 {
            backward.push(arc.slice(begin, stop));
        }
        budget -= top - arc.param[begin];
        if begin > 0 || budget <= 0.0 {
            break;
        }
    }
    backward.reverse();
    // Re-join the two halves that share the fixed-point vertex.
    if let (Some(last), Some(first)) = (backward.last_mut(), forward.first()) {
        if last.vertices.last() == first.vertices.first() {
            let mut v = last.vertices.clone();
            let mut t = last.tangents.clone();
            let mut k = last.curvatures.clone();
            v.extend_from_slice(&first.vertices[1..]);
            t.extend_from_slice(&first.tangents[1..]);
            k.extend_from_slice(&first.curvatures[1..]);
            *last = PolyCurve::new(v, t, k, first.tag.clone());
            forward.remove(0);
        }
    }
    backward.extend(forward);
    backward
}

/// Grow a manifold of `fp` under the configuration.
pub fn grow<M: PlanarMap + ?Sized>(
    map: &M,
    fp: &FixedPointData,
    kind: ManifoldKind,
    cfg: &GrowthConfig,
) -> Result<Manifold> {
    let dir = match kind {
        ManifoldKind::Unstable => Direction::Forward,
        ManifoldKind::Stable => Direction::Backward,
    };
    let (lambda, _) = fp.eigen(kind);
    // A single branch flips sides under a negative eigenvalue: use the square.
    let steps = if cfg.side != Side::Both && lambda < 0.0 { 2 } else { 1 };
    let mut arcs = vec![seed_for(fp, kind, cfg)?];
    arcs = truncate(arcs, fp.location, cfg.max_arclength);
    let mut generations = 0;
    let mut length = arcs.iter().map(PolyCurve::arclength).sum::<f64>();
    while generations < cfg.max_generations {
        let mut next = arcs.clone();
        for _ in 0..steps {
            next = map_arcs(map, &next, dir, &cfg.window, &cfg.refinement)?;
            snap(&mut next, fp.location);
        }
        next = truncate(next, fp.location, cfg.max_arclength);
        let new_length: f64 = next.iter().map(PolyCurve::arclength).sum();
        generations += 1;
        let grew = new_length > length * (1.0 + 1e-9) + 1e-12;
        arcs = next;
        length = new_length;
        if !grew {
            break;
        }
    }
    let tag = format!(
        "W{}({:?})",
        if kind == ManifoldKind::Stable { "s" } else { "u" },
        fp.label
    );
    for a in &mut arcs {
        a.tag.clone_from(&tag);
    }
    Ok(Manifold { arcs, kind, generations })
}

pub fn grow_unstable<M: PlanarMap + ?Sized>(map: &M, fp: &FixedPointData, cfg: &GrowthConfig) -> Result<Manifold> {
    grow(map, fp, ManifoldKind::Unstable, cfg)
}

pub fn grow_stable<M: PlanarMap + ?Sized>(map: &M, fp: &FixedPointData, cfg: &GrowthConfig) -> Result<Manifold> {
    grow(map, fp, ManifoldKind::Stable, cfg)
}

/// The connected component through the fixed point of its manifold inside the
/// window, grown until it stops lengthening or reaches `PRIMARY_CAP` per side.
pub fn primary_arc<M: PlanarMap + ?Sized>(
    map: &M,
    fp: &FixedPointData,
    kind: ManifoldKind,
    window: &Rect,
    tol: &Refinement,
) -> Result<PolyCurve> {
    let cfg = GrowthConfig { max_arclength: PRIMARY_CAP, window: *window, refinement: *tol, ..GrowthConfig::default() };
    let m = grow(map, fp, kind, &cfg)?;
    let (a, _) = locate(&m.arcs, fp.location)
        .ok_or_else(|| Error::Construction("fixed point lost while growing primary arc".into()))?;
    Ok(m.arcs[a].clone())
}

/// The outer fold-side leaf of W^s(fp) near (1, 0): starting from the primary
/// stable arc, pull back its left half `generations` times, then keep the
/// right half. For Q the sequence is stationary; for P it accumulates on
/// the corresponding leaf of W^s(Q) from the inside.
pub fn stable_leaf<M: PlanarMap + ?Sized>(
    map: &M,
    fp: &FixedPointData,
    generations: usize,
    tol: &Refinement,
) -> Result<Vec<PolyCurve>> {
    let window = Rect::R_HAT;
    let left = Rect::new(window.x_min, 0.0, window.y_min, window.y_max);
    let right = Rect::new(0.0, window.x_max, window.y_min, window.y_max);
    let mut arcs = vec![primary_arc(map, fp, ManifoldKind::Stable, &window, tol)?];
    for _ in 0..generations {
        let l = clip_arcs(&arcs, &left);
        arcs = map_arcs(map, &l, Direction::Backward, &window, tol)?;
    }
    let mut out = clip_arcs(&arcs, &right);
    for a in &mut out {
        a.tag = format!("Gamma_s({:?})", fp.label);
    }
    Ok(out)
}
