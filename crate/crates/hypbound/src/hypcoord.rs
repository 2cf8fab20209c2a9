//! Hyperbolic coordinates of order k: the most contracted and most expanded
//! directions of Df^k, and leaves of the finite-order stable foliation.

use serde::{Deserialize, Serialize};

use crate::curve::{CurveIndex, PolyCurve};
use crate::error::{Error, Result};
use crate::geometry::{Jacobian2, Point2, Vec2};
use crate::map_core::PlanarMap;

/// |log H| below this means the two singular values coincide.
pub const DEGENERATE_LOG_H: f64 = 1e-12;

/// Orders up to this are cross-checked against the closed-form angle on the raw product.
pub const DIRECT_CHECK_MAX_ORDER: usize = 6;

const ORBIT_BOUND: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicFrame {
    pub order: usize,
    /// Most contracted unit direction, in the closed upper half circle.
    pub e_k: Vec2,
    /// Most expanded unit direction, e_k turned clockwise by π/2.
    pub f_k: Vec2,
    #[serde(rename = "logE")]
    pub log_e: f64,
    #[serde(rename = "logF")]
    pub log_f: f64,
    #[serde(rename = "logH")]
    pub log_h: f64,
    /// Angle between e_k and the closed-form direction of the raw product (orders ≤ 6).
    pub direct_check: Option<f64>,
}

/// Df^k at z as a normalized matrix times exp(log_scale), with ln|det Df^k|.
#[derive(Clone, Copy, Debug)]
pub struct ScaledProduct {
    pub matrix: Jacobian2,
    pub log_scale: f64,
    pub log_det: f64,
}

/// Accumulate Df^k along the orbit of z, renormalizing after every step.
pub fn scaled_product<M: PlanarMap + ?Sized>(map: &M, z: Point2, k: usize) -> Result<ScaledProduct> {
    let mut m = Jacobian2::IDENTITY;
    let (mut log_scale, mut log_det) = (0.0, 0.0);
    let mut u = z;
    for i in 0..k {
        if !(u.is_finite() && u.x.abs() <= ORBIT_BOUND && u.y.abs() <= ORBIT_BOUND) {
            return Err(Error::OrbitEscaped(i));
        }
        let j = map.jacobian(u);
        log_det += j.det().abs().ln();
        m = j.mul(&m);
        let s = m.max_abs();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::OrbitEscaped(i));
        }
        m = m.scale(1.0 / s);
        log_scale += s.ln();
        u = map.apply(u);
    }
    Ok(ScaledProduct { matrix: m, log_scale, log_det })
}

/// Angle θ of the most expanded direction: tan 2θ = 2(AB + CD)/(A² + C² − B² − D²).
pub fn contdir_angle(m: &Jacobian2) -> f64 {
    let [[a, b], [c, d]] = m.0;
    0.5 * (2.0 * (a * b + c * d)).atan2(a * a + c * c - b * b - d * d)
}

fn direction_from_expanded(theta: f64) -> (Vec2, Vec2) {
    let e = Vec2::new(-theta.sin(), theta.cos()).upper_half();
    (e, Vec2::new(e.y, -e.x))
}

/// Hyperbolic frame of order k at z.
pub fn frame<M: PlanarMap + ?Sized>(map: &M, z: Point2, k: usize) -> Result<HyperbolicFrame> {
    if k == 0 {
        return Err(Error::Precondition("frame order must be at least 1".into()));
    }
    let sp = scaled_product(map, z, k)?;
    let (s_max, _) = sp.matrix.singular_values();
    let log_f = sp.log_scale + s_max.ln();
    let log_e = sp.log_det - log_f;
    let log_h = log_e - log_f;
    if log_h.abs() < DEGENERATE_LOG_H {
        return Err(Error::Degenerate(log_h.abs()));
    }
    let (e_k, f_k) = direction_from_expanded(contdir_angle(&sp.matrix));
    let direct_check = (k <= DIRECT_CHECK_MAX_ORDER).then(|| {
        let mut raw = Jacobian2::IDENTITY;
        let mut u = z;
        for _ in 0..k {
            raw = map.jacobian(u).mul(&raw);
            u = map.apply(u);
        }
        let (e_raw, _) = direction_from_expanded(contdir_angle(&raw));
        e_raw.line_angle(e_k)
    });
    Ok(HyperbolicFrame { order: k, e_k, f_k, log_e, log_f, log_h, direct_check })
}

/// A leaf of the order-k stable foliation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoliationLeaf {
    pub order: usize,
    pub seed: Point2,
    pub curve: PolyCurve,
}

/// e_k at z, oriented to agree with `along`. None where the field stops.
fn aligned_field<M: PlanarMap + ?Sized>(map: &M, z: Point2, k: usize, along: Vec2) -> Option<Vec2> {
    let e = frame(map, z, k).ok()?.e_k;
    Some(if e.dot(along) < 0.0 { -e } else { e })
}

fn rk4_step<M: PlanarMap + ?Sized>(map: &M, z: Point2, k: usize, dir: Vec2, h: f64) -> Option<(Point2, Vec2)> {
    let k1 = aligned_field(map, z, k, dir)?;
    let k2 = aligned_field(map, z + k1 * (h / 2.0), k, k1)?;
    let k3 = aligned_field(map, z + k2 * (h / 2.0), k, k2)?;
    let k4 = aligned_field(map, z + k3 * h, k, k3)?;
    let next = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let t = aligned_field(map, next, k, k4)?;
    Some((next, t))
}

/// Integrate the unit field e_k from `seed` in both directions, up to
/// `arclength` per side, stopping where `domain` fails or the frame degenerates.
pub fn integrate_stable_leaf<M, D>(
    map: &M,
    seed: Point2,
    k: usize,
    arclength: f64,
    step: f64,
    domain: D,
) -> Result<FoliationLeaf>
where
    M: PlanarMap + ?Sized,
    D: Fn(Point2) -> bool,
{
    if !domain(seed) {
        return Err(Error::Precondition(format!("seed ({}, {}) outside the foliation domain", seed.x, seed.y)));
    }
    if !(step > 0.0) {
        return Err(Error::Precondition("integration step must be positive".into()));
    }
    let e0 = frame(map, seed, k)?.e_k;
    let steps = (arclength / step).ceil() as usize;
    let mut sides: [Vec<(Point2, Vec2)>; 2] = [Vec::new(), Vec::new()];
    for (side, start) in sides.iter_mut().zip([e0, -e0]) {
        let (mut z, mut t) = (seed, start);
        for i in 0..steps {
            let h = step.min(arclength - i as f64 * step);
            match rk4_step(map, z, k, t, h) {
                Some((next, nt)) if domain(next) => {
                    side.push((next, nt));
                    (z, t) = (next, nt);
                }
                _ => break,
            }
        }
    }
    let [fwd, bwd] = sides;
    let pts: Vec<(Point2, Vec2)> = bwd
        .into_iter()
        .rev()
        .map(|(p, t)| (p, -t))
        .chain(std::iter::once((seed, e0)))
        .chain(fwd)
        .collect();
    let vertices: Vec<Point2> = pts.iter().map(|p| p.0).collect();
    let tangents: Vec<Vec2> = pts.iter().map(|p| p.1).collect();
    let n = vertices.len();
    let curvatures = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let ds: f64 = vertices[lo].dist(vertices[i]) + vertices[i].dist(vertices[hi]);
            if ds > 0.0 {
                tangents[lo].signed_angle_to(tangents[hi]) / ds
            } else {
                0.0
            }
        })
        .collect();
    Ok(FoliationLeaf { order: k, seed, curve: PolyCurve::new(vertices, tangents, curvatures, format!("leaf_k={k}")) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub k: usize,
    /// Angle between e_k and e_{k+1} at the seed.
    pub angle: f64,
    /// Largest distance from the shorter of the order-k and order-(k+1) leaves to the other.
    pub leaf_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafConvergence {
    pub entries: Vec<ConvergenceEntry>,
    /// Geometric decay ratio of the angles, when at least two resolvable entries exist.
    pub fitted_ratio: Option<f64>,
}

/// Angles below this are at rounding level and excluded from the fit.
const FIT_FLOOR: f64 = 1e-13;

/// Least-squares ratio r of a sequence decaying like C r^k.
pub fn fit_geometric_ratio(ks: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > FIT_FLOOR && v.is_finite())
        .map(|(k, v)| (*k, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mk, mv) = pts.iter().fold((0.0, 0.0), |(a, b), (k, v)| (a + k / n, b + v / n));
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (k, v)| (a + (k - mk) * (v - mv), b + (k - mk).powi(2)));
    Some((num / den).exp())
}

/// Angles and leaf gaps between consecutive orders 1..=k_max at `seed`.
pub fn leaf_convergence<M, D>(map: &M, seed: Point2, k_max: usize, leaf_length: f64, domain: D) -> Result<LeafConvergence>
where
    M: PlanarMap + ?Sized,
    D: Fn(Point2) -> bool + Copy,
{
    let step = leaf_length / 50.0;
    let frames: Vec<HyperbolicFrame> = (1..=k_max + 1).map(|k| frame(map, seed, k)).collect::<Result<_>>()?;
    let leaves: Vec<FoliationLeaf> = (1..=k_max + 1)
        .map(|k| integrate_stable_leaf(map, seed, k, leaf_length, step, domain))
        .collect::<Result<_>>()?;
    let entries: Vec<ConvergenceEntry> = (0..k_max)
        .map(|i| {
            // Leaves may stop at different lengths; measure the shorter against the longer.
            let (a, b) = (&leaves[i].curve, &leaves[i + 1].curve);
            let (short, long) = if a.arclength() <= b.arclength() { (a, b) } else { (b, a) };
            let target = CurveIndex::new(std::slice::from_ref(long));
            ConvergenceEntry {
                k: i + 1,
                angle: frames[i].e_k.line_angle(frames[i + 1].e_k),
                leaf_gap: short.vertices.iter().map(|p| target.distance(*p)).fold(0.0, f64::max),
            }
        })
        .collect();
    let fitted_ratio = if entries.len() < 2 {
        None
    } else {
        let ks: Vec<f64> = entries.iter().map(|e| e.k as f64).collect();
        let angles: Vec<f64> = entries.iter().map(|e| e.angle).collect();
        fit_geometric_ratio(&ks, &angles)
    };
    Ok(LeafConvergence { entries, fitted_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::HenonLikeMap;

    struct Diagonal;

    impl PlanarMap for Diagonal {
        fn apply(&self, z: Point2) -> Point2 {
            Point2::new(3.0 * z.x, 0.1 * z.y)
        }
        fn jacobian(&self, _z: Point2) -> Jacobian2 {
            Jacobian2::new(3.0, 0.0, 0.0, 0.1)
        }
        fn apply_inverse(&self, z: Point2) -> Result<Point2> {
            Ok(Point2::new(z.x / 3.0, 10.0 * z.y))
        }
    }

    #[test]
    fn diagonal_frame() {
        for k in 1..8 {
            let fr = frame(&Diagonal, Point2::new(0.0, 0.0), k).unwrap();
            assert_eq!(fr.e_k, Vec2::new(0.0, 1.0));
            assert!(fr.f_k.x > 0.999_999 && fr.f_k.y.abs() < 1e-12);
            assert!((fr.log_e - k as f64 * 0.1_f64.ln()).abs() < 1e-12);
            assert!((fr.log_f - k as f64 * 3.0_f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_is_degenerate() {
        struct Id;
        impl PlanarMap for Id {
            fn apply(&self, z: Point2) -> Point2 {
                z
            }
            fn jacobian(&self, _z: Point2) -> Jacobian2 {
                Jacobian2::IDENTITY
            }
            fn apply_inverse(&self, z: Point2) -> Result<Point2> {
                Ok(z)
            }
        }
        assert!(matches!(frame(&Id, Point2::new(0.3, 0.2), 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn deep_orders_do_not_underflow() {
        let fr = frame(&Diagonal, Point2::new(0.0, 0.0), 400).unwrap();
        assert!((fr.log_e - 400.0 * 0.1_f64.ln()).abs() < 1e-9);
        assert!((fr.log_h - 400.0 * (0.1_f64 / 3.0).ln()).abs() < 1e-9);
        let f = HenonLikeMap::henon(2.0, 0.05);
        let q = crate::fixed_points::find_fixed_points(&f).unwrap().1;
        let fr = frame(&f, q.location, 20).unwrap();
        assert!((fr.log_e + fr.log_f - 20.0 * 0.05_f64.ln()).abs() < 1e-9);
        assert!((fr.log_f / 20.0 - q.lambda_exp.abs().ln()).abs() < 0.1);
    }

    #[test]
    fn zero_length_leaf_is_a_point() {
        let f = HenonLikeMap::henon(2.0, 0.3);
        let leaf = integrate_stable_leaf(&f, Point2::new(0.4, 0.1), 3, 0.0, 0.01, |_| true).unwrap();
        assert_eq!(leaf.curve.len(), 1);
        assert_eq!(leaf.curve.tag, "leaf_k=3");
    }

    #[test]
    fn single_order_has_no_fit() {
        let f = HenonLikeMap::henon(2.0, 0.3);
        let c = leaf_convergence(&f, Point2::new(0.4, 0.1), 1, 0.01, |_| true).unwrap();
        assert_eq!(c.entries.len(), 1);
        assert!(c.fitted_ratio.is_none());
    }

    #[test]
    fn geometric_fit_is_exact_on_geometric_data() {
        let ks = [1.0, 2.0, 3.0, 4.0];
        let v: Vec<f64> = ks.iter().map(|k| 3.0 * 0.2_f64.powf(*k)).collect();
        assert!((fit_geometric_ratio(&ks, &v).unwrap() - 0.2).abs() < 1e-12);
    }
}
