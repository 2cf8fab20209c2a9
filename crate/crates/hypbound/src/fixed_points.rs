//! The saddle fixed points p and q and their local invariant manifolds.

use serde::{Deserialize, Serialize};

use crate::curve::PolyCurve;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Vec2};
use crate::map_core::{HenonLikeMap, PlanarMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointLabel {
    P,
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// b > 0
    Reversing,
    /// b < 0
    Preserving,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Stable,
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointData {
    pub location: Point2,
    pub lambda_exp: f64,
    pub lambda_con: f64,
    /// Unit eigenvectors with non-negative x component.
    pub e_exp: Vec2,
    pub e_con: Vec2,
    pub label: FixedPointLabel,
    pub orientation: Orientation,
}

impl FixedPointData {
    pub fn eigen(&self, kind: ManifoldKind) -> (f64, Vec2) {
        match kind {
            ManifoldKind::Unstable => (self.lambda_exp, self.e_exp),
            ManifoldKind::Stable => (self.lambda_con, self.e_con),
        }
    }
}

/// Fixed points (p_a, q_a) of x ↦ 1 − a x².
pub fn one_d_fixed_points(a: f64) -> Result<(f64, f64)> {
    let disc = 1.0 + 4.0 * a;
    if disc < 0.0 {
        return Err(Error::ComplexRoots(disc));
    }
    if a == 0.0 {
        return Err(Error::Precondition("a = 0 has a single fixed point".into()));
    }
    let s = disc.sqrt();
    Ok(((-1.0 + s) / (2.0 * a), (-1.0 - s) / (2.0 * a)))
}

/// Roots of a x² + (1 − b) x − 1 = 0, the x-coordinates of the unperturbed fixed points.
fn unperturbed_roots(a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 1.0 - b;
    let disc = c * c + 4.0 * a;
    if disc < 0.0 || a == 0.0 {
        return Err(Error::ComplexRoots(disc));
    }
    let s = disc.sqrt();
    // Cancellation-free pair: the product of the roots is −1/a.
    let q = -(c + s) / (2.0 * a);
    let p = -1.0 / (a * q);
    Ok((p, q))
}

fn newton_fixed_point(map: &HenonLikeMap, seed: Point2) -> Result<Point2> {
    let mut z = seed;
    for _ in 0..50 {
        let r = map.apply(z) - z;
        if r.norm() < 1e-15 {
            return Ok(z);
        }
        let j = map.jacobian(z);
        let m = crate::geometry::Jacobian2::new(j.0[0][0] - 1.0, j.0[0][1], j.0[1][0], j.0[1][1] - 1.0);
        let step = m.inverse().ok_or_else(|| Error::NewtonFailed("singular Jacobian".into()))?.apply(r);
        z = z - step;
        if !z.is_finite() {
            break;
        }
    }
    if z.is_finite() && (map.apply(z) - z).norm() < 1e-12 {
        Ok(z)
    } else {
        Err(Error::NewtonFailed(format!("no convergence from ({}, {})", seed.x, seed.y)))
    }
}

fn classify(map: &HenonLikeMap, location: Point2, label: FixedPointLabel) -> Result<FixedPointData> {
    let j = map.jacobian(location);
    let (l1, l2) = j.real_eigenvalues().ok_or(Error::NotSaddle(f64::NAN, f64::NAN))?;
    if !(l1.abs() > 1.0 && l2.abs() < 1.0) {
        return Err(Error::NotSaddle(l1.abs(), l2.abs()));
    }
    Ok(FixedPointData {
        location,
        lambda_exp: l1,
        lambda_con: l2,
        e_exp: j.eigenvector(l1),
        e_con: j.eigenvector(l2),
        label,
        orientation: if map.b > 0.0 { Orientation::Reversing } else { Orientation::Preserving },
    })
}

/// Locate and classify (P, Q). For φ = 0 the closed form on y = b x is used
/// directly; otherwise it seeds Newton.
pub fn find_fixed_points(map: &HenonLikeMap) -> Result<(FixedPointData, FixedPointData)> {
    let (xp, xq) = unperturbed_roots(map.a, map.b)?;
    let (p, q) = if map.is_unperturbed() {
        (Point2::new(xp, map.b * xp), Point2::new(xq, map.b * xq))
    } else {
        (
            newton_fixed_point(map, Point2::new(xp, map.b * xp))?,
            newton_fixed_point(map, Point2::new(xq, map.b * xq))?,
        )
    };
    let sep = p.dist(q);
    if sep < 1e-8 {
        return Err(Error::PointsCoincide(sep));
    }
    Ok((classify(map, p, FixedPointLabel::P)?, classify(map, q, FixedPointLabel::Q)?))
}

/// Fixed point with the given label.
pub fn fixed_point(map: &HenonLikeMap, label: FixedPointLabel) -> Result<FixedPointData> {
    let (p, q) = find_fixed_points(map)?;
    Ok(match label {
        FixedPointLabel::P => p,
        FixedPointLabel::Q => q,
    })
}

/// Straight segment through the fixed point along an eigenvector, tagged with
/// the kind and the eigenvalue sign.
pub fn local_manifold_seed(fp: &FixedPointData, kind: ManifoldKind, half_length: f64) -> Result<PolyCurve> {
    if !(fp.lambda_exp.abs() > 1.0 && fp.lambda_con.abs() < 1.0) {
        return Err(Error::NotSaddle(fp.lambda_exp.abs(), fp.lambda_con.abs()));
    }
    if !(half_length > 0.0 && half_length <= 0.05) {
        return Err(Error::Precondition(format!("seed half length {half_length} outside (0, 0.05]")));
    }
    let (lambda, e) = fp.eigen(kind);
    let kind_tag = match kind {
        ManifoldKind::Stable => "s",
        ManifoldKind::Unstable => "u",
    };
    let sign = if lambda < 0.0 { "-" } else { "+" };
    let tag = format!("W{kind_tag}_loc({:?}){sign}", fp.label);
    let n = 2 * (half_length / 1e-3).ceil().max(1.0) as usize;
    let mut seed = PolyCurve::segment(fp.location - e * half_length, fp.location + e * half_length, n, tag);
    seed.vertices[n / 2] = fp.location;
    Ok(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_closed_forms() {
        assert_eq!(one_d_fixed_points(2.0).unwrap(), (0.5, -1.0));
        let (p, q) = one_d_fixed_points(3.0).unwrap();
        assert!((p - 0.434259).abs() < 1e-6 && (q + 0.767592).abs() < 1e-6);
        assert!(matches!(one_d_fixed_points(-1.0), Err(Error::ComplexRoots(_))));
    }

    #[test]
    fn henon_fixed_points() {
        let (p, q) = find_fixed_points(&HenonLikeMap::henon(2.0, 0.3)).unwrap();
        assert!((p.location.x - 0.553440).abs() < 1e-6);
        assert!((p.location.y - 0.166032).abs() < 1e-6);
        assert_eq!(q.label, FixedPointLabel::Q);
        let (_, q) = find_fixed_points(&HenonLikeMap::henon(2.0, 0.05)).unwrap();
        assert!((q.location.x + 0.983427).abs() < 1e-6);
        assert!((q.lambda_exp - 3.9463756).abs() < 1e-6);
        assert!((q.lambda_con + 0.0126699).abs() < 1e-6);
    }

    #[test]
    fn seeds_have_limit_slopes() {
        let (p, q) = find_fixed_points(&HenonLikeMap::henon(2.0, 1e-3)).unwrap();
        let sq = local_manifold_seed(&q, ManifoldKind::Stable, 0.05).unwrap();
        assert!((sq.tangents[0].y / sq.tangents[0].x + 4.0).abs() < 0.05);
        let sp = local_manifold_seed(&p, ManifoldKind::Stable, 0.05).unwrap();
        assert!((sp.tangents[0].y / sp.tangents[0].x - 2.0).abs() < 0.05);
        let up = local_manifold_seed(&p, ManifoldKind::Unstable, 0.05).unwrap();
        assert!(up.tangents[0].slope() < 1e-3);
        assert!(sp.tag.ends_with('+') && up.tag.ends_with('-'));
    }
}
