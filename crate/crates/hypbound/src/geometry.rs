//! Plane primitives shared by every module.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }

    pub fn to_vec(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// |dy/dx|; infinite for vertical vectors.
    pub fn slope(self) -> f64 {
        (self.y / self.x).abs()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Unsigned angle between the lines spanned by two vectors, in [0, π/2].
    pub fn line_angle(self, o: Vec2) -> f64 {
        let c = (self.dot(o) / (self.norm() * o.norm())).abs().min(1.0);
        let s = (self.cross(o) / (self.norm() * o.norm())).abs().min(1.0);
        s.atan2(c)
    }

    /// Signed angle from `self` to `o` in (−π, π].
    pub fn signed_angle_to(self, o: Vec2) -> f64 {
        self.cross(o).atan2(self.dot(o))
    }

    /// Representative of the line direction in the closed upper half circle
    /// (second component ≥ 0, ties broken by first component > 0).
    pub fn upper_half(self) -> Vec2 {
        if self.y < 0.0 || (self.y == 0.0 && self.x < 0.0) {
            -self
        } else {
            self
        }
    }
}

impl Add<Vec2> for Point2 {
    type Output = Point2;
    fn add(self, v: Vec2) -> Point2 {
        Point2::new(self.x + v.x, self.y + v.y)
    }
}

impl Sub<Vec2> for Point2 {
    type Output = Point2;
    fn sub(self, v: Vec2) -> Point2 {
        Point2::new(self.x - v.x, self.y - v.y)
    }
}

impl Sub for Point2 {
    type Output = Vec2;
    fn sub(self, o: Point2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2(pub [[f64; 2]; 2]);

impl Jacobian2 {
    pub const IDENTITY: Jacobian2 = Jacobian2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self([[a11, a12], [a21, a22]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        Vec2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
    }

    /// `self · rhs`
    pub fn mul(&self, rhs: &Jacobian2) -> Jacobian2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Jacobian2(out)
    }

    pub fn scale(&self, s: f64) -> Jacobian2 {
        let m = &self.0;
        Jacobian2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn inverse(&self) -> Option<Jacobian2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Jacobian2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    pub fn transpose(&self) -> Jacobian2 {
        let m = &self.0;
        Jacobian2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Singular values (σ_max, σ_min) via the closed form for 2×2 matrices.
    pub fn singular_values(&self) -> (f64, f64) {
        let m = &self.0;
        let fro2 = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
        let d = self.det().abs();
        let disc = (fro2 * fro2 - 4.0 * d * d).max(0.0).sqrt();
        let s_max = ((fro2 + disc) / 2.0).sqrt();
        let s_min = if s_max > 0.0 { d / s_max } else { 0.0 };
        (s_max, s_min)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Real eigenvalues sorted by decreasing modulus, or `None` if complex.
    pub fn real_eigenvalues(&self) -> Option<(f64, f64)> {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // Stable quadratic formula: avoid cancellation in the small root.
        let big = if tr >= 0.0 { (tr + sq) / 2.0 } else { (tr - sq) / 2.0 };
        let small = if big != 0.0 { det / big } else { 0.0 };
        Some((big, small))
    }

    /// Unit eigenvector for a real eigenvalue, oriented with x ≥ 0.
    pub fn eigenvector(&self, lambda: f64) -> Vec2 {
        let m = &self.0;
        let c1 = Vec2::new(m[0][1], lambda - m[0][0]);
        let c2 = Vec2::new(lambda - m[1][1], m[1][0]);
        let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
        let v = if v.norm() == 0.0 { Vec2::new(1.0, 0.0) } else { v.normalized() };
        if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
            -v
        } else {
            v
        }
    }
}

/// Second derivatives of a planar map: `h[i]` is the symmetric Hessian of component i.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Hessian2(pub [[[f64; 2]; 2]; 2]);

impl Hessian2 {
    /// The bilinear form D²f[u, v].
    pub fn apply(&self, u: Vec2, v: Vec2) -> Vec2 {
        let c = |h: &[[f64; 2]; 2]| {
            h[0][0] * u.x * v.x + h[0][1] * u.x * v.y + h[1][0] * u.y * v.x + h[1][1] * u.y * v.y
        };
        Vec2::new(c(&self.0[0]), c(&self.0[1]))
    }
}

/// Axis-aligned open rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max }
    }

    /// The region R̂ = (−2,2)×(−4,2) that contains all compact manifold pieces.
    pub const R_HAT: Rect = Rect::new(-2.0, 2.0, -4.0, 2.0);

    pub fn contains(&self, p: Point2) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > self.y_min && p.y < self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn intersect(&self, o: &Rect) -> Rect {
        Rect::new(
            self.x_min.max(o.x_min),
            self.x_max.min(o.x_max),
            self.y_min.max(o.y_min),
            self.y_max.min(o.y_max),
        )
    }

    /// Euclidean distance from a point to the closed rectangle.
    pub fn distance(&self, p: Point2) -> f64 {
        let dx = (self.x_min - p.x).max(0.0).max(p.x - self.x_max);
        let dy = (self.y_min - p.y).max(0.0).max(p.y - self.y_max);
        dx.hypot(dy)
    }
}

/// Bounding box of a point set as (min corner, max corner).
pub fn bbox(points: &[Point2]) -> Option<(Point2, Point2)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| {
        (
            Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    }))
}

/// Distance from `p` to the segment [a, b] and the parameter of the foot point.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> (f64, f64) {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 > 0.0 { ((p - a).dot(d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.dist(a + d * t), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal() {
        let (s1, s2) = Jacobian2::new(3.0, 0.0, 0.0, 0.1).singular_values();
        assert!((s1 - 3.0).abs() < 1e-15 && (s2 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn eigen_of_henon_jacobian() {
        let x = -0.983427_f64;
        let j = Jacobian2::new(-4.0 * x, 1.0, 0.05, 0.0);
        let (l1, l2) = j.real_eigenvalues().unwrap();
        assert!((l1 * l2 - j.det()).abs() < 1e-15);
        let v = j.eigenvector(l1);
        let w = j.apply(v);
        assert!((w - v * l1).norm() < 1e-12);
    }

    #[test]
    fn upper_half_convention() {
        assert_eq!(Vec2::new(0.3, -0.4).upper_half(), Vec2::new(-0.3, 0.4));
        assert_eq!(Vec2::new(-1.0, 0.0).upper_half(), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn segment_distance() {
        let (d, t) = point_segment_distance(Point2::new(0.5, 1.0), Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15 && (t - 0.5).abs() < 1e-15);
    }
}
