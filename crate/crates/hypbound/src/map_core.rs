//! Hénon-like maps f(x,y) = (1 − a x² + y, b x) + φ(x, y, a) with analytic derivatives.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Hessian2, Jacobian2, Point2, Rect, Vec2};

/// Orbits whose coordinates exceed this are declared escaped.
pub const DEFAULT_BLOW_UP: f64 = 1e6;

const NEWTON_MAX_ITERS: usize = 50;

/// A C² planar diffeomorphism with analytic first and second derivatives.
pub trait PlanarMap: Sync {
    fn apply(&self, z: Point2) -> Point2;
    fn jacobian(&self, z: Point2) -> Jacobian2;
    fn hessian(&self, _z: Point2) -> Hessian2 {
        Hessian2::default()
    }
    fn apply_inverse(&self, z: Point2) -> Result<Point2>;
}

/// Time direction for iteration-based constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Image, derivative and second derivative of one step in the given direction.
///
/// Backward derivatives come from differentiating f ∘ f⁻¹ = id twice.
pub fn step_jet<M: PlanarMap + ?Sized>(
    map: &M,
    z: Point2,
    dir: Direction,
) -> Result<(Point2, Jacobian2, Hessian2)> {
    match dir {
        Direction::Forward => Ok((map.apply(z), map.jacobian(z), map.hessian(z))),
        Direction::Backward => {
            let w = map.apply_inverse(z)?;
            let jf = map.jacobian(w);
            let jg = jf.inverse().ok_or(Error::InverseUndefined)?;
            let hf = map.hessian(w);
            // D²g[u,v] = −Df⁻¹ D²f[Dg u, Dg v]
            let mut h = [[[0.0; 2]; 2]; 2];
            let basis = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
            for (j, ej) in basis.iter().enumerate() {
                for (l, el) in basis.iter().enumerate() {
                    let inner = hf.apply(jg.apply(*ej), jg.apply(*el));
                    let out = jg.apply(inner);
                    h[0][j][l] = -out.x;
                    h[1][j][l] = -out.y;
                }
            }
            Ok((w, jg, Hessian2(h)))
        }
    }
}

/// A registered C² perturbation φ with analytic derivatives.
pub trait Perturbation: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn is_zero(&self) -> bool {
        false
    }
    fn value(&self, x: f64, y: f64, a: f64) -> Vec2;
    /// Rows are components; columns are ∂/∂x, ∂/∂y, ∂/∂a.
    fn gradient(&self, x: f64, y: f64, a: f64) -> [[f64; 3]; 2];
    /// Second derivatives in (x, y) at fixed a.
    fn hessian(&self, x: f64, y: f64, a: f64) -> Hessian2;
    /// Closed-form inverse of the perturbed map, when known.
    fn inverse(&self, _z: Point2, _a: f64, _b: f64) -> Option<Point2> {
        None
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPerturbation;

impl Perturbation for ZeroPerturbation {
    fn name(&self) -> &str {
        "zero"
    }
    fn is_zero(&self) -> bool {
        true
    }
    fn value(&self, _x: f64, _y: f64, _a: f64) -> Vec2 {
        Vec2::default()
    }
    fn gradient(&self, _x: f64, _y: f64, _a: f64) -> [[f64; 3]; 2] {
        [[0.0; 3]; 2]
    }
    fn hessian(&self, _x: f64, _y: f64, _a: f64) -> Hessian2 {
        Hessian2::default()
    }
}

/// φ = s·(sin 3x cos 2y, cos x sin y).
#[derive(Clone, Copy, Debug)]
pub struct BumpPerturbation {
    pub scale: f64,
}

impl Perturbation for BumpPerturbation {
    fn name(&self) -> &str {
        "bump"
    }
    fn value(&self, x: f64, y: f64, _a: f64) -> Vec2 {
        let s = self.scale;
        Vec2::new(s * (3.0 * x).sin() * (2.0 * y).cos(), s * x.cos() * y.sin())
    }
    fn gradient(&self, x: f64, y: f64, _a: f64) -> [[f64; 3]; 2] {
        let s = self.scale;
        [
            [
                3.0 * s * (3.0 * x).cos() * (2.0 * y).cos(),
                -2.0 * s * (3.0 * x).sin() * (2.0 * y).sin(),
                0.0,
            ],
            [-s * x.sin() * y.sin(), s * x.cos() * y.cos(), 0.0],
        ]
    }
    fn hessian(&self, x: f64, y: f64, _a: f64) -> Hessian2 {
        let s = self.scale;
        let h1xx = -9.0 * s * (3.0 * x).sin() * (2.0 * y).cos();
        let h1xy = -6.0 * s * (3.0 * x).cos() * (2.0 * y).sin();
        let h1yy = -4.0 * s * (3.0 * x).sin() * (2.0 * y).cos();
        let h2xx = -s * x.cos() * y.sin();
        let h2xy = -s * x.sin() * y.cos();
        let h2yy = -s * x.cos() * y.sin();
        Hessian2([[[h1xx, h1xy], [h1xy, h1yy]], [[h2xx, h2xy], [h2xy, h2yy]]])
    }
}

/// Look up a shipped perturbation by its registry name.
pub fn perturbation_by_name(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<Arc<dyn Perturbation>> {
    match name {
        "zero" => Ok(Arc::new(ZeroPerturbation)),
        "bump" => Ok(Arc::new(BumpPerturbation {
            scale: params.get("s").copied().unwrap_or(1e-3),
        })),
        other => Err(Error::UnknownPerturbation(other.to_string())),
    }
}

/// Serializable description of one member of the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapParams {
    pub a: f64,
    pub b: f64,
    pub eta_bound: f64,
    pub perturbation: String,
    pub perturbation_params: BTreeMap<String, f64>,
}

impl Default for MapParams {
    fn default() -> Self {
        Self {
            a: 2.0,
            b: 0.05,
            eta_bound: 0.0,
            perturbation: "zero".into(),
            perturbation_params: BTreeMap::new(),
        }
    }
}

impl MapParams {
    pub fn henon(a: f64, b: f64) -> Self {
        Self { a, b, ..Self::default() }
    }
}

#[derive(Clone)]
pub struct HenonLikeMap {
    pub a: f64,
    pub b: f64,
    pub eta_bound: f64,
    pub phi: Arc<dyn Perturbation>,
    pub blow_up: f64,
    params: MapParams,
}

impl fmt::Debug for HenonLikeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HenonLikeMap")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("phi", &self.phi.name())
            .finish()
    }
}

impl HenonLikeMap {
    pub fn from_params(params: &MapParams) -> Result<Self> {
        let phi = perturbation_by_name(&params.perturbation, &params.perturbation_params)?;
        Ok(Self {
            a: params.a,
            b: params.b,
            eta_bound: params.eta_bound,
            phi,
            blow_up: DEFAULT_BLOW_UP,
            params: params.clone(),
        })
    }

    /// The unperturbed Hénon map.
    pub fn henon(a: f64, b: f64) -> Self {
        Self::from_params(&MapParams::henon(a, b)).expect("zero perturbation is registered")
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    /// Same family member with a different parameter a.
    pub fn with_a(&self, a: f64) -> Self {
        let mut m = self.clone();
        m.a = a;
        m.params.a = a;
        m
    }

    pub fn is_unperturbed(&self) -> bool {
        self.phi.is_zero()
    }

    fn unperturbed_inverse(&self, z: Point2) -> Point2 {
        let x = z.y / self.b;
        Point2::new(x, z.x - 1.0 + self.a * x * x)
    }

    /// Iterate |n| steps (backward when n < 0); stops early once the orbit
    /// leaves the blow-up box.
    pub fn iterate(&self, z: Point2, n: i64) -> Result<Orbit> {
        let mut points = Vec::with_capacity(n.unsigned_abs() as usize + 1);
        points.push(z);
        let mut cur = z;
        for _ in 0..n.unsigned_abs() {
            cur = if n > 0 { self.apply(cur) } else { self.apply_inverse(cur)? };
            points.push(cur);
            if !(cur.x.abs() <= self.blow_up && cur.y.abs() <= self.blow_up) {
                return Ok(Orbit { points, escaped: true });
            }
        }
        Ok(Orbit { points, escaped: false })
    }
}

impl PlanarMap for HenonLikeMap {
    fn apply(&self, z: Point2) -> Point2 {
        let p = self.phi.value(z.x, z.y, self.a);
        Point2::new(1.0 - self.a * z.x * z.x + z.y + p.x, self.b * z.x + p.y)
    }

    fn jacobian(&self, z: Point2) -> Jacobian2 {
        let g = self.phi.gradient(z.x, z.y, self.a);
        Jacobian2::new(
            -2.0 * self.a * z.x + g[0][0],
            1.0 + g[0][1],
            self.b + g[1][0],
            g[1][1],
        )
    }

    fn hessian(&self, z: Point2) -> Hessian2 {
        let mut h = self.phi.hessian(z.x, z.y, self.a);
        h.0[0][0][0] += -2.0 * self.a;
        h
    }

    fn apply_inverse(&self, z: Point2) -> Result<Point2> {
        if self.b == 0.0 {
            return Err(Error::InverseUndefined);
        }
        if self.phi.is_zero() {
            return Ok(self.unperturbed_inverse(z));
        }
        if let Some(w) = self.phi.inverse(z, self.a, self.b) {
            return Ok(w);
        }
        let mut w = self.unperturbed_inverse(z);
        let scale = 1.0 + z.x.abs() + z.y.abs();
        for _ in 0..NEWTON_MAX_ITERS {
            let r = self.apply(w) - z;
            if r.norm() <= 1e-14 * scale {
                return Ok(w);
            }
            let step = self
                .jacobian(w)
                .inverse()
                .ok_or(Error::NoInverse { x: z.x, y: z.y })?
                .apply(r);
            w = w - step;
            if !w.is_finite() {
                break;
            }
        }
        let r = self.apply(w) - z;
        if w.is_finite() && r.norm() <= 1e-10 * scale {
            Ok(w)
        } else {
            Err(Error::NoInverse { x: z.x, y: z.y })
        }
    }
}

/// Orbit segment; `escaped` flags an early stop at the blow-up bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub points: Vec<Point2>,
    pub escaped: bool,
}

/// Sampled C² size of φ over a window at fixed a: the largest of sup|φ|,
/// sup‖∇φ‖ and sup‖D²φ‖ (operator norms in (x, y)).
pub fn measure_eta(map: &HenonLikeMap, window: &Rect, n: usize) -> f64 {
    if map.is_unperturbed() {
        return 0.0;
    }
    let mut eta = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let x = window.x_min + window.width() * (i as f64 + 0.5) / n as f64;
            let y = window.y_min + window.height() * (j as f64 + 0.5) / n as f64;
            let v = map.phi.value(x, y, map.a).norm();
            let g = map.phi.gradient(x, y, map.a);
            let (gn, _) = Jacobian2::new(g[0][0], g[0][1], g[1][0], g[1][1]).singular_values();
            let h = map.phi.hessian(x, y, map.a);
            let hn = h
                .0
                .iter()
                .map(|c| Jacobian2(*c).singular_values().0)
                .fold(0.0_f64, f64::max);
            eta = eta.max(v).max(gn).max(hn);
        }
    }
    eta
}

/// Largest |det Df| over an n×n grid of the window.
pub fn max_abs_det(map: &impl PlanarMap, window: &Rect, n: usize) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let x = window.x_min + window.width() * (i as f64 + 0.5) / n as f64;
            let y = window.y_min + window.height() * (j as f64 + 0.5) / n as f64;
            m = m.max(map.jacobian(Point2::new(x, y)).det().abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_examples() {
        let f = HenonLikeMap::henon(2.0, 0.0);
        assert_eq!(f.apply(Point2::new(1.0, 0.0)), Point2::new(-1.0, 0.0));
        assert_eq!(f.apply(Point2::new(0.0, 0.0)), Point2::new(1.0, 0.0));
        let g = HenonLikeMap::henon(2.0, 0.3);
        let w = g.apply(Point2::new(1.0, 1.0));
        assert_eq!(w.x, 0.0);
        assert!((w.y - 0.3).abs() < 1e-16);
    }

    #[test]
    fn inverse_examples() {
        let g = HenonLikeMap::henon(2.0, 0.3);
        let w = g.apply_inverse(Point2::new(0.0, 0.3)).unwrap();
        assert!((w.x - 1.0).abs() < 1e-15 && (w.y - 1.0).abs() < 1e-14);
        let z = Point2::new(0.3, -0.1);
        let back = g.apply_inverse(g.apply(z)).unwrap();
        assert!(back.dist(z) < 1e-12);
        let singular = HenonLikeMap::henon(2.0, 0.0);
        assert!(matches!(
            singular.apply_inverse(Point2::new(0.0, 0.0)),
            Err(Error::InverseUndefined)
        ));
    }

    #[test]
    fn jacobian_at_q_star() {
        let f = HenonLikeMap::henon(2.0, 0.0);
        let j = f.jacobian(Point2::new(-1.0, 0.0));
        assert_eq!(j, Jacobian2::new(4.0, 1.0, 0.0, 0.0));
        assert_eq!(j.real_eigenvalues().unwrap().0, 4.0);
        let g = HenonLikeMap::henon(2.0, 0.3);
        assert_eq!(g.jacobian(Point2::new(0.7, -1.3)).det(), -0.3);
    }

    #[test]
    fn iterate_examples() {
        let f = HenonLikeMap::henon(2.0, 0.05);
        assert_eq!(f.iterate(Point2::new(0.2, 0.1), 0).unwrap().points.len(), 1);
        let o = f.iterate(Point2::new(-2.5, 0.0), 3).unwrap();
        assert_eq!(o.points[1].x, -11.5);
        for w in o.points.windows(2) {
            assert!(w[1].x.abs() >= 2.0 * w[0].x.abs());
        }
        let g = HenonLikeMap::henon(2.0, 0.0);
        let o = g.iterate(Point2::new(1.0, 0.0), 2).unwrap();
        assert_eq!(o.points, vec![Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0), Point2::new(-1.0, 0.0)]);
    }

    #[test]
    fn backward_jet_inverts_forward() {
        let f = HenonLikeMap::henon(2.0, 0.3);
        let z = Point2::new(0.4, 0.2);
        let (w, jg, _) = step_jet(&f, z, Direction::Backward).unwrap();
        let prod = f.jacobian(w).mul(&jg);
        assert!((prod.0[0][0] - 1.0).abs() < 1e-12 && prod.0[0][1].abs() < 1e-12);
    }

    #[test]
    fn bump_inverse_uses_newton() {
        let mut params = MapParams::henon(2.0, 0.3);
        params.perturbation = "bump".into();
        params.perturbation_params.insert("s".into(), 0.01);
        let f = HenonLikeMap::from_params(&params).unwrap();
        let z = Point2::new(0.5, -0.2);
        let back = f.apply_inverse(f.apply(z)).unwrap();
        assert!(back.dist(z) < 1e-10);
    }

    #[test]
    fn unknown_perturbation_rejected() {
        let params = MapParams { perturbation: "wiggle".into(), ..MapParams::default() };
        assert!(matches!(HenonLikeMap::from_params(&params), Err(Error::UnknownPerturbation(_))));
    }
}
