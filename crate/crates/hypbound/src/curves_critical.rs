//! Admissible curves, curvature pushforward, hyperbolic times and
//! dynamically defined critical points of order k.

use serde::{Deserialize, Serialize};

use crate::curve::{signed_curvature, PolyCurve};
use crate::error::{Error, Result};
use crate::fixed_points::{find_fixed_points, ManifoldKind};
use crate::geometry::{Point2, Rect, Vec2};
use crate::hypcoord::frame;
use crate::manifolds::primary_arc;
use crate::map_core::{HenonLikeMap, PlanarMap};

/// Slope and curvature bound of admissible curves.
pub const ALPHA: f64 = 0.5;

/// Default λ̂ used by the hyperbolicity constants.
pub const LAMBDA_HAT: f64 = 0.55;

/// λ = min{½ ln(3/√5), λ̂}.
pub fn lambda(lambda_hat: f64) -> f64 {
    (0.5 * (3.0 / 5.0_f64.sqrt()).ln()).min(lambda_hat)
}

/// Smallest k with (√δ / 2√3)(√(3/√5))^{k−1} > 1.
pub fn k0(delta: f64) -> usize {
    let base = (3.0 / 5.0_f64.sqrt()).sqrt();
    let mut k = 1;
    while delta.sqrt() / (2.0 * 3.0_f64.sqrt()) * base.powi(k as i32 - 1) <= 1.0 {
        k += 1;
    }
    k
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCertificate {
    pub max_slope: f64,
    pub max_curvature: f64,
    /// The x-range covers [−ε, ε].
    pub is_long: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibleCurve {
    pub curve: PolyCurve,
    pub alpha: f64,
    pub epsilon: f64,
    pub certificate: AdmissibilityCertificate,
}

impl AdmissibleCurve {
    pub fn certify(curve: PolyCurve, epsilon: f64) -> Self {
        let (x0, x1) = curve.x_range();
        let certificate = AdmissibilityCertificate {
            max_slope: curve.max_slope(),
            max_curvature: curve.max_abs_curvature(),
            is_long: x0 <= -epsilon && x1 >= epsilon,
        };
        Self { curve, alpha: ALPHA, epsilon, certificate }
    }

    pub fn is_admissible(&self) -> bool {
        self.certificate.max_slope < self.alpha && self.certificate.max_curvature < self.alpha
    }

    pub fn is_long(&self) -> bool {
        self.certificate.is_long
    }

    pub fn arclength(&self) -> f64 {
        self.curve.arclength()
    }

    /// Position, velocity and acceleration at arclength s on the cubic Hermite
    /// interpolant through the vertices and their tangents.
    pub fn jet(&self, s: f64) -> (Point2, Vec2, Vec2) {
        hermite_jet(&self.curve, s)
    }
}

pub(crate) fn hermite_jet(c: &PolyCurve, s: f64) -> (Point2, Vec2, Vec2) {
    let n = c.len();
    if n == 1 {
        return (c.vertices[0], c.tangents[0], Vec2::default());
    }
    let s = s.clamp(0.0, c.arclength());
    let i = c.param.partition_point(|&p| p <= s).clamp(1, n - 1) - 1;
    let (p0, p1) = (c.vertices[i], c.vertices[i + 1]);
    let (t0, t1) = (c.tangents[i], c.tangents[i + 1]);
    let l = c.param[i + 1] - c.param[i];
    if l <= 0.0 {
        return (p0, t0, Vec2::default());
    }
    let u = (s - c.param[i]) / l;
    let (u2, u3) = (u * u, u * u * u);
    let comb = |c0: f64, c1: f64, c2: f64, c3: f64| {
        Vec2::new(
            c0 * p0.x + c1 * l * t0.x + c2 * p1.x + c3 * l * t1.x,
            c0 * p0.y + c1 * l * t0.y + c2 * p1.y + c3 * l * t1.y,
        )
    };
    let p = comb(2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2);
    let d1 = comb(6.0 * u2 - 6.0 * u, 3.0 * u2 - 4.0 * u + 1.0, -6.0 * u2 + 6.0 * u, 3.0 * u2 - 2.0 * u) * (1.0 / l);
    let d2 = comb(12.0 * u - 6.0, 6.0 * u - 4.0, -12.0 * u + 6.0, 6.0 * u - 2.0) * (1.0 / (l * l));
    (Point2::new(p.x, p.y), d1, d2)
}

/// κ = |γ̇ × γ̈| / |γ̇|³ at the vertex nearest arclength s, using
/// second-order central differences on the arclength parametrization.
pub fn polyline_curvature_at(curve: &PolyCurve, s: f64) -> Result<f64> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::Precondition("curvature needs at least three vertices".into()));
    }
    let i = curve.param.partition_point(|&p| p < s).clamp(1, n - 2);
    let i = if i > 1 && (s - curve.param[i - 1]).abs() < (curve.param[i] - s).abs() { i - 1 } else { i };
    let (h1, h2) = (curve.param[i] - curve.param[i - 1], curve.param[i + 1] - curve.param[i]);
    if h1.min(h2) < 1e-12 {
        return Err(Error::SingularParametrization(h1.min(h2)));
    }
    let (pm, p0, pp) = (curve.vertices[i - 1].to_vec(), curve.vertices[i].to_vec(), curve.vertices[i + 1].to_vec());
    let d1 = pm * (-h2 / (h1 * (h1 + h2))) + p0 * ((h2 - h1) / (h1 * h2)) + pp * (h1 / (h2 * (h1 + h2)));
    let d2 = (pm * (1.0 / (h1 * (h1 + h2))) - p0 * (1.0 / (h1 * h2)) + pp * (1.0 / (h2 * (h1 + h2)))) * 2.0;
    crate::curve::curvature_at(d1, d2)
}

/// Image of one curve vertex: point, velocity Df·γ̇ and acceleration D²f(γ̇, γ̇) + Df·γ̈.
pub fn push_jet<M: PlanarMap + ?Sized>(map: &M, p: Point2, d1: Vec2, d2: Vec2) -> (Point2, Vec2, Vec2) {
    let j = map.jacobian(p);
    (map.apply(p), j.apply(d1), map.hessian(p).apply(d1, d1) + j.apply(d2))
}

/// Image curve with tangents and curvatures pushed forward through the
/// second derivatives of the map.
pub fn image_curve<M: PlanarMap + ?Sized>(map: &M, curve: &PolyCurve) -> PolyCurve {
    let mut v = Vec::with_capacity(curve.len());
    let mut t = Vec::with_capacity(curve.len());
    let mut k = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        let tan = curve.tangents[i];
        let (w, d1, d2) = push_jet(map, curve.vertices[i], tan, tan.perp() * curve.curvatures[i]);
        v.push(w);
        t.push(d1.normalized());
        k.push(signed_curvature(d1, d2));
    }
    PolyCurve::new(v, t, k, format!("f({})", curve.tag))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicTimeSample {
    pub s: f64,
    pub kappa0: f64,
    pub kappa_n: f64,
    pub hyperbolic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicTimeReport {
    pub n: usize,
    pub lambda: f64,
    pub samples: Vec<HyperbolicTimeSample>,
    pub hyperbolic_count: usize,
    /// Hyperbolic times where κ_n < κ₀ fails.
    pub violations: usize,
    /// Largest κ_n/κ₀ over hyperbolic times.
    pub worst_ratio: f64,
}

impl HyperbolicTimeReport {
    pub fn passed(&self) -> bool {
        self.hyperbolic_count > 0 && self.violations == 0
    }
}

/// At each vertex, decide whether n is a hyperbolic time (‖γ̇_n‖ ≥ e^{λj}‖γ̇_{n−j}‖
/// for all j ≤ n) and compare κ_n with κ₀ there.
pub fn hyperbolic_time_curvature_check<M: PlanarMap + ?Sized>(
    map: &M,
    curve: &PolyCurve,
    n: usize,
    lambda: f64,
) -> Result<HyperbolicTimeReport> {
    if n == 0 {
        return Err(Error::Precondition("hyperbolic times need n >= 1".into()));
    }
    let k_max = curve.max_abs_curvature();
    if k_max >= ALPHA {
        return Err(Error::Precondition(format!("initial curvature {k_max} is not below alpha")));
    }
    let samples: Vec<HyperbolicTimeSample> = (0..curve.len())
        .map(|i| {
            let tan = curve.tangents[i];
            let (mut p, mut d1, mut d2) = (curve.vertices[i], tan, tan.perp() * curve.curvatures[i]);
            let mut speeds = vec![d1.norm()];
            for _ in 0..n {
                (p, d1, d2) = push_jet(map, p, d1, d2);
                speeds.push(d1.norm());
            }
            let vn = speeds[n];
            let hyperbolic = vn.is_finite() && (0..=n).all(|j| vn >= (lambda * j as f64).exp() * speeds[n - j]);
            HyperbolicTimeSample {
                s: curve.param[i],
                kappa0: curve.curvatures[i].abs(),
                kappa_n: signed_curvature(d1, d2).abs(),
                hyperbolic,
            }
        })
        .collect();
    let hyp: Vec<&HyperbolicTimeSample> = samples.iter().filter(|s| s.hyperbolic).collect();
    if hyp.is_empty() {
        return Err(Error::Precondition("no hyperbolic times found".into()));
    }
    let violations = hyp.iter().filter(|s| !(s.kappa_n < s.kappa0)).count();
    let worst_ratio = hyp.iter().map(|s| s.kappa_n / s.kappa0).fold(0.0, f64::max);
    Ok(HyperbolicTimeReport { n, lambda, hyperbolic_count: hyp.len(), samples, violations, worst_ratio })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub order: usize,
    pub t: f64,
    #[serde(rename = "cx")]
    pub c_x: f64,
    #[serde(rename = "cy")]
    pub c_y: f64,
    #[serde(rename = "c0x")]
    pub c0_x: f64,
    #[serde(rename = "c0y")]
    pub c0_y: f64,
    pub residual: f64,
    pub image_curvature: f64,
}

impl CriticalPoint {
    pub fn c(&self) -> Point2 {
        Point2::new(self.c_x, self.c_y)
    }

    pub fn c0(&self) -> Point2 {
        Point2::new(self.c0_x, self.c0_y)
    }
}

const PRESCAN: usize = 64;
const ANGLE_TOL: f64 = 1e-10;
const PARAM_TOL: f64 = 1e-12;

/// θ_k(t): signed angle from the image tangent u = Df·γ̇(t) to e_k at f(γ(t)),
/// with e_k oriented into the half plane of u's second component. Along a
/// nearly horizontal curve that component has the fixed sign of b, so θ_k is
/// continuous and vanishes only at tangencies.
pub fn tangency_angle<M: PlanarMap + ?Sized>(map: &M, curve: &AdmissibleCurve, k: usize, t: f64) -> Result<f64> {
    let (p, d1, _) = curve.jet(t);
    let u = map.jacobian(p).apply(d1);
    let e = frame(map, map.apply(p), k)?.e_k;
    let e = if u.y < 0.0 { -e } else { e };
    Ok(u.signed_angle_to(e))
}

/// Root of θ_k on a long admissible curve.
pub fn find_critical_point<M: PlanarMap + ?Sized>(map: &M, long_curve: &AdmissibleCurve, k: usize) -> Result<CriticalPoint> {
    if !long_curve.is_long() {
        return Err(Error::Precondition("curve does not cross the critical strip".into()));
    }
    let len = long_curve.arclength();
    let ts: Vec<f64> = (0..=PRESCAN).map(|i| len * i as f64 / PRESCAN as f64).collect();
    let thetas: Vec<f64> = ts.iter().map(|&t| tangency_angle(map, long_curve, k, t)).collect::<Result<_>>()?;
    let roots: Vec<usize> = (0..PRESCAN)
        .filter(|&i| thetas[i] == 0.0 || thetas[i].signum() != thetas[i + 1].signum())
        .collect();
    let i = match roots.as_slice() {
        [] => {
            return Err(Error::NoSignChange { lo: 0.0, hi: len });
        }
        [i] => *i,
        many => return Err(Error::MultipleRoots(many.len())),
    };
    let (mut lo, mut hi) = (ts[i], ts[i + 1]);
    let mut th_lo = thetas[i];
    while hi - lo > PARAM_TOL {
        let mid = 0.5 * (lo + hi);
        let th = tangency_angle(map, long_curve, k, mid)?;
        if th == 0.0 {
            (lo, hi) = (mid, mid);
            break;
        }
        if th.signum() == th_lo.signum() {
            (lo, th_lo) = (mid, th);
        } else {
            hi = mid;
        }
    }
    // Secant polish.
    let (mut t0, mut t1) = (lo, hi);
    let mut f0 = tangency_angle(map, long_curve, k, t0)?;
    let mut f1 = tangency_angle(map, long_curve, k, t1)?;
    for _ in 0..20 {
        if f1.abs() <= ANGLE_TOL || f1 == f0 {
            break;
        }
        let t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
        (t0, f0) = (t1, f1);
        t1 = t2.clamp(ts[i], ts[i + 1]);
        f1 = tangency_angle(map, long_curve, k, t1)?;
    }
    let (t, residual) = if f1.abs() <= f0.abs() { (t1, f1.abs()) } else { (t0, f0.abs()) };
    let (p, d1, d2) = long_curve.jet(t);
    let (c0, u1, u2) = push_jet(map, p, d1, d2);
    Ok(CriticalPoint {
        order: k,
        t,
        c_x: p.x,
        c_y: p.y,
        c0_x: c0.x,
        c0_y: c0.y,
        residual,
        image_curvature: signed_curvature(u1, u2).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub point: Point2,
    pub ratio: f64,
    pub error_bound: f64,
}

/// Gaps below this are at rounding level.
const GAP_FLOOR: f64 = 1e-13;

/// Successive distances d(c0^(k), c0^(k+1)).
pub fn critical_gaps(points: &[CriticalPoint]) -> Vec<f64> {
    points.windows(2).map(|w| w[0].c0().dist(w[1].c0())).collect()
}

/// Geometric-series extrapolation of c0^(k) from the last resolvable orders.
pub fn extrapolate_critical_point(points: &[CriticalPoint]) -> Result<Extrapolation> {
    if points.len() < 3 {
        return Err(Error::Precondition("extrapolation needs at least three orders".into()));
    }
    let gaps = critical_gaps(points);
    let last = gaps.iter().rposition(|g| *g > GAP_FLOOR);
    let Some(last) = last else {
        let p = points[points.len() - 1].c0();
        return Ok(Extrapolation { point: p, ratio: 0.0, error_bound: 0.0 });
    };
    if last == 0 {
        return Err(Error::Precondition("fewer than two resolvable gaps".into()));
    }
    let ratios: Vec<f64> = gaps[..=last].windows(2).map(|w| w[1] / w[0]).collect();
    for w in ratios.windows(2) {
        if (w[1] - w[0]).abs() > 0.5 * w[0].abs().max(w[1].abs()) {
            return Err(Error::NonGeometric(ratios));
        }
    }
    let r = ratios[ratios.len() - 1];
    if !(r < 1.0) {
        return Err(Error::NonGeometric(ratios));
    }
    let (a, b) = (points[last].c0(), points[last + 1].c0());
    let tail = r / (1.0 - r);
    let point = b + (b - a) * tail;
    Ok(Extrapolation { point, ratio: r, error_bound: 2.0 * gaps[last] * tail })
}

/// Component of the primary unstable arc of p through the critical strip,
/// trimmed to |x| ≤ 1.2 ε.
pub fn unstable_component_in_strip(map: &HenonLikeMap, epsilon: f64) -> Result<AdmissibleCurve> {
    let (p, _) = find_fixed_points(map)?;
    let arc = primary_arc(map, &p, ManifoldKind::Unstable, &Rect::R_HAT, &Default::default())?;
    let hb = 4.0 * map.b.abs();
    let centre = arc
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| v.y.abs() < hb)
        .min_by(|a, b| a.1.x.abs().total_cmp(&b.1.x.abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Construction("unstable arc misses the critical strip".into()))?;
    let inside = |i: usize| arc.vertices[i].x.abs() <= 1.2 * epsilon;
    let mut lo = centre;
    while lo > 0 && inside(lo - 1) {
        lo -= 1;
    }
    let mut hi = centre;
    while hi + 1 < arc.len() && inside(hi + 1) {
        hi += 1;
    }
    let mut c = arc.slice(lo, hi);
    c.tag = "Wu(P) in Delta".into();
    Ok(AdmissibleCurve::certify(c, epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingStep {
    pub j: usize,
    pub norm: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingReport {
    pub k: usize,
    pub distance: f64,
    /// z coincides with the critical point.
    pub degenerate: bool,
    pub chain: Vec<BindingStep>,
    pub final_norm: f64,
    pub final_bound: f64,
    pub final_passed: bool,
    /// d(z, c) ≥ (1/3)√d(z₀, c₀) with factor-2 slack.
    pub critdist_passed: bool,
}

impl BindingReport {
    pub fn passed(&self) -> bool {
        self.degenerate || (self.chain.iter().all(|s| s.passed) && self.final_passed && self.critdist_passed)
    }
}

/// Expansion of the unit tangent at z while its orbit shadows the critical orbit.
pub fn binding_expansion_check<M: PlanarMap + ?Sized>(
    map: &M,
    z: Point2,
    tangent: Vec2,
    critical: &CriticalPoint,
    k: usize,
    lambda: f64,
) -> BindingReport {
    let d = z.dist(critical.c());
    let degenerate = d < 1e-14;
    let w = tangent.normalized();
    let mut chain = Vec::with_capacity(k + 1);
    let (mut u, mut v) = (z, w);
    for j in 0..=k {
        v = map.jacobian(u).apply(v);
        u = map.apply(u);
        let bound = 0.5 * 3.0_f64.powi(j as i32) * d;
        chain.push(BindingStep { j, norm: v.norm(), bound, passed: v.norm() >= bound });
    }
    let final_norm = v.norm();
    let final_bound = (lambda * (k + 1) as f64).exp();
    let d0 = map.apply(z).dist(critical.c0());
    BindingReport {
        k,
        distance: d,
        degenerate,
        chain,
        final_norm,
        final_bound,
        final_passed: final_norm >= final_bound,
        critdist_passed: d >= 0.5 * d0.sqrt() / 3.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::HenonLikeMap;

    #[test]
    fn constants() {
        assert_eq!(k0(0.1), 18);
        assert!((lambda(LAMBDA_HAT) - 0.146946).abs() < 1e-6);
        assert_eq!(lambda(0.1), 0.1);
    }

    #[test]
    fn hermite_reproduces_a_segment() {
        let c = PolyCurve::segment(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), 8, "axis");
        let (p, d1, d2) = hermite_jet(&c, 0.7);
        assert!((p.x + 0.3).abs() < 1e-15 && p.y == 0.0);
        assert!((d1.x - 1.0).abs() < 1e-14 && d2.norm() < 1e-12);
    }

    #[test]
    fn polyline_curvature_of_circle() {
        let ts = (0..=400).map(|i| i as f64 * std::f64::consts::PI / 400.0);
        let c = PolyCurve::from_points(ts.map(|t| Point2::new(2.0 * t.cos(), 2.0 * t.sin())).collect(), "circle");
        for s in [0.5, 2.0, 5.0] {
            assert!((polyline_curvature_at(&c, s).unwrap() - 0.5).abs() < 1e-4);
        }
        let line = PolyCurve::segment(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), 10, "line");
        assert!(polyline_curvature_at(&line, 0.5).unwrap() < 1e-12);
    }

    #[test]
    fn pushforward_of_horizontal_segment() {
        let f = HenonLikeMap::henon(2.0, 0.3);
        let c = PolyCurve::segment(Point2::new(-0.1, 0.0), Point2::new(0.1, 0.0), 20, "h");
        let img = image_curve(&f, &c);
        let k = img.curvatures[10].abs();
        assert!((k / (2.0 * 2.0 / 0.09) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_time_preconditions() {
        let f = HenonLikeMap::henon(2.2, 0.05);
        let c = PolyCurve::segment(Point2::new(0.7, 0.0), Point2::new(0.9, 0.0), 20, "h");
        assert!(matches!(hyperbolic_time_curvature_check(&f, &c, 0, 0.1), Err(Error::Precondition(_))));
        let mut bent = c.clone();
        bent.curvatures[3] = 0.7;
        assert!(matches!(hyperbolic_time_curvature_check(&f, &bent, 3, 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn synthetic_geometric_extrapolation() {
        let c = Point2::new(0.1, -0.2);
        let b: f64 = 0.1;
        let pts: Vec<CriticalPoint> = (1..6)
            .map(|k| {
                let p = Point2::new(c.x + b.powi(k), c.y);
                CriticalPoint { order: k as usize, t: 0.0, c_x: 0.0, c_y: 0.0, c0_x: p.x, c0_y: p.y, residual: 0.0, image_curvature: 0.0 }
            })
            .collect();
        let e = extrapolate_critical_point(&pts).unwrap();
        assert!(e.point.dist(c) < 1e-12);
        assert!(matches!(extrapolate_critical_point(&pts[..2]), Err(Error::Precondition(_))));
    }
}
