//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use hypbound::curve::PolyCurve;
use hypbound::geometry::Point2;

/// Dense samples of y = 2x² + c on |x| ≤ 1.
pub fn parabola(c: f64, n: usize) -> Vec<Point2> {
    (0..=n)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / n as f64;
            Point2::new(x, 2.0 * x * x + c)
        })
        .collect()
}

pub fn min_dist(p: Point2, pts: &[Point2]) -> f64 {
    pts.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min)
}

/// Point-to-polyline distance by scanning every segment.
pub fn dist_to_arcs(p: Point2, arcs: &[PolyCurve]) -> f64 {
    let mut best = f64::INFINITY;
    for a in arcs {
        for w in a.vertices.windows(2) {
            let (u, v) = (w[0], w[1]);
            let d = v - u;
            let l2 = d.dot(d);
            let t = if l2 == 0.0 { 0.0 } else { ((p - u).dot(d) / l2).clamp(0.0, 1.0) };
            best = best.min(p.dist(u.lerp(v, t)));
        }
    }
    best
}

/// Two-sided Hausdorff distance between y = 2x² + c on |x| ≤ 1 and the arc
/// vertices lying over |x| ≤ 1 within `band` of that parabola vertically.
pub fn parabola_hausdorff(arcs: &[PolyCurve], c: f64, band: f64) -> f64 {
    let samples = parabola(c, 20_000);
    let to_arcs = samples.iter().step_by(10).map(|p| dist_to_arcs(*p, arcs)).fold(0.0, f64::max);
    let from_arcs = arcs
        .iter()
        .flat_map(|a| a.vertices.iter())
        .filter(|v| v.x.abs() <= 1.0 && (v.y - 2.0 * v.x * v.x - c).abs() < band)
        .map(|v| min_dist(*v, &samples))
        .fold(0.0, f64::max);
    to_arcs.max(from_arcs)
}

/// Circular arc of signed curvature `kappa` and length `len`, centred at `c`
/// with slope `slope` there, sampled with exact tangents and curvatures.
pub fn arc(c: Point2, slope: f64, kappa: f64, len: f64, n: usize) -> PolyCurve {
    use hypbound::geometry::Vec2;
    let th0 = slope.atan();
    let ts = (0..=n).map(|i| -len / 2.0 + len * i as f64 / n as f64);
    PolyCurve::sample(ts, "arc", |s| {
        let th = th0 + kappa * s;
        let p = if kappa == 0.0 {
            Point2::new(c.x + s * th0.cos(), c.y + s * th0.sin())
        } else {
            Point2::new(c.x + (th.sin() - th0.sin()) / kappa, c.y - (th.cos() - th0.cos()) / kappa)
        };
        let t = Vec2::new(th.cos(), th.sin());
        (p, t, t.perp() * kappa)
    })
}

/// Number of primitive binary necklaces of length p.
pub fn necklaces(p: usize) -> usize {
    fn mobius(n: usize) -> i64 {
        let (mut n, mut m, mut d) = (n, 1, 2);
        while d * d <= n {
            if n % d == 0 {
                n /= d;
                if n % d == 0 {
                    return 0;
                }
                m = -m;
            }
            d += 1;
        }
        if n > 1 { -m } else { m }
    }
    let s: i64 = (1..=p).filter(|d| p.is_multiple_of(*d)).map(|d| mobius(d) * (1i64 << (p / d))).sum();
    (s / p as i64) as usize
}
