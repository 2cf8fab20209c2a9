//! The quadratic family g(x) = 1 − ax² + ψ(x) and its small perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_points::one_d_fixed_points;

pub const MAX_PERIOD: usize = 14;
const ROOT_GRID: usize = 10_000;
const ROOT_WINDOW: (f64, f64) = (-1.5, 1.5);
const ESCAPE: f64 = 1e6;

/// Additive perturbation ψ with analytic first and second derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OneDPerturbation {
    #[default]
    Zero,
    /// ψ(x) = s sin 3x, the y = 0 trace of the planar bump.
    Bump { s: f64 },
}

impl OneDPerturbation {
    fn jet(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Self::Zero => (0.0, 0.0, 0.0),
            Self::Bump { s } => (s * (3.0 * x).sin(), 3.0 * s * (3.0 * x).cos(), -9.0 * s * (3.0 * x).sin()),
        }
    }

    /// C² norm of ψ on the real line.
    pub fn c2_norm(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Bump { s } => 9.0 * s.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneDMap {
    pub a: f64,
    pub perturbation: OneDPerturbation,
}

impl OneDMap {
    pub fn quadratic(a: f64) -> Self {
        Self { a, perturbation: OneDPerturbation::Zero }
    }

    pub fn with_a(&self, a: f64) -> Self {
        Self { a, ..*self }
    }

    pub fn eta(&self) -> f64 {
        self.perturbation.c2_norm()
    }

    pub fn apply(&self, x: f64) -> f64 {
        1.0 - self.a * x * x + self.perturbation.jet(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        -2.0 * self.a * x + self.perturbation.jet(x).1
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        -2.0 * self.a + self.perturbation.jet(x).2
    }

    /// (g^n(x), (g^n)'(x)).
    pub fn iterate_jet(&self, x: f64, n: usize) -> (f64, f64) {
        (0..n).fold((x, 1.0), |(u, d), _| (self.apply(u), d * self.derivative(u)))
    }

    /// Orientation-reversing fixed point, continued from the quadratic one by Newton.
    pub fn q(&self) -> Result<f64> {
        let (_, q0) = od_fixed_points(self.a)?;
        newton(|x| (self.apply(x) - x, self.derivative(x) - 1.0), q0)
    }
}

fn newton(f: impl Fn(f64) -> (f64, f64), mut x: f64) -> Result<f64> {
    for _ in 0..60 {
        let (v, d) = f(x);
        if d == 0.0 || !v.is_finite() {
            return Err(Error::NewtonFailed("one-dimensional root".into()));
        }
        let step = v / d;
        x -= step;
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    let (v, _) = f(x);
    if v.abs() < 1e-12 {
        Ok(x)
    } else {
        Err(Error::NewtonFailed("one-dimensional root".into()))
    }
}

/// Closed-form fixed points of the unperturbed family.
pub fn od_fixed_points(a: f64) -> Result<(f64, f64)> {
    one_d_fixed_points(a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneDOrbit {
    pub period: usize,
    pub points: Vec<f64>,
    pub multiplier: f64,
}

impl OneDOrbit {
    pub fn exponent(&self) -> f64 {
        self.multiplier.abs().ln() / self.period as f64
    }
}

/// Roots of g^p(x) = x on [−1.5, 1.5] for p ≤ max_period, grouped into orbits
/// of minimal period p.
pub fn od_periodic_orbits(map: &OneDMap, max_period: usize) -> Result<Vec<OneDOrbit>> {
    if max_period > MAX_PERIOD {
        return Err(Error::Precondition(format!("max period {max_period} exceeds {MAX_PERIOD}")));
    }
    let mut orbits: Vec<OneDOrbit> = Vec::new();
    let (lo, hi) = ROOT_WINDOW;
    for p in 1..=max_period {
        let h = |x: f64| {
            let (v, d) = map.iterate_jet(x, p);
            (v - x, d - 1.0)
        };
        let grid: Vec<(f64, f64)> = (0..=ROOT_GRID)
            .map(|i| lo + (hi - lo) * i as f64 / ROOT_GRID as f64)
            .map(|x| (x, h(x).0))
            .collect();
        let mut roots = Vec::new();
        for w in grid.windows(2) {
            let ((x0, v0), (x1, v1)) = (w[0], w[1]);
            if !(v0.is_finite() && v1.is_finite()) {
                continue;
            }
            if v0 == 0.0 {
                roots.push(x0);
                continue;
            }
            if v0 * v1 > 0.0 {
                continue;
            }
            let (mut a, mut b) = (x0, x1);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if (h(m).0 > 0.0) == (v0 > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            let x = newton(h, 0.5 * (a + b)).unwrap_or(0.5 * (a + b));
            roots.push(x);
        }
        let mut used = vec![false; roots.len()];
        for i in 0..roots.len() {
            if used[i] {
                continue;
            }
            let mut pts = vec![roots[i]];
            let mut x = roots[i];
            for _ in 1..p {
                x = map.apply(x);
                pts.push(x);
            }
            for (j, r) in roots.iter().enumerate() {
                if pts.iter().any(|v| (v - r).abs() < 1e-8) {
                    used[j] = true;
                }
            }
            let minimal = (1..p).all(|d| p % d != 0 || (pts[d] - pts[0]).abs() > 1e-8);
            if !minimal || pts.iter().any(|v| v.abs() > ESCAPE) {
                continue;
            }
            let multiplier = pts.iter().map(|&v| map.derivative(v)).product();
            orbits.push(OneDOrbit { period: p, points: pts, multiplier });
        }
    }
    Ok(orbits)
}

/// T(a) = g_a²(0) − q(g_a): the second image of the critical point minus the
/// reversing fixed point. It vanishes at the first tangency.
pub fn tangency_functional(map: &OneDMap) -> Result<f64> {
    Ok(map.iterate_jet(0.0, 2).0 - map.q()?)
}

/// Bisection root of the tangency functional in `bracket`.
pub fn od_a_star(family: &OneDMap, bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let t = |a: f64| tangency_functional(&family.with_a(a));
    let (t_lo, t_hi) = (t(lo)?, t(hi)?);
    if t_lo == 0.0 {
        return Ok(lo);
    }
    if t_hi == 0.0 {
        return Ok(hi);
    }
    if t_lo * t_hi > 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (t(mid)? > 0.0) == (t_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneDExpansion {
    pub epsilon: f64,
    pub lambda_hat: f64,
    pub samples: usize,
    /// min over segments and prefixes of |(g^k)'| e^{−λ̂k}.
    pub measured_c_eps: f64,
    /// Segments returning to (−ε, ε) whose full product fell below e^{λ̂k}.
    pub return_failures: usize,
    pub returns: usize,
}

/// Products of |g'| along orbit segments that stay outside (−ε, ε).
pub fn od_expansion_outside(map: &OneDMap, epsilon: f64, lambda_hat: f64, samples: usize, max_len: usize) -> OneDExpansion {
    let (_, q) = od_fixed_points(map.a).unwrap_or((0.5, -1.0));
    let bound = q.abs();
    let mut worst = f64::INFINITY;
    let (mut returns, mut failures, mut used) = (0, 0, 0);
    for i in 0..samples {
        let x0 = -bound + 2.0 * bound * (i as f64 + 0.5) / samples as f64;
        if x0.abs() < epsilon {
            continue;
        }
        used += 1;
        let (mut x, mut log_d) = (x0, 0.0);
        for k in 1..=max_len {
            log_d += map.derivative(x).abs().ln();
            x = map.apply(x);
            worst = worst.min(log_d - lambda_hat * k as f64);
            if x.abs() > bound + 1e-9 {
                break;
            }
            if x.abs() < epsilon {
                returns += 1;
                if log_d < lambda_hat * k as f64 {
                    failures += 1;
                }
                break;
            }
        }
    }
    OneDExpansion {
        epsilon,
        lambda_hat,
        samples: used,
        measured_c_eps: worst.exp().min(1.0),
        return_failures: failures,
        returns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let g = OneDMap { a: 2.1, perturbation: OneDPerturbation::Bump { s: 1e-2 } };
        let h = 1e-6;
        for x in [-1.2, -0.3, 0.0, 0.7] {
            let fd = (g.apply(x + h) - g.apply(x - h)) / (2.0 * h);
            assert!((fd - g.derivative(x)).abs() <= 1e-6 * g.derivative(x).abs().max(1.0));
            let fd2 = (g.derivative(x + h) - g.derivative(x - h)) / (2.0 * h);
            assert!((fd2 - g.second_derivative(x)).abs() <= 1e-6 * g.second_derivative(x).abs());
        }
    }

    #[test]
    fn multiplier_at_q() {
        let g = OneDMap::quadratic(2.0);
        let orbits = od_periodic_orbits(&g, 1).unwrap();
        let q = orbits.iter().find(|o| (o.points[0] + 1.0).abs() < 1e-12).unwrap();
        assert!((q.multiplier - 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_above() {
        let g = OneDMap::quadratic(2.0);
        assert!(matches!(od_a_star(&g, (2.5, 3.0), 1e-10), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn too_long_periods_rejected() {
        assert!(od_periodic_orbits(&OneDMap::quadratic(2.0), 15).is_err());
    }
}
