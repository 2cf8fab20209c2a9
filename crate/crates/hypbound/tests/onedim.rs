mod common;

use hypbound::error::Error;
use hypbound::onedim::*;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn bump(a: f64, s: f64) -> OneDMap {
    OneDMap { a, perturbation: OneDPerturbation::Bump { s } }
}

#[test]
fn fixed_point_examples() {
    assert_eq!(od_fixed_points(2.0).unwrap(), (0.5, -1.0));
    let s11 = 11f64.sqrt();
    let (p, q) = od_fixed_points(2.5).unwrap();
    assert!((p - (-1.0 + s11) / 5.0).abs() < 1e-15 && (q - (-1.0 - s11) / 5.0).abs() < 1e-15);
    for a in [1.5, 2.0, 2.3] {
        let g = OneDMap::quadratic(a);
        let q = g.q().unwrap();
        assert!((g.apply(q) - q).abs() < 1e-14);
        assert!((g.derivative(q).abs() - (1.0 + (1.0 + 4.0 * a).sqrt())).abs() < 1e-12);
    }
}

#[test]
fn tangency_parameter_of_the_quadratic_family() {
    let g = OneDMap::quadratic(2.0);
    let a = od_a_star(&g, (1.5, 2.5), TOL).unwrap();
    assert!((a - 2.0).abs() <= TOL, "{a}");
    // Closed form: 1 − a = (−1 − √(1 + 4a)) / (2a) has the single root a = 2 above 1.
    let t = |a: f64| 1.0 - a + (1.0 + (1.0 + 4.0 * a).sqrt()) / (2.0 * a);
    assert!(t(a).abs() < 1e-9);
    assert!(t(1.9) > 0.0 && t(2.1) < 0.0);
}

#[test]
fn tangency_parameter_is_bracket_independent() {
    let g = OneDMap::quadratic(2.0);
    let brackets = [(1.5, 2.5), (1.9, 2.3), (1.99, 2.7), (1.2, 2.01)];
    let roots: Vec<f64> = brackets.iter().map(|b| od_a_star(&g, *b, TOL).unwrap()).collect();
    for r in &roots {
        assert!((r - roots[0]).abs() <= 2.0 * TOL, "{roots:?}");
    }
    let g = bump(2.0, 1e-3);
    let roots: Vec<f64> = brackets.iter().map(|b| od_a_star(&g, *b, TOL).unwrap()).collect();
    for r in &roots {
        assert!((r - roots[0]).abs() <= 2.0 * TOL, "{roots:?}");
    }
}

#[test]
fn perturbed_tangency_stays_near_two() {
    let g = bump(2.0, 1e-3);
    let a = od_a_star(&g, (1.5, 2.5), TOL).unwrap();
    assert!((a - 2.0).abs() < 0.05, "{a}");
    assert!(tangency_functional(&g.with_a(a)).unwrap().abs() < 1e-8);
}

#[test]
fn no_sign_change_is_an_error() {
    let g = OneDMap::quadratic(2.0);
    assert!(matches!(od_a_star(&g, (2.5, 3.0), TOL), Err(Error::NoSignChange { .. })));
}

#[test]
fn orbit_counts_match_the_full_shift() {
    // Past the tangency every root of g^p(x) = x is real and the dynamics is the full 2-shift.
    let orbits = od_periodic_orbits(&OneDMap::quadratic(2.2), 11).unwrap();
    for p in 1..=11 {
        assert_eq!(orbits.iter().filter(|o| o.period == p).count(), common::necklaces(p), "p={p}");
    }
}

#[test]
fn orbits_are_periodic_with_consistent_multipliers() {
    let g = bump(2.1, 1e-3);
    let h = 1e-7;
    for o in od_periodic_orbits(&g, 8).unwrap() {
        let (x, d) = g.iterate_jet(o.points[0], o.period);
        assert!((x - o.points[0]).abs() < 1e-9);
        assert!((d - o.multiplier).abs() <= 1e-9 * d.abs());
        let fd = (g.iterate_jet(o.points[0] + h, o.period).0 - g.iterate_jet(o.points[0] - h, o.period).0) / (2.0 * h);
        assert!((fd - o.multiplier).abs() <= 1e-4 * o.multiplier.abs(), "{o:?} {fd}");
    }
}

#[test]
fn chebyshev_multipliers() {
    // At a = 2 the map is conjugate to the doubling map on the circle, so every
    // cycle has |multiplier| = 2^p except the fixed point at −1.
    for o in od_periodic_orbits(&OneDMap::quadratic(2.0), 10).unwrap() {
        if o.period == 1 && (o.points[0] + 1.0).abs() < 1e-12 {
            assert!((o.multiplier - 4.0).abs() < 1e-12);
        } else {
            let want = 2f64.powi(o.period as i32);
            assert!((o.multiplier.abs() - want).abs() <= 1e-6 * want, "{o:?}");
        }
    }
}

#[test]
fn multipliers_grow_uniformly() {
    let a_star = od_a_star(&OneDMap::quadratic(2.0), (1.5, 2.5), TOL).unwrap();
    for (a, max_p) in [(2.2, 12), (2.0, 10), (a_star, 10)] {
        let orbits = od_periodic_orbits(&OneDMap::quadratic(a), max_p).unwrap();
        assert!(!orbits.is_empty());
        for o in &orbits {
            assert!(o.multiplier.abs() >= (0.14 * o.period as f64).exp(), "a={a} {o:?}");
        }
    }
}

#[test]
fn expansion_outside_the_critical_neighbourhood() {
    for a in [2.05, 2.2] {
        for (g, eps) in [(OneDMap::quadratic(a), 0.1), (bump(a, 1e-3), 0.1), (OneDMap::quadratic(a), 0.2)] {
            let r = od_expansion_outside(&g, eps, 0.55, 4000, 200);
            assert!(r.samples > 0 && r.returns > 0);
            assert_eq!(r.return_failures, 0, "a={a} {r:?}");
            assert!(r.measured_c_eps > 0.0 && r.measured_c_eps <= 1.0);
            // The first step alone bounds C_ε: |g'(x)| ≥ 2aε for |x| ≥ ε.
            assert!(r.measured_c_eps <= (2.0 * a * eps * 1.01 / 0.55f64.exp()).min(1.0) + 1e-12);
        }
    }
}

#[test]
fn period_bound_enforced() {
    assert!(matches!(od_periodic_orbits(&OneDMap::quadratic(2.0), MAX_PERIOD + 1), Err(Error::Precondition(_))));
}

proptest! {
    #[test]
    fn derivatives_match_finite_differences(a in 1.5..2.5f64, s in -1e-2..1e-2f64, x in -1.4..1.4f64) {
        let g = bump(a, s);
        let h = 1e-5;
        let fd = (g.apply(x + h) - g.apply(x - h)) / (2.0 * h);
        prop_assert!((fd - g.derivative(x)).abs() <= 1e-6 * g.derivative(x).abs().max(1.0));
        let fd2 = (g.derivative(x + h) - g.derivative(x - h)) / (2.0 * h);
        prop_assert!((fd2 - g.second_derivative(x)).abs() <= 1e-6 * g.second_derivative(x).abs());
        prop_assert!((g.eta() - 9.0 * s.abs()).abs() < 1e-15);
    }

    #[test]
    fn iterate_jet_is_the_chain_rule(a in 1.8..2.3f64, x in -0.9..0.9f64, n in 1usize..8) {
        let g = OneDMap::quadratic(a);
        let (mut u, mut d) = (x, 1.0);
        for _ in 0..n {
            d *= -2.0 * a * u;
            u = 1.0 - a * u * u;
        }
        let (v, dv) = g.iterate_jet(x, n);
        prop_assert!((v - u).abs() < 1e-12);
        prop_assert!((dv - d).abs() <= 1e-12 * d.abs().max(1.0));
    }
}
