use hypbound::fixed_points::{find_fixed_points, local_manifold_seed, one_d_fixed_points, FixedPointLabel, ManifoldKind, Orientation};
use hypbound::map_core::{HenonLikeMap, PlanarMap};
use hypbound::Error;
use proptest::prelude::*;

/// Roots of a x² + (1 − b) x − 1 = 0, the fixed points on y = b x.
fn closed_form(a: f64, b: f64) -> (f64, f64) {
    let disc = ((1.0 - b) * (1.0 - b) + 4.0 * a).sqrt();
    ((-(1.0 - b) + disc) / (2.0 * a), (-(1.0 - b) - disc) / (2.0 * a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fixed_point_invariants(a in 1.8..2.6f64, b in prop_oneof![-0.3..-1e-3f64, 1e-3..0.3f64]) {
        let f = HenonLikeMap::henon(a, b);
        let (p, q) = find_fixed_points(&f).unwrap();
        let (xp, xq) = closed_form(a, b);
        for (fp, x) in [(p, xp), (q, xq)] {
            prop_assert!(f.apply(fp.location).dist(fp.location) <= 1e-12);
            prop_assert!((fp.location.x - x).abs() <= 1e-12);
            let det = f.jacobian(fp.location).det();
            prop_assert!((fp.lambda_exp * fp.lambda_con - det).abs() <= 1e-12);
            prop_assert!(fp.lambda_exp.abs() > 1.0 && fp.lambda_con.abs() < 1.0);
            prop_assert_eq!(fp.orientation, if b > 0.0 { Orientation::Reversing } else { Orientation::Preserving });
            prop_assert_eq!(fp.orientation == Orientation::Reversing, det < 0.0);
        }
        prop_assert_eq!(p.label, FixedPointLabel::P);
        prop_assert!(p.location.x > 0.0 && q.location.x < 0.0);
    }
}

#[test]
fn eigenvalues_at_small_b() {
    let f = HenonLikeMap::henon(2.0, 1e-3);
    let (p, q) = find_fixed_points(&f).unwrap();
    assert!((q.lambda_exp - 4.0).abs() < 0.05 && q.lambda_exp > 0.0);
    assert!((p.lambda_exp + 2.0).abs() < 0.05);
}

#[test]
fn eigen_data_at_b_005() {
    let f = HenonLikeMap::henon(2.0, 0.05);
    let (_, q) = find_fixed_points(&f).unwrap();
    let x = q.location.x;
    // Eigenvalues of [[−4x, 1], [0.05, 0]].
    let disc = (4.0 * x * x + 0.05).sqrt();
    assert!((q.lambda_exp - (-2.0 * x + disc)).abs() < 1e-12);
    assert!((q.lambda_con - (-2.0 * x - disc)).abs() < 1e-12);
    assert!((x + 0.983427).abs() < 1e-6);
}

#[test]
fn one_dimensional_limit() {
    let f = HenonLikeMap::henon(2.0, 1e-9);
    let (p, q) = find_fixed_points(&f).unwrap();
    assert!((p.location.x - 0.5).abs() < 1e-6 && p.location.y.abs() < 1e-6);
    assert!((q.location.x + 1.0).abs() < 1e-6 && q.location.y.abs() < 1e-6);
    assert_eq!(one_d_fixed_points(2.0).unwrap(), (0.5, -1.0));
    let (pa, qa) = one_d_fixed_points(2.5).unwrap();
    assert!((pa - (-1.0 + 11f64.sqrt()) / 5.0).abs() < 1e-15);
    assert!((qa - (-1.0 - 11f64.sqrt()) / 5.0).abs() < 1e-15);
    assert!(matches!(one_d_fixed_points(-1.0), Err(Error::ComplexRoots(_))));
}

#[test]
fn local_seeds() {
    let f = HenonLikeMap::henon(2.0, 1e-3);
    let (p, q) = find_fixed_points(&f).unwrap();
    let slope = |fp, kind| {
        let s = local_manifold_seed(fp, kind, 0.05).unwrap();
        let d = *s.vertices.last().unwrap() - s.vertices[0];
        d.y / d.x
    };
    assert!((slope(&q, ManifoldKind::Stable) + 4.0).abs() < 0.05);
    assert!((slope(&p, ManifoldKind::Stable) - 2.0).abs() < 0.05);
    assert!(slope(&p, ManifoldKind::Unstable).abs() < 1e-3);
    let s = local_manifold_seed(&q, ManifoldKind::Unstable, 0.05).unwrap();
    assert!(s.vertices.contains(&q.location));
    assert!(local_manifold_seed(&q, ManifoldKind::Unstable, 0.2).is_err());
}
