mod common;

use common::*;
use hypermetric::contour::{integrate_circle, laurent_coeff, principal_part};
use hypermetric::developing::DevelopingMap;
use hypermetric::meromorphic::locate_zeros;
use hypermetric::schwarzian::{
    classify_all, classify_point, indicial_exponents, numeric_schwarzian, schwarzian_from_h,
    ClassifySettings,
};
use hypermetric::{
    c64, Circle, Complex64, Disc, MeromorphicSum, PrincipalPart, SingularityKind, SingularitySource,
    Term, ZeroSearch,
};
use proptest::prelude::*;
use rand::Rng;

fn schwarzian_pp(h: &MeromorphicSum, p: Complex64, radius: f64) -> PrincipalPart {
    let g = |z: Complex64| schwarzian_from_h(h, z).unwrap_or(c64(f64::NAN, f64::NAN));
    principal_part(g, p, radius).unwrap()
}

fn two_pole() -> MeromorphicSum {
    MeromorphicSum::new(vec![Term::real(1.0, 0.5), Term::real(1.0, -0.5)]).unwrap()
}

fn three_fold() -> MeromorphicSum {
    let w = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
    MeromorphicSum::new((0..3).map(|k| Term::new(c64(1.0, 0.0), 0.5 * w.powi(k))).collect()).unwrap()
}

#[test]
fn circle_quadrature_examples() {
    let c = Circle::new(c64(0.0, 0.0), 1.0, 64).unwrap();
    let q = integrate_circle(|z: Complex64| 1.0 / z, &c).unwrap();
    assert!((q.value - c64(0.0, std::f64::consts::TAU)).norm() < 1e-12);
    let c = Circle::new(c64(0.3, -0.2), 2.5, 64).unwrap();
    assert!(integrate_circle(|z: Complex64| z * z, &c).unwrap().value.norm() < 1e-12);
}

#[test]
fn laurent_examples() {
    let g = |z: Complex64| 0.5 / (z * z);
    assert!((laurent_coeff(g, c64(0.0, 0.0), 0.7, -2).unwrap().value - 0.5).norm() < 1e-13);
    let g = |z: Complex64| 3.0 / (z * z) + 5.0 / z + 7.0;
    assert!((laurent_coeff(g, c64(0.0, 0.0), 0.7, -1).unwrap().value - 5.0).norm() < 1e-13);
    let g = |z: Complex64| 0.5 / (z * z) + 3.0 / z + z.exp();
    let pp = principal_part(g, c64(0.0, 0.0), 0.5).unwrap();
    assert!((pp.c2 - 0.5).norm() < 1e-13 && (pp.c1 - 3.0).norm() < 1e-13);
}

#[test]
fn schwarzian_of_reciprocal() {
    let h = MeromorphicSum::new(vec![Term::real(1.0, 0.0)]).unwrap();
    let s = schwarzian_from_h(&h, c64(2.0, 0.0)).unwrap();
    assert!((s - 0.125).norm() < 1e-15);
}

#[test]
fn schwarzian_at_zero_is_refused() {
    assert!(matches!(
        schwarzian_from_h(&two_pole(), c64(0.0, 0.0)),
        Err(hypermetric::Error::ZeroProximity { .. })
    ));
}

#[test]
fn simple_zero_of_two_pole_has_c2_minus_three_halves() {
    let pp = schwarzian_pp(&two_pole(), c64(0.0, 0.0), 0.2);
    assert!((pp.c2 - (-1.5)).norm() < 1e-10, "{pp:?}");
    assert!(pp.accepted());
}

#[test]
fn double_zero_has_c2_minus_four() {
    let h = three_fold();
    let zs = locate_zeros(&h, &Disc::centered(0.9), &ZeroSearch::default()).unwrap();
    assert_eq!((zs.len(), zs[0].multiplicity), (1, 2));
    let pp = schwarzian_pp(&h, zs[0].location, 0.2);
    assert!((pp.c2 - (-4.0)).norm() < 1e-7, "{pp:?}");
}

#[test]
fn cusp_coefficient_is_universal() {
    let mut rng = rng(21);
    for _ in 0..40 {
        let n = rng.gen_range(1..=6);
        let h = random_positive_instance(&mut rng, n, 1.0, 0.1);
        let zeros = oracle_zeros(&h);
        for p in h.poles() {
            // nothing but p inside the extraction circle
            let r = h
                .poles()
                .filter(|&q| q != p)
                .chain(zeros.iter().copied())
                .map(|q| 0.5 * (q - p).norm())
                .fold(0.5, f64::min);
            let pp = schwarzian_pp(&h, p, r);
            assert!((pp.c2 - 0.5).norm() < 1e-7, "{pp:?}");
        }
    }
}

#[test]
fn cone_law_at_located_zeros() {
    let mut rng = rng(22);
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let h = random_positive_instance(&mut rng, n, 1.0, 0.1);
        let reports = classify_all(&h, &Disc::centered(1.0), &ClassifySettings::default()).unwrap();
        for r in reports.iter().filter(|r| matches!(r.source, SingularitySource::ZeroOfH { .. })) {
            assert!((r.c2 - (-1.5)).norm() < 1e-7, "{r:?}");
            assert!(!r.flag);
        }
    }
}

#[test]
fn numeric_schwarzian_examples() {
    let mobius = |z: Complex64| (2.0 * z + c64(0.0, 1.0)) / (z - 3.0);
    assert!(numeric_schwarzian(mobius, c64(0.2, 0.1), 1e-2).unwrap().norm() < 1e-6);
    let cube = |z: Complex64| z * z * z;
    assert!((numeric_schwarzian(cube, c64(1.0, 0.0), 1e-2).unwrap() - (-4.0)).norm() < 1e-6);
    let s = numeric_schwarzian(|z: Complex64| z.exp(), c64(0.3, -0.7), 1e-2).unwrap();
    assert!((s + 0.5).norm() < 1e-6);
    assert!(numeric_schwarzian(|_| c64(1.0, 0.0), c64(0.0, 0.0), 1e-2).is_err());
}

#[test]
fn schwarzian_paths_agree_on_developing_map() {
    let mut rng = rng(23);
    let h = random_positive_instance(&mut rng, 4, 1.0, 0.2);
    let zeros: Vec<Complex64> = locate_zeros(&h, &Disc::centered(1.5), &ZeroSearch::default())
        .unwrap()
        .iter()
        .map(|z| z.location)
        .collect();
    let map = DevelopingMap::new(&h, 5.0).unwrap().with_zeros(zeros);
    let mut tested = 0;
    while tested < 25 {
        let z = uniform_in_disc(&mut rng, 1.2);
        let d = map.singular_distance(z);
        if d < 0.02 {
            continue;
        }
        let f0 = map.sample(z).unwrap().value;
        let f = |w: Complex64| f0 + map.increment(z, w).unwrap();
        let numeric = numeric_schwarzian(f, z, 0.05 * d).unwrap();
        let exact = schwarzian_from_h(&h, z).unwrap();
        assert!((numeric - exact).norm() < 1e-5 * exact.norm().max(1.0), "{z}: {numeric} vs {exact}");
        tested += 1;
    }
}

#[test]
fn classification_examples() {
    let cusp = classify_point(&pp(0.5, 0.0), 1e-6).unwrap();
    assert_eq!((cusp.kind, cusp.theta, cusp.indicial), (SingularityKind::Cusp, 0.0, (0.5, 0.5)));
    let cone = classify_point(&pp(-1.5, 0.7), 1e-6).unwrap();
    assert_eq!(cone.kind, SingularityKind::Cone { theta: 2.0 });
    assert_eq!(cone.indicial, (1.5, -0.5));
    assert!((cone.angle() - 4.0 * std::f64::consts::PI).abs() < 1e-15);
    let regular = classify_point(&pp(0.0, 0.0), 1e-6).unwrap();
    assert_eq!((regular.kind, regular.theta), (SingularityKind::Regular, 1.0));
    assert!(classify_point(&pp(0.7, 0.0), 1e-6).is_err());
    let mut tilted = pp(-1.5, 0.0);
    tilted.c2.im = 1e-3;
    assert!(classify_point(&tilted, 1e-6).is_err());
}

fn pp(c2: f64, c1: f64) -> PrincipalPart {
    PrincipalPart {
        center: c64(0.0, 0.0),
        c2: c64(c2, 0.0),
        c1: c64(c1, 0.0),
        extraction_radius: 0.1,
        estimate: 0.0,
    }
}

#[test]
fn classification_round_trip() {
    for theta in [0.0, 0.3, 1.0, 2.0, 5.0] {
        let c2 = 0.5 * (1.0 - theta * theta);
        // c1 keeps theta = 1 from reading as a regular point
        let r = classify_point(&pp(c2, 1.0), 1e-6).unwrap();
        assert!((r.theta - theta).abs() < 1e-9);
        let (e1, e2) = indicial_exponents(c64(c2, 0.0));
        assert!((e1 - 0.5 * (1.0 + theta)).norm() < 1e-12);
        assert!((e2 - 0.5 * (1.0 - theta)).norm() < 1e-12);
    }
}

#[test]
fn indicial_examples() {
    assert_eq!(indicial_exponents(c64(0.5, 0.0)), (c64(0.5, 0.0), c64(0.5, 0.0)));
    assert_eq!(indicial_exponents(c64(0.0, 0.0)), (c64(1.0, 0.0), c64(0.0, 0.0)));
    assert_eq!(indicial_exponents(c64(-1.5, 0.0)), (c64(1.5, 0.0), c64(-0.5, 0.0)));
}

#[test]
fn classify_two_pole() {
    let reports = classify_all(&two_pole(), &Disc::centered(0.9), &ClassifySettings::default()).unwrap();
    let cusps: Vec<Complex64> = reports.iter().filter(|r| r.kind == SingularityKind::Cusp).map(|r| r.location).collect();
    let cones: Vec<_> = reports.iter().filter(|r| matches!(r.kind, SingularityKind::Cone { .. })).collect();
    assert_eq!(cusps, vec![c64(0.5, 0.0), c64(-0.5, 0.0)]);
    assert_eq!(cones.len(), 1);
    assert!(cones[0].location.norm() < 1e-12 && (cones[0].theta - 2.0).abs() < 1e-7);
    assert!(reports.iter().all(|r| !r.flag));
}

#[test]
fn classify_reciprocal() {
    let h = MeromorphicSum::new(vec![Term::real(1.0, 0.0)]).unwrap();
    let reports = classify_all(&h, &Disc::centered(0.9), &ClassifySettings::default()).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].kind, SingularityKind::Cusp);
}

#[test]
fn classify_h0_on_r6() {
    let h = MeromorphicSum::h0(1).unwrap();
    let reports = classify_all(&h, &Disc::centered(1.0 - 1.0 / 12.0), &ClassifySettings::default()).unwrap();
    let cusps = reports.iter().filter(|r| r.kind == SingularityKind::Cusp).count();
    let cones: Vec<_> = reports.iter().filter(|r| matches!(r.kind, SingularityKind::Cone { .. })).collect();
    assert_eq!((cusps, cones.len()), (6, 5));
    for c in cones {
        assert_eq!(c.source, SingularitySource::ZeroOfH { multiplicity: 1 });
        assert!((c.angle() - 4.0 * std::f64::consts::PI).abs() < 1e-6);
    }
    // 30 terms leave a tail of about 1e-5 inside r6; the numerator roots
    // there are simple and sit next to the located zeros
    let roots: Vec<Complex64> = secular_zeros(&MeromorphicSum::h0_partial(30).unwrap())
        .into_iter()
        .filter(|z| z.norm() < 1.0 - 1.0 / 12.0)
        .collect();
    assert_eq!(roots.len(), 5);
    let located: Vec<Complex64> = reports.iter().filter(|r| r.kind != SingularityKind::Cusp).map(|r| r.location).collect();
    assert!(match_distance(&roots, &located) < 1e-3, "{roots:?} {located:?}");
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            assert!((a - b).norm() > 1e-6);
        }
    }
}

proptest! {
    #[test]
    fn indicial_exponents_sum_to_one(re in -50.0f64..50.0, im in -50.0f64..50.0) {
        let (a, b) = indicial_exponents(c64(re, im));
        prop_assert_eq!(a + b, c64(1.0, 0.0));
    }

    #[test]
    fn cusp_coefficient_ignores_the_residue(a in 1e-3f64..1e3, p_re in -1.0f64..1.0, p_im in -1.0f64..1.0) {
        let h = MeromorphicSum::new(vec![Term::new(c64(a, 0.0), c64(p_re, p_im)), Term::real(1.0, 3.0)]).unwrap();
        let pp = schwarzian_pp(&h, c64(p_re, p_im), 0.3);
        prop_assert!((pp.c2 - 0.5).norm() < 1e-7);
    }
}
