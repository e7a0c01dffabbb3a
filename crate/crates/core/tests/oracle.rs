use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renorm::oracle::{
    default_probes, estimate_basis_constant, infconv_gauge, max_gauge, numeric_tower, BasisConstants,
    EuclideanGauge, GaugeOracle, InfconvSettings, Oracle, PolytopeGauge, ScaledGauge, TailGauge,
};
use renorm::tower::{build_c, build_d, iterate};
use renorm::{rat, ExactBody, Rational, Scalar};

fn to_f64(v: &[Rational]) -> Vec<f64> {
    v.iter().map(|c| c.to_f64_lossy()).collect()
}

fn random_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect()
}

fn square() -> ExactBody {
    ExactBody::unit_cube(2)
}

#[test]
fn slab_max_matches_exact_d() {
    let b = square();
    let d = build_d(&b, 1, &rat(1, 2), &rat(1, 1)).unwrap();
    let seed: Oracle = Arc::new(PolytopeGauge::from_body(&b));
    let big: Oracle = Arc::new(ScaledGauge::new(seed.clone(), 2.0).unwrap());
    let slab: Oracle = Arc::new(TailGauge::new(seed, 1, 0.5).unwrap());
    let m = max_gauge(big, slab).unwrap();
    let exact = PolytopeGauge::from_body(&d);
    for x in random_points(2, 1000, 1) {
        let (a, e) = (m.value(&x).unwrap(), exact.value(&x).unwrap());
        assert!((a - e).abs() <= 1e-10 * e, "{x:?}: {a} vs {e}");
    }
}

#[test]
fn fixture_hull_within_reported_gap() {
    let b = square();
    let d = build_d(&b, 1, &rat(1, 2), &rat(1, 1)).unwrap();
    let (c, _) = build_c(&b, &d, 1, &rat(1, 1), &rat(2, 3)).unwrap();
    let exact = PolytopeGauge::from_body(&c);
    let seed: Oracle = Arc::new(PolytopeGauge::from_body(&b));
    let d_o: Oracle = Arc::new(PolytopeGauge::from_body(&d));
    for x in random_points(2, 1000, 2) {
        let v = infconv_gauge(d_o.clone(), seed.clone(), &x, 1e-10).unwrap();
        let e = exact.value(&x).unwrap();
        assert!((v.value() - e).abs() <= 1e-8 * e);
        assert!(v.lower <= e && e <= v.upper, "{x:?}: {v:?} vs {e}");
        assert!(v.value() <= seed.value(&x).unwrap() * (1.0 + 1e-10));
    }
    let at = infconv_gauge(d_o, seed, &[0.0, 1.0], 1e-10).unwrap();
    assert!((at.value() - 1.0).abs() < 1e-10);
}

#[test]
fn numeric_tower_tracks_exact_tower() {
    let b0 = ExactBody::unit_cube(3);
    let lambdas = [rat(1, 2), rat(1, 3), rat(1, 5)];
    let exact = iterate(&b0, &lambdas, 3).unwrap();
    let ks: Vec<f64> = (0..3).map(|n| exact.basis_constant(n).to_f64_lossy()).collect();
    let seed: Oracle = Arc::new(PolytopeGauge::from_body(&b0));
    let probes = default_probes(3);
    let lf: Vec<f64> = lambdas.iter().map(|l| l.to_f64_lossy()).collect();
    let tower = numeric_tower(seed, &lf, 3, &BasisConstants::Given(ks), &probes, 1e-7, InfconvSettings::default()).unwrap();
    assert_eq!(tower.checks.len(), 3);
    for n in 0..=3 {
        let body = exact.body(n);
        for x in random_points(3, 200, 3 + n as u64) {
            let a = tower.norm(n, &x).unwrap();
            let e = PolytopeGauge::from_body(body).value(&x).unwrap();
            assert!((a - e).abs() <= 1e-7 * e, "level {n} at {x:?}: {a} vs {e}");
        }
        for v in body.vertices() {
            let a = tower.norm(n, &to_f64(v)).unwrap();
            assert!((a - 1.0).abs() <= 1e-7);
        }
    }
}

#[test]
fn euclidean_one_step_tail_ratio() {
    let seed: Oracle = Arc::new(EuclideanGauge::unit(2));
    let probes = default_probes(2);
    let k = estimate_basis_constant(seed.as_ref(), &probes).unwrap();
    assert!((k - 1.0).abs() < 1e-15);
    let tower = numeric_tower(seed.clone(), &[1.0], 1, &BasisConstants::Estimate, &probes, 1e-7, InfconvSettings::default()).unwrap();
    let gamma = tower.gammas[1];
    assert!((gamma - 2.0 / 3.0).abs() < 1e-15);
    for t in [0.3, -1.0, 2.5] {
        let x = [0.0, t];
        let ratio = seed.value(&x).unwrap() / tower.norm(1, &x).unwrap();
        assert!((ratio - (1.0 + gamma)).abs() < 1e-9, "{ratio}");
    }
}

#[test]
fn zero_lambda_keeps_the_norm() {
    let seed: Oracle = Arc::new(PolytopeGauge::from_body(&ExactBody::cross_polytope(3)));
    let probes = default_probes(3);
    let tower = numeric_tower(seed.clone(), &[0.0, 0.0, 0.0], 3, &BasisConstants::Estimate, &probes, 1e-7, InfconvSettings::default()).unwrap();
    for x in random_points(3, 100, 9) {
        let e = seed.value(&x).unwrap();
        for n in 0..=3 {
            assert!((tower.norm(n, &x).unwrap() - e).abs() <= 1e-9 * e);
        }
    }
}

