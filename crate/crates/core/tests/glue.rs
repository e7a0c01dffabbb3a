use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renorm::glue::{BumpPhi, GlueFamily};
use renorm::planner::{geometric_epsilon, plan_and_build, ParameterPlan};
use renorm::tower::RenormTower;
use renorm::{rat, ExactBody, Glue, Rational, Scalar};

fn fixture() -> (RenormTower<Rational>, ParameterPlan) {
    plan_and_build(&ExactBody::unit_cube(2), &[rat(1, 2), rat(1, 4), rat(1, 8)], 2).unwrap()
}

fn random_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            if v.iter().any(|t| t.abs() > 1e-3) {
                break v;
            }
        })
        .collect()
}

/// Plain bisection on `Φ(x/ρ) = 1` through the public sum, as a reference.
fn reference_root(fam: &Glue, x: &[f64]) -> f64 {
    let mut lo = 1e-9;
    let mut hi = 1e3;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let z: Vec<f64> = x.iter().map(|v| v / mid).collect();
        if fam.phi_sum(&z).unwrap().value > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn bump_endpoints() {
    for phi in [BumpPhi::<f64>::smooth(0.1).unwrap(), BumpPhi::piecewise_linear(0.1).unwrap()] {
        assert_eq!(phi.value(0.0), 0.0);
        assert_eq!(phi.value(0.9), 0.0);
        assert_eq!(phi.derivative(0.9), 0.0);
        assert!((phi.value(1.0) - 1.0f64).abs() < 1e-15);
    }
}

#[test]
fn root_matches_reference_and_sits_in_bracket() {
    let (tower, plan) = fixture();
    let fam = Glue::smooth(&tower, &plan).unwrap();
    let d0 = fam.delta(0);
    for x in random_points(2, 1000, 11) {
        let (rho, diag) = fam.final_gauge_with_diagnostics(&x).unwrap();
        let diag = diag.unwrap();
        let sup = fam.sup_norm(&x);
        assert!(sup <= rho && rho <= (1.0 + d0) / (1.0 - d0) * sup);
        assert!(diag.iterations() <= 200);
        assert!(diag.residual / -diag.d2psi <= 1e-12 * rho);
        assert!(diag.d2psi < 0.0);
        let r = reference_root(&fam, &x);
        assert!((rho - r).abs() <= 1e-10 * r, "{rho} vs {r}");
    }
}

#[test]
fn homogeneity_convexity_and_gradient() {
    let (tower, plan) = fixture();
    let fam = Glue::smooth(&tower, &plan).unwrap();
    let pts = random_points(2, 100, 12);
    for w in pts.windows(2) {
        let (x, y) = (&w[0], &w[1]);
        let rx = fam.final_gauge(x).unwrap();
        for s in [-3.0, 0.5, 7.0] {
            let sx: Vec<f64> = x.iter().map(|v| v * s).collect();
            assert!((fam.final_gauge(&sx).unwrap() - s.abs() * rx).abs() <= 1e-12 * s.abs() * rx);
        }
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        let ry = fam.final_gauge(y).unwrap();
        assert!(fam.final_gauge(&mid).unwrap() <= 0.5 * (rx + ry) * (1.0 + 1e-12));

        let g = fam.final_gradient(x).unwrap();
        let euler: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        assert!((euler - rx).abs() <= 1e-9 * rx);
        let h = 1e-5;
        let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..2 {
            let mut p = x.clone();
            let mut m = x.clone();
            p[i] += h;
            m[i] -= h;
            let fd = (fam.final_gauge(&p).unwrap() - fam.final_gauge(&m).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * scale, "{fd} vs {}", g[i]);
        }
        let g3 = fam.final_gradient(&x.iter().map(|v| v * 3.0).collect::<Vec<_>>()).unwrap();
        for (a, b) in g.iter().zip(&g3) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
    let at_zero = fam.evaluate(&[0.0, 0.0]).unwrap();
    assert_eq!(at_zero.value, 0.0);
    assert!(at_zero.gradient.is_none());
}

#[test]
fn quiet_region_and_single_level_sum() {
    let (tower, plan) = fixture();
    let fam = Glue::smooth(&tower, &plan).unwrap();
    let d0 = fam.delta(0);
    assert_eq!(fam.phi_sum(&[0.0, 0.0]).unwrap().value, 0.0);
    for x in random_points(2, 200, 13) {
        let sup = fam.sup_norm(&x);
        let z: Vec<f64> = x.iter().map(|v| v / sup * (1.0 - d0) / (1.0 + d0)).collect();
        assert_eq!(fam.phi_sum(&z).unwrap().value, 0.0);
    }
    // scale e₂ so that its largest smoothed level sits just inside its bump
    let e2 = [0.0, 1.0];
    let s = fam.smooth_norms(&e2);
    let (n, top) = s.iter().enumerate().fold((0, 0.0), |a, (n, v)| if *v > a.1 { (n, *v) } else { a });
    let z = [0.0, (1.0 - fam.delta(n) / 4.0) / top];
    let sum = fam.phi_sum(&z).unwrap();
    assert!(sum.active.contains(&n));
    if sum.active.len() == 1 {
        assert_eq!(sum.value, fam.level(n).phi.value(fam.smooth_norms(&z)[n]));
    }
}

#[test]
fn active_set_and_local_witness() {
    let (tower, plan) = fixture();
    let fam = Glue::smooth(&tower, &plan).unwrap();
    let e1 = [1.0, 0.0];
    let rho = fam.final_gauge(&e1).unwrap();
    let set = fam.active_set(&e1.map(|v| v / rho)).unwrap();
    assert_eq!(set.n0, Some(1));
    assert!(set.window.iter().all(|n| *n <= 3));
    let near_zero = fam.active_set(&[1e-9, -1e-9]).unwrap();
    assert!(near_zero.active.is_empty());
    assert_eq!(fam.active_set(&[0.0, 0.0]).unwrap().n0, None);
    assert_eq!(fam.active_set(&[0.5, 0.0]).unwrap().n0, Some(1));

    let rows: usize = (0..=fam.top()).map(|n| fam.level(n).norm.len()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for x in random_points(2, 50, 15) {
        let w = fam.lfc_witness(&x).unwrap();
        let expect: usize = w.levels.iter().map(|&n| fam.level(n).norm.len()).sum();
        assert_eq!(w.functionals.len(), expect);
        assert!(w.functionals.len() <= rows);
        assert!(w.radius > 0.0);
        for _ in 0..5 {
            let dir: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n0 = fam.seed_norm(&dir);
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + 0.99 * w.radius * d / n0).collect();
            let full = fam.final_gauge(&y).unwrap();
            let part = fam.final_gauge_restricted(&y, &w.levels).unwrap();
            assert!((full - part).abs() <= 1e-12 * full);
        }
    }
}

#[test]
fn fixture_tail_vector_within_plan() {
    let (tower, plan) = fixture();
    let fam = Glue::smooth(&tower, &plan).unwrap();
    let eps1 = plan.epsilon[1].to_f64_lossy();
    let v = fam.final_gauge(&[0.0, 1.0]).unwrap();
    assert!(v <= 1.0 + eps1 && v >= 1.0 - eps1, "{v}");
}

#[test]
fn polyhedral_family_is_exact() {
    let (tower, plan) = fixture();
    let fam: GlueFamily<f64> = GlueFamily::polyhedral(&tower, &plan).unwrap();
    let fin = fam.polyhedral_final().unwrap();
    assert!(!fin.body.vertices().is_empty());
    for v in fin.body.all_vertices() {
        assert_eq!(fam.exact_gauge(&v).unwrap(), rat(1, 1));
    }
    for x in random_points(2, 200, 16) {
        let q: Vec<Rational> = x.iter().map(|t| rat((t * 1000.0).round() as i64, 1000)).collect();
        let exact = fam.exact_gauge(&q).unwrap();
        assert_eq!(fin.body.gauge(&q), exact);
        let xf: Vec<f64> = q.iter().map(|t| t.to_f64_lossy()).collect();
        let float = fam.final_gauge(&xf).unwrap();
        assert!((float - exact.to_f64_lossy()).abs() <= 1e-10 * float);
    }
    for n in 0..2 {
        assert!(fam.certify_tail_bound(&fin.body, n).unwrap().holds());
    }
}

#[test]
fn single_level_collapses_to_the_seed() {
    let eps = geometric_epsilon(&rat(1, 10), 0);
    let (tower, plan) = plan_and_build(&ExactBody::cross_polytope(3), &eps, 0).unwrap();
    let fam: GlueFamily<f64> = GlueFamily::polyhedral(&tower, &plan).unwrap();
    for x in random_points(3, 50, 17) {
        let q: Vec<Rational> = x.iter().map(|t| rat((t * 64.0).round() as i64, 64)).collect();
        assert_eq!(fam.exact_gauge(&q).unwrap(), tower.rescaled(0, &q));
    }
}
