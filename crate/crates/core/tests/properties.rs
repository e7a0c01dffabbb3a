use proptest::prelude::*;
use renorm::tower::{build_d, step};
use renorm::{rat, ExactBody, Projection, Rational};

fn symmetric_body(dim: usize, raw: &[(i64, i64, i64)]) -> Option<ExactBody> {
    let mut pts: Vec<Vec<Rational>> = raw
        .chunks(1)
        .map(|c| {
            let (a, b, d) = c[0];
            let mut v = vec![rat(a, 4), rat(b, 4), rat(d, 4)];
            v.truncate(dim);
            v
        })
        .collect();
    for i in 0..dim {
        let mut e = vec![rat(0, 1); dim];
        e[i] = rat(1, 1);
        pts.push(e);
    }
    ExactBody::from_vrep(dim, pts).ok()
}

fn point(dim: usize, raw: (i64, i64, i64)) -> Vec<Rational> {
    let mut v = vec![rat(raw.0, 7), rat(raw.1, 7), rat(raw.2, 7)];
    v.truncate(dim);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn step_relations_hold(
        dim in 2usize..=3,
        raw in prop::collection::vec((-8i64..=8, -8i64..=8, -8i64..=8), 2..6),
        lam in 1i64..=8,
        k_off in 0usize..2,
        probes in prop::collection::vec((-9i64..=9, -9i64..=9, -9i64..=9), 20),
    ) {
        let Some(b) = symmetric_body(dim, &raw) else { return Ok(()) };
        let k = 1 + k_off.min(dim - 2);
        let lambda = rat(lam, 4);
        let half = rat(1, 2);
        let (tilde, cert) = step(&b, k, &lambda, &half).unwrap();
        let one = rat(1, 1);
        let p = Projection::new(k);
        for raw in probes {
            let x = point(dim, raw);
            let (nb, nt) = (b.gauge(&x), tilde.gauge(&x));
            prop_assert!(nt <= nb && nb <= (&one + &lambda) * &nt);
            let t = p.tail(&x);
            prop_assert_eq!(b.gauge(&t), cert.tail_factor() * tilde.gauge(&t));
        }
        // the hull's trace on the tail space stays under the bound
        for v in cert.c.section_vertices(k).unwrap() {
            prop_assert!(b.gauge(&v) <= cert.hull_tail_bound());
        }
    }

    #[test]
    fn set_algebra_laws(
        raw in prop::collection::vec((-8i64..=8, -8i64..=8, -8i64..=8), 2..6),
        probes in prop::collection::vec((-9i64..=9, -9i64..=9, -9i64..=9), 10),
    ) {
        let Some(b) = symmetric_body(3, &raw) else { return Ok(()) };
        prop_assert!(b.hull_union(&b).unwrap().same_set(&b));
        let twice = b.scaled(&rat(2, 1)).unwrap();
        prop_assert!(b.hull_union(&twice).unwrap().same_set(&twice));
        let tail = Projection::new(1);
        let extent = b.all_vertices().map(|v| b.gauge(&tail.tail(&v))).max().unwrap();
        prop_assert!(b.intersect_slab(&b, 1, &extent).unwrap().same_set(&b));
        let d = build_d(&b, 1, &rat(1, 2), &rat(0, 1)).unwrap();
        prop_assert!(d.same_set(&b.intersect_slab(&b, 1, &rat(1, 2)).unwrap()));
        for raw in probes {
            let x = point(3, raw);
            let sx: Vec<Rational> = x.iter().map(|v| v * rat(-5, 3)).collect();
            prop_assert_eq!(b.gauge(&sx), rat(5, 3) * b.gauge(&x));
            prop_assert_eq!(b.gauge(&x), b.gauge_lp(&x).unwrap());
        }
    }
}
