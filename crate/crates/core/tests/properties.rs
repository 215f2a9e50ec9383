use minwidth::coding::{decode, decode_index, encode, encode_index, quantize, pow2};
use minwidth::exact::{self, Rational};
use minwidth::geometry::{network_path, parity, pl_sup_distance, random_width2_net, Barrier, Polyline, Vertex, P2};
use minwidth::metrics::{sup_error, Quadrature};
use minwidth::net::{Activation, Layer};
use minwidth::{Error, Network, NumericMode, TargetFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn polyline(knots: &[i64], denom: i64, pts: &[(i64, i64)]) -> Polyline {
    let vs = knots
        .iter()
        .zip(pts)
        .map(|(&t, &(x, y))| Vertex { t: exact::ratio(t, denom), p: P2::new(exact::ratio(x, 8), exact::ratio(y, 8)) })
        .collect();
    Polyline::new(vs).unwrap()
}

/// Sorted distinct interior knots in `1..denom`, framed by `0` and `denom`.
fn knots_strategy(denom: i64, max: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::btree_set(1..denom, 0..max).prop_map(move |s| {
        let mut v = vec![0];
        v.extend(s);
        v.push(denom);
        v
    })
}

fn curve_strategy() -> impl Strategy<Value = Polyline> {
    knots_strategy(16, 6).prop_flat_map(|ks| {
        let n = ks.len();
        prop::collection::vec((-40i64..40, -40i64..40), n).prop_map(move |pts| polyline(&ks, 16, &pts))
    })
}

fn f64_sup(a: &Polyline, b: &Polyline, n: usize) -> f64 {
    (0..=n).fold(0.0, |m, i| {
        let t = i as f64 / n as f64;
        let (p, q) = (a.eval_f64(t), b.eval_f64(t));
        m.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sup_distance_is_a_metric(a in curve_strategy(), b in curve_strategy(), c in curve_strategy()) {
        let ab = pl_sup_distance(&a, &b).unwrap();
        prop_assert_eq!(&ab, &pl_sup_distance(&b, &a).unwrap());
        prop_assert_eq!(pl_sup_distance(&a, &a).unwrap(), exact::int(0));
        let bc = pl_sup_distance(&b, &c).unwrap();
        prop_assert!(pl_sup_distance(&a, &c).unwrap() <= ab + bc);
    }

    #[test]
    fn sup_distance_matches_breakpoint_grid(a in curve_strategy(), b in curve_strategy()) {
        // every knot is a multiple of 1/16, so a 1/256 grid hits all of them
        let exact_d = exact::to_f64(&pl_sup_distance(&a, &b).unwrap());
        prop_assert!((f64_sup(&a, &b, 256) - exact_d).abs() <= 1e-12);
    }

    #[test]
    fn quantizer_brackets_input(x in 0.0f64..1.0, n in 1u32..20) {
        let q = quantize(x, n).unwrap();
        prop_assert!(q <= x && x < q + pow2(-(n as i32)));
        prop_assert_eq!(q * pow2(n as i32), (q * pow2(n as i32)).floor());
    }

    #[test]
    fn decode_inverts_encode(idx in prop::collection::vec(0u64..16, 1..4)) {
        let m = 4;
        let v: Vec<f64> = idx.iter().map(|&i| i as f64 / 16.0).collect();
        let c = encode(&v, m).unwrap();
        prop_assert_eq!(decode(c, m, v.len()).unwrap(), v.clone());
        prop_assert_eq!(decode_index(encode_index(&v, m).unwrap(), m, v.len()), idx);
    }

    #[test]
    fn document_round_trip(
        weights in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 9),
        bias in prop::collection::vec(-1e6f64..1e6, 5),
        dyadic in any::<bool>(),
    ) {
        let l1 = Layer::new(
            vec![weights[0..2].to_vec(), weights[2..4].to_vec(), weights[4..6].to_vec()],
            bias[0..3].to_vec(),
            vec![Activation::Relu, Activation::Step, Activation::Relu],
        );
        let l2 = Layer::affine(vec![weights[6..9].to_vec(), vec![1.0, 0.0, -1.0]], bias[3..5].to_vec());
        let net = Network::new(2, vec![l1, l2]).unwrap();
        let mode = if dyadic { NumericMode::Dyadic } else { NumericMode::Float64 };
        let back = Network::from_json(&net.to_json(mode)).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn parity_matches_ray_casting(
        pts in prop::collection::vec((-6i64..6, -6i64..6), 3..9),
        px in -20i64..20,
        py in -20i64..20,
    ) {
        let ks: Vec<i64> = (0..pts.len() as i64).collect();
        let poly = polyline(&ks, 1, &pts.iter().map(|&(x, y)| (8 * x, 8 * y)).collect::<Vec<_>>());
        let mut b = Barrier::new();
        b.push_closed(&poly);
        // ninths keep the point off every vertex and off horizontal edges
        let (x, y) = (exact::ratio(3 * px + 1, 9), exact::ratio(3 * py + 1, 9));
        let got = parity(&P2::new(x.clone(), y.clone()), &b);
        if on_edge(&pts, &x, &y) {
            prop_assert!(matches!(got, Err(Error::OnBarrier)));
        } else {
            prop_assert_eq!(got.unwrap(), ray_cast(&pts, &x, &y));
        }
    }
}

fn on_edge(pts: &[(i64, i64)], x: &Rational, y: &Rational) -> bool {
    let n = pts.len();
    (0..n).any(|i| {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let (ax, ay, bx, by) = (exact::int(a.0), exact::int(a.1), exact::int(b.0), exact::int(b.1));
        let collinear = (&bx - &ax) * (y - &ay) == (&by - &ay) * (x - &ax);
        let within = |p: &Rational, u: &Rational, v: &Rational| p >= u.min(v) && p <= u.max(v);
        collinear && within(x, &ax, &bx) && within(y, &ay, &by)
    })
}

/// Even-odd count of polygon edges crossed by the ray to `+x`.
fn ray_cast(pts: &[(i64, i64)], x: &Rational, y: &Rational) -> u8 {
    let n = pts.len();
    let mut inside = 0u8;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let (ay, by) = (exact::int(a.1), exact::int(b.1));
        if (&ay > y) != (&by > y) {
            let (ax, bx) = (exact::int(a.0), exact::int(b.0));
            let cx = &ax + (&bx - &ax) * (y - &ay) / (&by - &ay);
            if &cx > x {
                inside ^= 1;
            }
        }
    }
    inside
}

#[test]
fn sup_distance_dense_grid() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let curve = |rng: &mut ChaCha8Rng| {
        let mut ks: Vec<i64> = (1..64).filter(|_| rng.random_bool(0.2)).collect();
        ks.insert(0, 0);
        ks.push(64);
        let pts: Vec<(i64, i64)> = ks.iter().map(|_| (rng.random_range(-40..40), rng.random_range(-40..40))).collect();
        polyline(&ks, 64, &pts)
    };
    for _ in 0..3 {
        let (a, b) = (curve(&mut rng), curve(&mut rng));
        let exact_d = exact::to_f64(&pl_sup_distance(&a, &b).unwrap());
        let dense = f64_sup(&a, &b, 1 << 20);
        assert!((dense - exact_d).abs() <= 1e-12, "{dense} vs {exact_d}");
    }
}

#[test]
fn width2_path_matches_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for depth in 2..=8 {
        for _ in 0..10 {
            let net = random_width2_net(&mut rng, depth);
            let path = network_path(&net, &exact::int(0), &exact::int(1)).unwrap().to_polyline().unwrap();
            for i in 0..=1000 {
                let t = i as f64 / 1000.0;
                let (p, y) = (path.eval_f64(t), net.forward(&[t]));
                for c in 0..2 {
                    assert!((p[c] - y[c]).abs() <= 1e-9 * (1.0 + y[c].abs()), "depth {depth} t {t}: {p:?} vs {y:?}");
                }
            }
        }
    }
}

#[test]
fn sup_error_monotone_on_nested_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = TargetFunction::from_spec("builtin:mean", 2, 1, None).unwrap();
    for _ in 0..20 {
        let net = random_net(&mut rng);
        let mut prev = 0.0;
        for r in [3, 5, 9, 17, 33, 65] {
            let e = sup_error(&net, &f, &Quadrature::grid(r)).unwrap();
            assert!(e >= prev, "grid {r}: {e} < {prev}");
            prev = e;
        }
    }
}

fn random_net(rng: &mut ChaCha8Rng) -> Network {
    use rand::Rng;
    let mut w = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    };
    let (w1, w2, w3) = (w(3, 2), w(3, 3), w(1, 3));
    let l1 = Layer::new(w1, vec![0.1, -0.2, 0.3], vec![Activation::Relu; 3]);
    let l2 = Layer::new(w2, vec![0.0, 0.5, -0.5], vec![Activation::Relu; 3]);
    Network::new(2, vec![l1, l2, Layer::affine(w3, vec![0.0])]).unwrap()
}
