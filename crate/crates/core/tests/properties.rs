//! Randomised invariants across modules.

use affinescope::affine::{best_affine, legendre_p1, quasi_opt_ratio, AffineMap};
use affinescope::banach::{umd_ratio, DyadicMartingale};
use affinescope::geometry::{read_grid_binary, scalar_field, write_grid_binary};
use affinescope::{Ball, GridFunction, NormSpec, TargetNorm};
use proptest::prelude::*;

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.0..8.0]
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn norms_are_homogeneous_and_subadditive(p in exponent(), x in vector(3), y in vector(3), t in -5.0..5.0f64) {
        let norm = NormSpec::lp(p, 3).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| t * v).collect();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let (nx, ny) = (norm.eval(&x), norm.eval(&y));
        prop_assert!((norm.eval(&scaled) - t.abs() * nx).abs() <= 1e-12 * (1.0 + t.abs() * nx));
        prop_assert!(norm.eval(&sum) <= (nx + ny) * (1.0 + 1e-12) + 1e-12);
        prop_assert!((norm.dual_eval(&x) * nx) >= x.iter().map(|v| v * v).sum::<f64>() * (1.0 - 1e-9));
    }

    #[test]
    fn projection_is_linear(a in vector(2), b in vector(2), c in -3.0..3.0f64, center in vector(2), u in 0.1..2.0f64) {
        let (a, b) = ([a[0], a[1]], [b[0], b[1]]);
        let f = move |x: &[f64]| (a[0] * x[0]).sin() + a[1] * x[1] * x[1];
        let g = move |x: &[f64]| (b[0] * x[0] * x[1]).cos() + b[1] * x[0].abs();
        let center: Vec<f64> = center.iter().map(|v| v / 10.0).collect();
        let pf = legendre_p1(&scalar_field(2, f), &center, u).unwrap();
        let pg = legendre_p1(&scalar_field(2, g), &center, u).unwrap();
        let ph = legendre_p1(&scalar_field(2, move |x: &[f64]| f(x) + c * g(x)), &center, u).unwrap();
        let combo = AffineMap::new(
            vec![pf.intercept[0] + c * pg.intercept[0]],
            vec![vec![pf.linear[0][0] + c * pg.linear[0][0], pf.linear[0][1] + c * pg.linear[0][1]]],
        )
        .unwrap();
        let scale = 1.0 + combo.max_abs_diff(&AffineMap::constant(vec![0.0], 2));
        prop_assert!(combo.max_abs_diff(&ph) <= 1e-9 * scale);
    }

    #[test]
    fn projection_reproduces_affine_maps(a in -5.0..5.0f64, b in vector(3), center in vector(3), u in 0.1..2.0f64) {
        let exact = AffineMap::new(vec![a], vec![b.clone()]).unwrap();
        let scale = 1.0 + a.abs() + b.iter().map(|v| v.abs()).sum::<f64>();
        let field = scalar_field(3, move |x: &[f64]| a + b[0] * x[0] + b[1] * x[1] + b[2] * x[2]);
        let p = legendre_p1(&field, &center, u).unwrap();
        prop_assert!(p.max_abs_diff(&exact) <= 1e-10 * scale);
    }

    #[test]
    fn best_fit_is_never_worse_than_the_projection(seed in 0u64..1000, p in prop_oneof![Just(1.0), Just(2.0), Just(3.0)]) {
        use rand::Rng;
        let mut r = affinescope::rng::rng(seed);
        let vals: Vec<f64> = (0..9 * 9).map(|_| r.random_range(-1.0..1.0)).collect();
        let g = GridFunction::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![9, 9], vals, TargetNorm::scalar()).unwrap();
        let ball = Ball::euclidean(vec![0.0, 0.0], 0.8).unwrap();
        let q = quasi_opt_ratio(&g, &ball, p).unwrap();
        prop_assert!(q.best_error <= q.p1_error * (1.0 + 1e-6) + 1e-12);
        let fit = best_affine(&g, &ball, p).unwrap();
        prop_assert!((fit.error - q.best_error).abs() <= 1e-9 * (1.0 + fit.error));
    }

    #[test]
    fn binary_container_round_trips(res in prop::collection::vec(2usize..6, 1..4), m in 1usize..3, seed in 0u64..1000) {
        use rand::Rng;
        let mut r = affinescope::rng::rng(seed);
        let n = res.len();
        let len: usize = res.iter().product::<usize>() * m;
        let vals: Vec<f64> = (0..len).map(|_| r.random_range(-1e6..1e6)).collect();
        let g = GridFunction::new(vec![-1.0; n], vec![2.0; n], res, vals, TargetNorm::lq(m, 3.0)).unwrap();
        let mut bytes = Vec::new();
        write_grid_binary(&g, &mut bytes).unwrap();
        prop_assert_eq!(read_grid_binary(bytes.as_slice()).unwrap(), g);
    }

    #[test]
    fn hilbert_valued_transforms_preserve_the_l2_norm(seed in 0u64..10_000, depth in 1usize..7, bits in 0u32..64) {
        let mart = DyadicMartingale::random(TargetNorm::lq(2, 2.0), depth, seed).unwrap();
        let signs: Vec<i8> = (0..depth).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
        prop_assert!((umd_ratio(&mart, &signs, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_transforms_respect_burkholder(seed in 0u64..10_000, depth in 1usize..7, bits in 0u32..64, p in 1.2..6.0f64) {
        let mart = DyadicMartingale::random(TargetNorm::scalar(), depth, seed).unwrap();
        let signs: Vec<i8> = (0..depth).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
        let bound = affinescope::banach::burkholder_constant(p);
        prop_assert!(umd_ratio(&mart, &signs, p).unwrap() <= bound + 1e-9);
    }
}
