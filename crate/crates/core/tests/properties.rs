//! Property tests for the group arithmetic, the norm and the content
//! estimator.

use carnot_core::algebra::{abelian, engel, heisenberg, StratifiedAlgebra};
use carnot_core::content::{content_upper, geometric_radii, ContentConfig};
use carnot_core::group::{CarnotGroup, GroupPoint};
use carnot_core::hom::Homomorphism;
use carnot_core::norm::{Metric, NormConfig};
use carnot_core::presets::parse_preset;
use carnot_core::scalar::{QSqrt2, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rational_vec(dim: usize) -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((-12i64..=12, 1i64..=6).prop_map(|(n, d)| q(n, d)), dim)
}

fn groups() -> Vec<(&'static str, CarnotGroup<QSqrt2>)> {
    ["heisenberg", "engel", "abelian:3", "example6:{sqrt2,sqrt2,sqrt2,sqrt2}", "example6:{1/2,1/2,1/2,1/2}"]
        .into_iter()
        .map(|n| (n, CarnotGroup::new(parse_preset(n).unwrap())))
        .collect()
}

fn lift(v: &[BigRational]) -> GroupPoint<QSqrt2> {
    GroupPoint::new(v.iter().map(|r| QSqrt2::rational(r.clone())).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn multiplication_is_associative(a in rational_vec(7), b in rational_vec(7), c in rational_vec(7)) {
        for (name, g) in groups() {
            let n = g.dim();
            let (x, y, z) = (lift(&a[..n]), lift(&b[..n]), lift(&c[..n]));
            let left = g.multiply(&g.multiply(&x, &y).unwrap(), &z).unwrap();
            let right = g.multiply(&x, &g.multiply(&y, &z).unwrap()).unwrap();
            prop_assert_eq!(left, right, "{}", name);
        }
    }

    #[test]
    fn dilation_is_an_automorphism(a in rational_vec(7), b in rational_vec(7), l in (1i64..=9, 1i64..=9)) {
        let lambda = QSqrt2::rational(q(l.0, l.1));
        for (name, g) in groups() {
            let n = g.dim();
            let (x, y) = (lift(&a[..n]), lift(&b[..n]));
            let lhs = g.dilate(&lambda, &g.multiply(&x, &y).unwrap()).unwrap();
            let rhs = g.multiply(&g.dilate(&lambda, &x).unwrap(), &g.dilate(&lambda, &y).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs, "{}", name);
        }
    }

    #[test]
    fn left_translation_cancels(a in rational_vec(7), b in rational_vec(7), c in rational_vec(7)) {
        for (name, g) in groups() {
            let n = g.dim();
            let (x, y, z) = (lift(&a[..n]), lift(&b[..n]), lift(&c[..n]));
            let zx = g.multiply(&z, &x).unwrap();
            let zy = g.multiply(&z, &y).unwrap();
            let lhs = g.multiply(&g.invert(&zx), &zy).unwrap();
            let rhs = g.multiply(&g.invert(&x), &y).unwrap();
            prop_assert_eq!(&lhs, &rhs, "{}", name);
            let m = Metric::unit(&g);
            let d1 = m.dist(&zx.to_f64(), &zy.to_f64());
            let d0 = m.dist(&x.to_f64(), &y.to_f64());
            prop_assert!((d1 - d0).abs() <= 1e-9 * (1.0 + d0), "{name}: {d1} vs {d0}");
        }
    }

    #[test]
    fn norm_is_homogeneous(a in rational_vec(7), l in 0.01f64..50.0) {
        for (name, g) in groups() {
            let m = Metric::unit(&g);
            let x: Vec<f64> = a[..g.dim()].iter().map(|r| Scalar::to_f64(r)).collect();
            let lhs = m.norm(&m.dilate(l, &x));
            let rhs = l * m.norm(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300), "{name}: {lhs} vs {rhs}");
        }
    }
}

/// `log(e^X e^{tY})` is polynomial in `t`; its linear coefficient is
/// `Σ_n B_n/n! ad_X^n Y` with `B_1 = +1/2`.
fn bernoulli_over_factorial(n: usize) -> BigRational {
    // B_n^+ / n! for n ≤ 8
    let table = [q(1, 1), q(1, 2), q(1, 12), q(0, 1), q(-1, 720), q(0, 1), q(1, 30240), q(0, 1), q(-1, 1209600)];
    table[n].clone()
}

fn linear_coefficient<K: Scalar>(g: &CarnotGroup<K>, x: &[K], y: &[K]) -> Vec<K> {
    let s = g.algebra().step();
    // p'(0) from the values at t = 0, 1, …, s
    let mut out = vec![K::zero(); g.dim()];
    for k in 0..=s {
        let weight = if k == 0 {
            -(1..=s).fold(q(0, 1), |acc, m| acc + q(1, m as i64))
        } else {
            let num = (1..=s).filter(|&m| m != k).fold(q(1, 1), |acc, m| acc * q(-(m as i64), 1));
            let den = (0..=s).filter(|&m| m != k).fold(q(1, 1), |acc, m| acc * q(k as i64 - m as i64, 1));
            num / den
        };
        let t = K::from_i64(k as i64);
        let ty: Vec<K> = y.iter().map(|c| c.clone() * t.clone()).collect();
        let z = g.multiply(&GroupPoint::new(x.to_vec()), &GroupPoint::new(ty)).unwrap();
        let w = K::from_rational(&weight);
        for (o, c) in out.iter_mut().zip(&z.coords) {
            *o = o.clone() + c.clone() * w.clone();
        }
    }
    out
}

fn bernoulli_series<K: Scalar>(alg: &StratifiedAlgebra<K>, x: &[K], y: &[K]) -> Vec<K> {
    let mut term = y.to_vec();
    let mut out = vec![K::zero(); y.len()];
    for n in 0..=alg.step() {
        let c = K::from_rational(&bernoulli_over_factorial(n));
        for (o, v) in out.iter_mut().zip(&term) {
            *o = o.clone() + v.clone() * c.clone();
        }
        term = alg.bracket(x, &term).unwrap();
    }
    out
}

#[test]
fn bch_matches_bernoulli_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, g) in groups() {
        for _ in 0..25 {
            let mut draw = || -> Vec<QSqrt2> {
                (0..g.dim()).map(|_| QSqrt2::rational(q(rng.random_range(-9..=9), rng.random_range(1..=5)))).collect()
            };
            let (x, y) = (draw(), draw());
            assert_eq!(linear_coefficient(&g, &x, &y), bernoulli_series(g.algebra(), &x, &y), "{name}");
        }
    }
}

#[test]
fn right_translation_moves_coordinates_linearly() {
    for (name, g) in groups() {
        let m = Metric::unit(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut constants = Vec::new();
        for eps in [0.1, 0.01] {
            let mut c2: f64 = 0.0;
            for _ in 0..2000 {
                let x = m.sample_box(&mut rng, 1.0);
                let x = m.dilate(1.0 / m.norm(&x).max(1.0), &x);
                let h = m.sample_box(&mut rng, 1.0);
                let h = m.dilate(eps * rng.random_range(0.0..1.0) / m.norm(&h), &h);
                let xh = m.mul(&x, &h);
                let shift = xh.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                c2 = c2.max(shift / eps);
            }
            constants.push(c2);
        }
        let ratio = constants[0] / constants[1];
        assert!((0.5..=2.0).contains(&ratio), "{name}: {constants:?}");
    }
}

#[test]
fn collapse_witness_is_sound() {
    let alg = heisenberg::<BigRational>();
    let g = CarnotGroup::new(alg.clone());
    let m = Metric::unit(&g);
    let cfg = NormConfig::ones(2);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut certified = 0;
    for _ in 0..40 {
        let a1: Vec<Vec<BigRational>> = (0..2)
            .map(|_| (0..2).map(|_| q(rng.random_range(-6..=6), rng.random_range(1..=3))).collect())
            .collect();
        let h = Homomorphism::from_first_layer(a1, &alg, &alg).unwrap().to_f64();
        for eps in [0.05, 0.2, 0.5] {
            if h.collapse_witness(eps, &cfg, &cfg).is_some() {
                continue;
            }
            certified += 1;
            for _ in 0..10_000 {
                let x = m.sample_box(&mut rng, 1.0);
                let n = m.norm(&x);
                if n > 0.0 {
                    assert!(m.norm(&h.apply(&x)) >= eps * n * (1.0 - 1e-12));
                }
            }
        }
    }
    assert!(certified > 0);
}

fn content(m: &Metric, pts: &[Vec<f64>], radii: &[f64]) -> f64 {
    content_floored(m, pts, radii, 0.0)
}

fn content_floored(m: &Metric, pts: &[Vec<f64>], radii: &[f64], floor: f64) -> f64 {
    let flat: Vec<f64> = pts.iter().flatten().copied().collect();
    let cfg = ContentConfig {
        dimension: m.homogeneous_dimension() as f64,
        radii: radii.to_vec(),
        floor,
        anchor: None,
    };
    content_upper(m, &flat, &cfg).unwrap().upper
}

fn sample_points(m: &Metric, seed: u64, count: usize, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| m.sample_box(&mut rng, scale)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn content_is_monotone(seed in 0u64..10_000, count in 2usize..80, keep in 1usize..80) {
        for m in [Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>())), Metric::unit(&CarnotGroup::new(engel::<BigRational>()))] {
            let pts = sample_points(&m, seed, count, 0.5);
            let sub = &pts[..keep.min(count)];
            let radii = geometric_radii(0.5, 4);
            prop_assert!(content(&m, sub, &radii) <= content(&m, &pts, &radii) + 1e-9);
        }
    }

    #[test]
    fn content_is_subadditive_at_a_fixed_radius(seed in 0u64..10_000, a in 1usize..60, b in 1usize..60, j in 0usize..5) {
        let m = Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()));
        let p = sample_points(&m, seed, a, 0.5);
        let r = sample_points(&m, seed + 1, b, 0.5);
        let radius = [0.5 / (1 << j) as f64];
        let union: Vec<Vec<f64>> = p.iter().chain(&r).cloned().collect();
        let c = |pts: &[Vec<f64>]| content_floored(&m, pts, &radius, 0.01);
        prop_assert!(c(&union) <= c(&p) + c(&r) + 1e-9);
    }
}

#[test]
fn abelian_dimension_is_validated() {
    assert!(abelian::<BigRational>(0).is_err());
}
