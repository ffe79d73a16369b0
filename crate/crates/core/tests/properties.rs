mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use common::*;
use cstar_polar::cpmaps::{cstar_combine, kraus_from_choi};
use cstar_polar::linalg::{hermitian_to_vec, vec_to_hermitian};
use cstar_polar::mtests::{fold_linear, pairing, realify};
use cstar_polar::polar::{in_saturated_polar, sat_sup, PolarMembership, DEFAULT_THETA_GRID};
use cstar_polar::{CPMap, CStarCoefficients, CStarTerm, MatrixTest};

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pairing_matches_kraus_reference(seed in any::<u64>(), (m, n) in dims(), k in 1usize..=3) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=m * n);
        let phi = random_map(&mut r, m, n, rank);
        let t = random_test(&mut r, k, m, n);
        let got = pairing(&t.test, &phi.map).unwrap();
        let want = t.pair(&phi.kraus);
        prop_assert!((got - want).norm() <= 1e-10 * (1.0 + want.norm()));
    }

    #[test]
    fn kraus_roundtrip_preserves_choi(seed in any::<u64>(), (m, n) in dims()) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=m * n);
        let phi = random_map(&mut r, m, n, rank);
        let ops = kraus_from_choi(&phi.map).unwrap();
        let kraus: Vec<CMat> = ops.ops().iter().map(from_lib).collect();
        let c = choi(&phi.kraus);
        prop_assert!((choi(&kraus) - &c).norm() <= 1e-9 * (1.0 + c.norm()));
        prop_assert!(ops.len() <= m * n);
    }

    #[test]
    fn realify_is_real_part_of_rotated_pairing(seed in any::<u64>(), (m, n) in dims(), theta in 0.0..std::f64::consts::TAU) {
        let mut r = rng(seed);
        let phi = random_map(&mut r, m, n, 2);
        let t = random_test(&mut r, 1, m, n);
        let v = t.pair(&phi.kraus);
        let got = pairing(&realify(&t.test, theta), &phi.map).unwrap();
        prop_assert!(got.im.abs() <= 1e-10 * (1.0 + v.norm()));
        prop_assert!((got.re - (Complex64::from_polar(1.0, -theta) * v).re).abs() <= 1e-10 * (1.0 + v.norm()));
    }

    #[test]
    fn fold_linear_is_linear(seed in any::<u64>(), (m, n) in dims(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let mut r = rng(seed);
        let phi = random_map(&mut r, m, n, 2);
        let t1 = random_test(&mut r, 1, m, n);
        let t2 = random_test(&mut r, 2, m, n);
        let coeffs = [Complex64::new(a, b), Complex64::new(b, -a)];
        let f = fold_linear(&[t1.test.clone(), t2.test.clone()], &coeffs).unwrap();
        let want = coeffs[0] * t1.pair(&phi.kraus) + coeffs[1] * t2.pair(&phi.kraus);
        let got = pairing(&f.test, &phi.map).unwrap() * f.scale;
        prop_assert!((got - want).norm() <= 1e-10 * (1.0 + want.norm()));
    }

    #[test]
    fn hermitian_coordinates_roundtrip(seed in any::<u64>(), d in 1usize..=5) {
        let mut r = rng(seed);
        let g = gaussian(&mut r, d, d);
        let h = to_lib(&(&g + g.adjoint()));
        let v = hermitian_to_vec(&h);
        prop_assert_eq!(v.len(), d * d);
        let back = vec_to_hermitian(&v, d);
        prop_assert!((from_lib(&back) - from_lib(&h)).norm() <= 1e-12 * (1.0 + from_lib(&h).norm()));
        let frob = from_lib(&h).norm();
        let coord: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((frob - coord).abs() <= 1e-10 * (1.0 + frob));
    }

    #[test]
    fn cstar_combination_matches_kraus_reference(seed in any::<u64>(), (m, n) in dims()) {
        let mut r = rng(seed);
        let maps: Vec<RandomMap> = (0..2).map(|_| random_map(&mut r, m, n, 2)).collect();
        let count = r.random_range(1..=3);
        let terms: Vec<(CMat, usize)> = isometry_blocks(&mut r, count, n)
            .into_iter()
            .enumerate()
            .map(|(i, a)| (a, i % 2))
            .collect();
        let coeffs = CStarCoefficients::new(
            terms.iter().map(|(a, j)| CStarTerm { a: to_lib(a), map_index: *j }).collect(),
        )
        .unwrap();
        let lib: Vec<CPMap> = maps.iter().map(|p| p.map.clone()).collect();
        let got = cstar_combine(&lib, &coeffs).unwrap();
        let kraus: Vec<Vec<CMat>> = maps.into_iter().map(|p| p.kraus).collect();
        let want = choi(&combination_kraus(&kraus, &terms));
        prop_assert!((from_lib(got.choi()) - &want).norm() <= 1e-10 * (1.0 + want.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sat_sup_dominates_generators_and_scales(seed in any::<u64>(), c in 0.1..4.0f64) {
        let mut r = rng(seed);
        let (m, n) = (2, 2);
        let gens: Vec<RandomMap> = (0..2).map(|_| random_map(&mut r, m, n, 2)).collect();
        let t = random_test(&mut r, 1, m, n);
        let k: Vec<CPMap> = gens.iter().map(|g| g.map.clone()).collect();
        let res = sat_sup(&k, &t.test, DEFAULT_THETA_GRID).unwrap();
        let scale = 1.0 + res.upper();
        for g in &gens {
            prop_assert!(t.pair(&g.kraus).norm() <= res.upper() + 1e-8 * scale);
        }
        prop_assert!(res.lower() <= res.upper() + 1e-12 * scale);

        let scaled: MatrixTest = t.test.scaled(Complex64::new(c, 0.0));
        let res_c = sat_sup(&k, &scaled, DEFAULT_THETA_GRID).unwrap();
        // both brackets contain the same value c·sup
        let slack = 1e-9 * c * scale;
        prop_assert!(res_c.lower() <= c * res.upper() + slack, "{} > {}", res_c.lower(), c * res.upper());
        prop_assert!(c * res.lower() <= res_c.upper() + slack, "{} > {}", c * res.lower(), res_c.upper());

        let member = t.test.scaled(Complex64::new(1.0 / res.upper(), 0.0));
        let verdict = in_saturated_polar(&member, &k, 1e-8).unwrap();
        prop_assert!(matches!(verdict, PolarMembership::Member(_)));
    }
}
