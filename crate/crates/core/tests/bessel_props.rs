#![allow(clippy::excessive_precision)]

use proptest::prelude::*;
use xxzkink::bessel::{bessel_j, squared_sum_check, truncation_order, BesselTable};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_is_an_exact_sign_flip(n in 0i64..60, x in -300.0f64..300.0) {
        let j = bessel_j(n, x).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(bessel_j(-n, x).unwrap(), sign * j);
        prop_assert_eq!(bessel_j(n, -x).unwrap(), sign * j);
    }

    #[test]
    fn three_term_recurrence(n in 1i64..80, x in 0.5f64..400.0) {
        let (a, b, c) = (bessel_j(n - 1, x).unwrap(), bessel_j(n, x).unwrap(), bessel_j(n + 1, x).unwrap());
        let scale = a.abs().max(c.abs()).max(1e-300);
        prop_assert!((a + c - 2.0 * n as f64 / x * b).abs() <= 1e-10 * scale.max(1e-3));
    }

    #[test]
    fn squares_sum_to_one(x in -500.0f64..500.0) {
        let m = truncation_order(x);
        prop_assert!((squared_sum_check(x, m).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn negligible_past_turning_point(x in 0.0f64..700.0, extra in 0usize..20) {
        let n = (x + 40.0 * x.cbrt().max(1.0)).ceil() as i64 + extra as i64;
        prop_assert!(bessel_j(n, x).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn table_matches_pointwise(x in -60.0f64..60.0, m in -40i64..40) {
        let t = BesselTable::new(truncation_order(x), x).unwrap();
        let direct = bessel_j(m, x).unwrap();
        prop_assert!((t.get(m) - direct).abs() <= 1e-13);
    }
}

#[test]
fn reference_values() {
    // 30-digit arbitrary-precision values
    let cases = [
        (0, 1.0, 0.765_197_686_557_966_55),
        (1, 1.0, 0.440_050_585_744_933_52),
        (5, 10.0, -0.234_061_528_186_793_64),
        (0, 100.0, 0.019_985_850_304_223_122),
        (50, 30.0, 2.058_165_663_156_417_8e-8),
    ];
    for (n, x, v) in cases {
        let j = bessel_j(n, x).unwrap();
        assert!((j - v).abs() <= 1e-12 * v.abs(), "J_{n}({x}) = {j}, want {v}");
    }
}
