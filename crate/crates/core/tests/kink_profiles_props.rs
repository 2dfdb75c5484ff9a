use proptest::prelude::*;
use xxzkink::kink_profiles::{
    hopping_coefficient_a, magnetization_z, p_measure, ptilde_measure, transverse_matrix_element, QSeriesPolicy,
};

fn radius_sum(policy: &QSeriesPolicy, f: impl Fn(i64) -> f64) -> f64 {
    let r = policy.truncation_radius() as i64;
    (-r..=r + 1).map(f).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn p_is_a_probability(q in 0.02f64..0.6) {
        let pol = QSeriesPolicy::new(q).unwrap();
        prop_assert!((-40..=40).all(|m| p_measure(m, &pol) >= -1e-15));
        prop_assert!((radius_sum(&pol, |m| p_measure(m, &pol)) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn ptilde_has_zero_mass(q in 0.02f64..0.6) {
        let pol = QSeriesPolicy::new(q).unwrap();
        prop_assert!(radius_sum(&pol, |m| ptilde_measure(m, &pol)).abs() <= 1e-10);
    }

    #[test]
    fn profile_is_monotone_with_limits(q in 0.02f64..0.6) {
        let pol = QSeriesPolicy::new(q).unwrap();
        let v: Vec<f64> = (-30..=30).map(|x| magnetization_z(x, &pol)).collect();
        prop_assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!((v[0] - 0.5).abs() < 1e-8 && (v[60] + 0.5).abs() < 1e-8);
    }

    #[test]
    fn decay_is_geometric_in_q(q in 0.05f64..0.6) {
        let pol = QSeriesPolicy::new(q).unwrap();
        let worst = (-30i64..=30)
            .map(|m| p_measure(m, &pol) / q.powi((m - 1).unsigned_abs() as i32))
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e3, "C(q) = {worst}");
        let tails = (-30i64..=30).map(|n| transverse_matrix_element(n, &pol).abs() / q.powi((n.unsigned_abs() as i32 - 1).max(0)));
        prop_assert!(tails.fold(0.0, f64::max) <= 1e3);
    }

    #[test]
    fn hopping_coefficient_is_positive(q in 0.01f64..0.95) {
        let pol = QSeriesPolicy::new(q).unwrap();
        prop_assert!(hopping_coefficient_a(&pol).unwrap() > 0.0);
    }
}

#[test]
fn rejects_q_outside_unit_interval() {
    for q in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
        assert!(QSeriesPolicy::new(q).is_err(), "q = {q}");
    }
}

#[test]
fn small_q_is_a_sharp_step() {
    let pol = QSeriesPolicy::new(1e-6).unwrap();
    let v: Vec<f64> = (-3..=3).map(|x| magnetization_z(x, &pol)).collect();
    let jump = v.windows(2).position(|w| w[0] - w[1] > 0.99).unwrap();
    assert!(v[..=jump].iter().all(|s| (s - 0.5).abs() < 1e-5));
    assert!(v[jump + 1..].iter().all(|s| (s + 0.5).abs() < 1e-5));
}
