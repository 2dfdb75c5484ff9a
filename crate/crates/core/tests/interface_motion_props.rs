use std::sync::OnceLock;

use proptest::prelude::*;
use xxzkink::interface_motion::{
    m1, m3, m_general, series_truncation, time_dependent_alpha_m3, KinkTables, ProfileEvaluator, UniformField3,
};
use xxzkink::kink_profiles::{hopping_coefficient_a, QSeriesPolicy};

fn tables() -> &'static KinkTables {
    static T: OnceLock<KinkTables> = OnceLock::new();
    T.get_or_init(|| KinkTables::new(&QSeriesPolicy::new(0.4).unwrap()))
}

fn a() -> f64 {
    hopping_coefficient_a(tables().policy()).unwrap()
}

fn field() -> impl Strategy<Value = UniformField3> {
    (-2.0f64..2.0, -2.0f64..2.0, -1.5f64..1.5).prop_map(|(x, y, z)| UniformField3::new([x, y, z]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn m3_is_sandwiched_by_translates(f in field(), t in 0.0f64..30.0, x in -40i64..40) {
        let ev = ProfileEvaluator::new(tables(), f, t).unwrap();
        let m = ev.truncation() as i64;
        let v = ev.m3(x);
        let tb = tables();
        prop_assert!(v >= tb.mz(x + m) - 1e-12 && v <= tb.mz(x - m) + 1e-12);
    }

    #[test]
    fn outside_light_cone_is_polarized(b in 0.1f64..2.0, t in 0.0f64..20.0, dx in 0i64..30) {
        let f = UniformField3::new([b, 0.0, 0.0]);
        let w = 2.0 * b * a() * t;
        let edge = (w + 40.0 * w.cbrt() + 40.0).ceil() as i64 + dx;
        prop_assert!((m3(edge + 1, t, f, tables()).unwrap() + 0.5).abs() <= 1e-6);
        prop_assert!((m3(-edge, t, f, tables()).unwrap() - 0.5).abs() <= 1e-6);
    }

    #[test]
    fn small_gamma_is_continuous(b in 0.1f64..1.0, t in 0.0f64..10.0, x in -15i64..15) {
        let free = m3(x, t, UniformField3::new([b, 0.0, 0.0]), tables()).unwrap();
        let near = m3(x, t, UniformField3::new([b, 0.0, 1e-4]), tables()).unwrap();
        prop_assert!((free - near).abs() <= 1e-5);
    }

    #[test]
    fn initial_profile_is_static_kink(f in field(), x in -20i64..20) {
        prop_assert!((m3(x, 0.0, f, tables()).unwrap() - tables().mz(x)).abs() <= 1e-15);
        prop_assert!(m1(x, 0.0, f, tables()).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn longitudinal_field_leaves_profile_fixed(g in -3.0f64..3.0, t in 0.0f64..50.0, x in -10i64..10) {
        let v = m3(x, t, UniformField3::new([0.0, 0.0, g]), tables()).unwrap();
        prop_assert!((v - tables().mz(x)).abs() <= 1e-15);
    }

    #[test]
    fn general_component_reduces_to_axes(f in field(), t in 0.0f64..20.0, x in -15i64..15) {
        let z = m_general([0.0, 0.0, 1.0], x, t, f, tables()).unwrap();
        prop_assert!((z - m3(x, t, f, tables()).unwrap()).abs() <= 1e-13);
        let xc = m_general([1.0, 0.0, 0.0], x, t, f, tables()).unwrap();
        prop_assert!((xc - m1(x, t, f, tables()).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn constant_alpha_matches_static_field(al in 0.1f64..2.0, t in 0.1f64..10.0, x in -10i64..10) {
        let dyn_ = time_dependent_alpha_m3(x, t, |_| al, tables()).unwrap();
        let st = m3(x, t, UniformField3::new([al / a(), 0.0, 0.0]), tables()).unwrap();
        prop_assert!((dyn_ - st).abs() <= 1e-12);
    }

    #[test]
    fn truncation_grows_with_argument(w in 0.0f64..1e3, dw in 0.0f64..1e3) {
        prop_assert!(series_truncation(w) <= series_truncation(w + dw));
        prop_assert!(series_truncation(-w) == series_truncation(w));
    }
}

#[test]
fn non_unit_direction_is_rejected() {
    let f = UniformField3::new([1.0, 0.0, 0.5]);
    assert!(m_general([1.0, 1.0, 0.0], 0, 1.0, f, tables()).is_err());
}
