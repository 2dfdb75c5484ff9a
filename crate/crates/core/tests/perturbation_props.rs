use proptest::prelude::*;
use xxzkink::linalg::expm_action;
use xxzkink::perturbation::{
    dyson_partial_sum, enumerate_graphs, iterated_integral_closed_form, iterated_integral_quadrature, propagate,
    reduced_block_contributions, scaling_experiment, FieldSpec, FieldTerm, Modulation,
};
use xxzkink::xxz_core::{build_hamiltonian, kink_state, spectral_decomposition, ChainSpec, HalfInt};
use xxzkink::{NumericPolicy, StateVector, C64};

fn chain(len: i64) -> ChainSpec {
    ChainSpec::new(1, len, 2.0).unwrap()
}

fn state(dim: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map("zero vector", |v| {
        StateVector::from_vec(v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
            .normalized()
            .ok()
    })
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compositions_are_distinct_and_signed(n in 1usize..=12) {
        let g = enumerate_graphs(n).unwrap();
        prop_assert_eq!(g.len(), 1usize << (n - 1));
        let mut parts: Vec<_> = g.iter().map(|c| c.parts.clone()).collect();
        parts.sort();
        parts.dedup();
        prop_assert_eq!(parts.len(), g.len());
        for c in &g {
            prop_assert_eq!(c.n(), n);
            prop_assert!(c.parts.iter().all(|&p| p >= 1));
            let expect = if c.parts.len() % 2 == 1 { 1 } else { -1 };
            prop_assert_eq!(c.sign, expect);
        }
    }

    #[test]
    fn closed_form_matches_quadrature(
        n in 1usize..=4,
        e in prop::collection::vec(-1.0f64..1.0, 5),
        k in prop::collection::vec((0.1f64..1.0, -0.5f64..0.5), 4),
        lambda in 0.05f64..1.0,
        t in 0.0f64..4.0,
    ) {
        let k: Vec<C64> = k[..n].iter().map(|&(a, b)| C64::new(a, b)).collect();
        let c = iterated_integral_closed_form(&e[..=n], &k, lambda, t).unwrap();
        let q = iterated_integral_quadrature(&e[..=n], &k, lambda, t, 40).unwrap();
        prop_assert!((c - q).norm() <= 1e-6 * q.norm().max(1e-12));
    }

    #[test]
    fn dyson_remainder_within_bound(
        phi in state(16),
        b in vec3(),
        site in 1i64..=4,
        lambda in 0.05f64..0.5,
        t in 0.1f64..2.0,
        order in 1usize..=4,
    ) {
        let policy = NumericPolicy::default();
        let ch = chain(4);
        let h = build_hamiltonian(&ch).unwrap();
        let field = FieldSpec::single_site(ch, site, b).unwrap();
        let d = dyson_partial_sum(&h, &field, lambda, t, order, &phi, &policy).unwrap();
        let exact = propagate(&h, &field, lambda, t, &phi, &policy).unwrap().state;
        let pulled = expm_action(&h, C64::new(0.0, t), &exact);
        prop_assert!(pulled.distance(&d.state) <= d.bound * (1.0 + 1e-6) + 1e-10);
        prop_assert!(d.stated_bound >= d.bound * (1.0 - 1e-12));
    }

    #[test]
    fn modulated_stepping_preserves_norm(phi in state(16), b in vec3(), omega in 0.5f64..3.0, t in 0.1f64..3.0) {
        let policy = NumericPolicy::default();
        let ch = chain(4);
        let h = build_hamiltonian(&ch).unwrap();
        let term = FieldTerm { site: 2, b, modulation: Modulation::Cosine { omega, phase: 0.3 } };
        let field = FieldSpec::new(ch, vec![term]).unwrap();
        let r = propagate(&h, &field, 0.3, t, &phi, &policy).unwrap();
        prop_assert!(r.norm_drift <= 1e-8);
        prop_assert!(r.error_estimate <= 1e-8);
    }

    #[test]
    fn energy_blocks_are_orthogonal(phi in state(32), b in vec3(), tau in 0.1f64..2.0) {
        let policy = NumericPolicy::default();
        let ch = chain(5);
        let h = build_hamiltonian(&ch).unwrap();
        let dec = spectral_decomposition(&h, true, &policy).unwrap();
        let field = FieldSpec::uniform(ch, b).unwrap();
        let parts = reduced_block_contributions(&dec, &field, tau, &phi, &policy).unwrap();
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                prop_assert!(parts[i].1.inner(&parts[j].1).norm() <= 1e-10);
            }
        }
    }
}

#[test]
fn graph_count_through_twenty() {
    for n in 1..=20 {
        assert_eq!(enumerate_graphs(n).unwrap().len(), 1 << (n - 1), "n = {n}");
    }
    assert!(enumerate_graphs(0).is_err());
}

#[test]
fn cosine_with_zero_frequency_equals_constant() {
    let policy = NumericPolicy::default();
    let ch = chain(5);
    let h = build_hamiltonian(&ch).unwrap();
    let b = [0.7, -0.2, 0.4];
    let phi = kink_state(&ch, HalfInt::from_twice(1)).unwrap();
    let constant = FieldSpec::single_site(ch, 3, b).unwrap();
    let cosine = FieldSpec::new(
        ch,
        vec![FieldTerm {
            site: 3,
            b,
            modulation: Modulation::Cosine { omega: 0.0, phase: 0.0 },
        }],
    )
    .unwrap();
    assert!(constant.is_time_independent() && !cosine.is_time_independent());
    let a = propagate(&h, &constant, 0.2, 5.0, &phi, &policy).unwrap();
    let s = propagate(&h, &cosine, 0.2, 5.0, &phi, &policy).unwrap();
    assert!(a.state.distance(&s.state) < 1e-8);
}

#[test]
fn zero_field_has_zero_error() {
    let policy = NumericPolicy::default();
    let ch = chain(6);
    let phi = kink_state(&ch, HalfInt::from_int(0)).unwrap();
    let r = scaling_experiment(&ch, &FieldSpec::zero(ch), &phi, 1.0, &[0.2, 0.1], 0.25, &policy).unwrap();
    assert!(r.errors.iter().all(|&e| e <= 1e-12), "{:?}", r.errors);
}
