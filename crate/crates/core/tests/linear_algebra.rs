use proptest::prelude::*;
use qkd_core::qmath::{
    herm_eig, nearest_physical, partial_trace_unchecked, tensor, CMat, CMat2, Subsystem, C64,
};
use qkd_core::rng::seeded;
use qkd_core::states::TwoQubitState;
use rand::Rng;

fn random_op(seed: u64) -> CMat2 {
    let mut rng = seeded(seed);
    CMat::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tensor_trace_factorizes(sa in any::<u64>(), sb in any::<u64>()) {
        let (a, b) = (random_op(sa), random_op(sb.wrapping_add(1)));
        let lhs = tensor(&a, &b).trace();
        let rhs = a.trace() * b.trace();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }
}

proptest! {
    #[test]
    fn tensor_is_bilinear(sa in any::<u64>(), sb in any::<u64>(), sc in any::<u64>(), x in -3.0..3.0f64) {
        let (a, b, c) = (random_op(sa), random_op(sb), random_op(sc));
        let left = tensor(&(a.scale(x) + b), &c);
        let expanded = tensor(&a, &c).scale(x) + tensor(&b, &c);
        prop_assert!((left - expanded).max_abs() < 1e-12);
        let right = tensor(&c, &(a + b.scale(x)));
        let expanded = tensor(&c, &a) + tensor(&c, &b).scale(x);
        prop_assert!((right - expanded).max_abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(sa in any::<u64>(), sb in any::<u64>()) {
        let (a, b) = (random_op(sa), random_op(sb ^ 0x55));
        let ab = tensor(&a, &b);
        let second = partial_trace_unchecked(&ab, Subsystem::Second);
        prop_assert!((second - a.scale_c(b.trace())).max_abs() < 1e-12);
        let first = partial_trace_unchecked(&ab, Subsystem::First);
        prop_assert!((first - b.scale_c(a.trace())).max_abs() < 1e-12);
    }

    #[test]
    fn density_spectrum_in_unit_interval(seed in any::<u64>(), rank in 1usize..=4) {
        let s = TwoQubitState::random(&mut seeded(seed), rank);
        let e = herm_eig(s.rho()).unwrap();
        for v in e.values {
            prop_assert!((-1e-8..=1.0 + 1e-8).contains(&v));
        }
        prop_assert!((e.values.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!((e.reconstruct() - *s.rho()).max_abs() < 1e-10);
    }

    #[test]
    fn nearest_physical_is_idempotent(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = CMat::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = (m + m.adjoint()).scale(0.5) + CMat::identity().scale(0.3);
        if let Ok(once) = nearest_physical(&h) {
            let twice = nearest_physical(&once).unwrap();
            prop_assert!((once - twice).max_abs() < 1e-10);
            prop_assert!(TwoQubitState::new(once).is_ok());
        }
    }
}
