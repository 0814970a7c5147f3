use qkd_core::rng::seeded;
use qkd_core::states::{add_white_noise, bell_phi_plus, dephase_bob, phi_plus_ket, TwoQubitState};
use qkd_core::tomography::{
    bootstrap_metrics, chsh, expected_counts, linear_entropy, reconstruct, von_neumann, ChshAngles,
};
use rand::Rng;

#[test]
fn exact_counts_round_trip() {
    let mut rng = seeded(2024);
    for k in 0..50 {
        let s = TwoQubitState::random(&mut rng, 1 + k % 4);
        let back = reconstruct(&expected_counts(&s, 1e4)).unwrap();
        assert!((*back.rho() - *s.rho()).frobenius() < 1e-8, "state {k}");
    }
}

#[test]
fn fully_dephased_states_obey_chsh_bound() {
    let mut rng = seeded(8);
    for angle in [0.0, 45.0] {
        for _ in 0..5 {
            let s = dephase_bob(&TwoQubitState::random(&mut rng, 1), angle, 1.0).unwrap();
            for _ in 0..100 {
                let mut a = || rng.random_range(-180.0..180.0);
                let angles = ChshAngles {
                    a: a(),
                    a_prime: a(),
                    b: a(),
                    b_prime: a(),
                };
                assert!(chsh(&s, angles).s.abs() <= 2.0 + 1e-9);
            }
        }
    }
}

#[test]
fn entropies_grow_with_dephasing() {
    let mut prev = (-1.0, -1.0);
    for gamma in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let s = dephase_bob(&bell_phi_plus(), 0.0, gamma).unwrap();
        let cur = (von_neumann(&s), linear_entropy(&s));
        assert!(
            cur.0 >= prev.0 - 1e-12 && cur.1 >= prev.1 - 1e-12,
            "gamma {gamma}"
        );
        prev = cur;
    }
}

#[test]
fn bootstrap_converges_on_large_counts() {
    let counts = expected_counts(&bell_phi_plus(), 1e6);
    let m = bootstrap_metrics(&counts, 50, 3, &phi_plus_ket()).unwrap();
    assert!((m.tangle.mean - 1.0).abs() < 0.01);
    assert!(m.tangle.sigma < 0.01);
    assert_eq!(m.failed_replicas, 0);
}

#[test]
fn fewer_counts_give_larger_spread() {
    let s = add_white_noise(&dephase_bob(&bell_phi_plus(), 0.0, 0.3).unwrap(), 0.1).unwrap();
    let big = expected_counts(&s, 1e4).map(f64::round);
    let small = big.map(|c| (c / 100.0).round());
    let target = phi_plus_ket();
    let mb = bootstrap_metrics(&big, 200, 11, &target).unwrap();
    let ms = bootstrap_metrics(&small, 200, 11, &target).unwrap();
    for (b, s) in [
        (mb.tangle, ms.tangle),
        (mb.von_neumann, ms.von_neumann),
        (mb.linear_entropy, ms.linear_entropy),
        (mb.fidelity, ms.fidelity),
    ] {
        assert!(s.sigma > b.sigma, "{s:?} vs {b:?}");
    }
}

#[test]
fn bootstrap_is_reproducible() {
    let counts = expected_counts(&bell_phi_plus(), 500.0).map(f64::round);
    let a = bootstrap_metrics(&counts, 30, 5, &phi_plus_ket()).unwrap();
    let b = bootstrap_metrics(&counts, 30, 5, &phi_plus_ket()).unwrap();
    assert_eq!(a, b);
}
