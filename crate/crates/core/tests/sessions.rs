use proptest::prelude::*;
use qkd_core::detection::{
    joint_probs, records_to_csv, simulate_dwell_stream, BasisPolicy, DetectorConfig,
};
use qkd_core::optics::MeasBasis;
use qkd_core::protocol::{
    h2, initial_block_size, privacy_amplify, reconcile, run_session, secure_length, sift,
    toeplitz_diagonals, Decision, SessionConfig,
};
use qkd_core::qmath::{partial_trace, Subsystem};
use qkd_core::rng::seeded;
use qkd_core::states::{bell_phi_plus, EveBasisPolicy, EveConfig, TwoQubitState};
use rand::seq::index;
use rand::Rng;

proptest! {
    #[test]
    fn joint_marginals_match_partial_traces(seed in any::<u64>(), a in 0usize..2, b in 0usize..2) {
        let s = TwoQubitState::random(&mut seeded(seed), 3);
        let (ab, bb) = (MeasBasis::KEY_BASES[a], MeasBasis::KEY_BASES[b]);
        let p = joint_probs(&s, ab, bb);
        let alice = partial_trace(s.rho(), Subsystem::Second).unwrap();
        let bob = partial_trace(s.rho(), Subsystem::First).unwrap();
        prop_assert!((p.p11 + p.p10 - alice.trace_product(&ab.projector(1)).re).abs() < 1e-10);
        prop_assert!((p.p11 + p.p01 - bob.trace_product(&bb.projector(1)).re).abs() < 1e-10);
    }
}

#[test]
fn kept_records_carry_both_bits_and_discards_never_sift() {
    let cfg = DetectorConfig {
        dark_rate: 2.0,
        ..DetectorConfig::default()
    };
    let recs = simulate_dwell_stream(
        &bell_phi_plus(),
        &cfg,
        5000,
        BasisPolicy::Random,
        &EveConfig::absent(),
        &mut seeded(3),
    )
    .unwrap();
    assert!(recs.iter().any(|r| !r.kept));
    for r in &recs {
        assert_eq!(
            r.kept,
            r.alice_bit.is_some() && r.bob_bit.is_some(),
            "{r:?}"
        );
    }
    let expected = recs.iter().filter(|r| r.kept && r.same_basis()).count();
    assert_eq!(sift(&recs).0.len(), expected);
}

#[test]
fn identical_seeds_reproduce_records() {
    let eve = EveConfig::intercept_resend(EveBasisPolicy::RandomPerTrial, MeasBasis::HV, 0.5);
    let run = || {
        let recs = simulate_dwell_stream(
            &bell_phi_plus(),
            &DetectorConfig::default(),
            3000,
            BasisPolicy::Random,
            &eve,
            &mut seeded(21),
        )
        .unwrap();
        records_to_csv(&recs, true)
    };
    assert_eq!(run(), run());
}

#[test]
fn ideal_session_sifts_identical_strings() {
    let mut cfg = SessionConfig::new(10_000, 5);
    cfg.detector = DetectorConfig::ideal();
    let t = run_session(&cfg).unwrap();
    assert!(t.sifted_alice.len() > 1000);
    assert_eq!(t.sifted_alice, t.sifted_bob);
}

#[test]
fn fixed_basis_eve_case_split() {
    let mut cfg = SessionConfig::new(40_000, 17);
    cfg.detector = DetectorConfig::ideal();
    cfg.eve = EveConfig::intercept_resend(EveBasisPolicy::Fixed, MeasBasis::HV, 1.0);
    let t = run_session(&cfg).unwrap();
    let (same_n, same_err) = t.eve_cases.same_basis;
    assert!(same_n > 1000);
    assert_eq!(same_err, 0);
    let (n, err) = t.eve_cases.other_basis;
    let rate = err as f64 / n as f64;
    let sigma = (0.25 / n as f64).sqrt();
    assert!((rate - 0.5).abs() <= 4.0 * sigma, "{rate} over {n}");
}

#[test]
fn eve_at_quarter_error_aborts_with_empty_key() {
    for seed in [1, 2] {
        let mut cfg = SessionConfig::new(10_000, seed);
        cfg.eve = EveConfig::intercept_resend(EveBasisPolicy::RandomPerTrial, MeasBasis::HV, 1.0);
        let t = run_session(&cfg).unwrap();
        assert_eq!(t.decision, Decision::Abort);
        assert!(t.final_key.is_empty());
        assert_eq!(t.leaked_bits, 0);
    }
}

#[test]
fn binary_entropy_is_symmetric() {
    for x in [0.1, 0.25, 0.4] {
        assert!((h2(x) - h2(1.0 - x)).abs() < 1e-15);
    }
}

fn noisy_pair<R: Rng>(rng: &mut R, n: usize, errors: usize) -> (Vec<u8>, Vec<u8>) {
    let alice: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
    let mut bob = alice.clone();
    for i in index::sample(rng, n, errors) {
        bob[i] ^= 1;
    }
    (alice, bob)
}

#[test]
fn error_free_leak_is_one_parity_per_block() {
    let n = 300;
    let (a, _) = noisy_pair(&mut seeded(4), n, 0);
    let r = reconcile(&a, &a, 4, 0.05, &mut seeded(9)).unwrap();
    let mut k = initial_block_size(0.05);
    let mut blocks = 0;
    for _ in 0..4 {
        blocks += n.div_ceil(k.min(n));
        k *= 2;
    }
    assert_eq!(r.leaked_bits, blocks);
    assert_eq!(r.flips, 0);
}

#[test]
fn leak_is_bounded_by_block_parities_plus_bisections() {
    let n = 256;
    let mut rng = seeded(12);
    for errors in [1, 5, 20] {
        let (a, b) = noisy_pair(&mut rng, n, errors);
        let r = reconcile(&a, &b, 4, errors as f64 / n as f64, &mut rng).unwrap();
        let k = initial_block_size(errors as f64 / n as f64);
        let top: usize = (0..4).map(|p| n.div_ceil((k << p).min(n))).sum();
        let depth = (n as f64).log2().ceil() as usize;
        assert!(r.leaked_bits >= top);
        assert!(
            r.leaked_bits <= top + r.flips * depth,
            "{errors}: {}",
            r.leaked_bits
        );
    }
}

#[test]
fn cascade_corrects_eleven_percent() {
    let (n, q, runs) = (256, 0.11, 400);
    let errors = (n as f64 * q).round() as usize;
    let mut rng = seeded(31);
    let ok = (0..runs)
        .filter(|_| {
            let (a, b) = noisy_pair(&mut rng, n, errors);
            reconcile(&a, &b, 4, q, &mut rng).unwrap().corrected == a
        })
        .count();
    assert!(ok as f64 / runs as f64 >= 0.99, "{ok}/{runs}");
}

/// Dense `m x n` product over GF(2) with `T[i][j] = t[i - j + n - 1]`.
fn dense_toeplitz(key: &[u8], m: usize, t: &[u8]) -> Vec<u8> {
    let n = key.len();
    let mut mat = vec![vec![0u8; n]; m];
    for (i, row) in mat.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = t[i + n - 1 - j];
        }
    }
    mat.iter()
        .map(|row| row.iter().zip(key).map(|(x, k)| x & k).sum::<u8>() % 2)
        .collect()
}

#[test]
fn privacy_amplification_matches_dense_matrix() {
    let n = 128;
    let key: Vec<u8> = (0..n).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
    let (qber, leak, safety, seed) = (0.02, 20, 10, 0);
    let m = secure_length(n, qber, leak, safety);
    assert_eq!(m, 79);
    let fast = privacy_amplify(&key, qber, leak, safety, seed).unwrap();
    let dense = dense_toeplitz(&key, m, &toeplitz_diagonals(m, n, seed));
    assert_eq!(fast, dense);
    let hex = qkd_core::otp::BitString::from_bits(fast).to_hex();
    assert_eq!(hex, GOLDEN_PA_HEX);
}

const GOLDEN_PA_HEX: &str = "76bb39470575ea4444ea";
