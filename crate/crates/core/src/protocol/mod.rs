//! The BB84 session engine: trials, sifting, error estimation, abort
//! decision, reconciliation and privacy amplification.

mod amplify;
mod reconcile;

pub use amplify::{h2, privacy_amplify, secure_length, toeplitz_diagonals, toeplitz_hash};
pub use reconcile::{initial_block_size, reconcile, Reconciliation};

use rand::seq::index;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::detection::{simulate_dwell_stream, BasisPolicy, DetectorConfig, TrialRecord};
use crate::error::{invalid, QkdError, Result};
use crate::otp::BitString;
use crate::rng::substream;
use crate::states::{add_white_noise, bell_phi_plus, EveConfig};

/// Random-stream indices derived from the session seed.
const STREAM_QUANTUM: u64 = 0;
const STREAM_SAMPLING: u64 = 1;
const STREAM_RECONCILE: u64 = 2;
const STREAM_AMPLIFY: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub n_intervals: usize,
    /// White-noise fraction of the source.
    #[serde(default)]
    pub source_noise: f64,
    #[serde(default)]
    pub eve: EveConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub basis_policy: BasisPolicy,
    #[serde(default = "SessionConfig::default_sample_fraction")]
    pub qber_sample_fraction: f64,
    #[serde(default = "SessionConfig::default_threshold")]
    pub abort_threshold: f64,
    #[serde(default = "SessionConfig::default_passes")]
    pub reconciliation_passes: usize,
    #[serde(default = "SessionConfig::default_safety")]
    pub pa_safety_bits: usize,
    pub seed: u64,
}

impl SessionConfig {
    fn default_sample_fraction() -> f64 {
        0.2
    }
    fn default_threshold() -> f64 {
        0.11
    }
    fn default_passes() -> usize {
        4
    }
    fn default_safety() -> usize {
        30
    }

    pub fn new(n_intervals: usize, seed: u64) -> Self {
        SessionConfig {
            n_intervals,
            source_noise: 0.0,
            eve: EveConfig::absent(),
            detector: DetectorConfig::default(),
            basis_policy: BasisPolicy::Random,
            qber_sample_fraction: Self::default_sample_fraction(),
            abort_threshold: Self::default_threshold(),
            reconciliation_passes: Self::default_passes(),
            pa_safety_bits: Self::default_safety(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_intervals == 0 {
            return Err(invalid("n_intervals", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.source_noise) {
            return Err(invalid("source_noise", "must be in [0, 1]"));
        }
        if !(self.qber_sample_fraction > 0.0 && self.qber_sample_fraction <= 1.0) {
            return Err(invalid("qber_sample_fraction", "must be in (0, 1]"));
        }
        if !(self.abort_threshold > 0.0 && self.abort_threshold < 0.5) {
            return Err(invalid("abort_threshold", "must be in (0, 0.5)"));
        }
        self.eve.validate()?;
        self.detector.validate()
    }
}

/// Keeps kept records measured in matching bases, in order.
pub fn sift(records: &[TrialRecord]) -> (Vec<u8>, Vec<u8>) {
    records
        .iter()
        .filter(|r| r.kept && r.same_basis())
        .filter_map(|r| Some((r.alice_bit?, r.bob_bit?)))
        .unzip()
}

/// Error-rate estimate from a disclosed random sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub qber: f64,
    pub sample_size: usize,
    pub sample_errors: usize,
    /// Sorted positions revealed publicly; removed from the key.
    pub disclosed_positions: Vec<usize>,
    #[serde(skip)]
    pub remaining_alice: Vec<u8>,
    #[serde(skip)]
    pub remaining_bob: Vec<u8>,
}

/// Discloses `max(1, round(fraction * n))` random positions and counts
/// mismatches among them.
pub fn estimate_qber<R: Rng + ?Sized>(
    alice: &[u8],
    bob: &[u8],
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate> {
    if alice.len() != bob.len() {
        return Err(QkdError::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let n = alice.len();
    if n == 0 {
        return Err(QkdError::Empty("sifted key"));
    }
    let m = ((sample_fraction * n as f64).round() as usize).clamp(1, n);
    let mut positions = index::sample(rng, n, m).into_vec();
    positions.sort_unstable();

    let mut disclosed = vec![false; n];
    for &p in &positions {
        disclosed[p] = true;
    }
    let sample_errors = positions.iter().filter(|&&p| alice[p] != bob[p]).count();
    let (remaining_alice, remaining_bob) = (0..n)
        .filter(|&i| !disclosed[i])
        .map(|i| (alice[i], bob[i]))
        .unzip();

    Ok(QberEstimate {
        qber: sample_errors as f64 / m as f64,
        sample_size: m,
        sample_errors,
        disclosed_positions: positions,
        remaining_alice,
        remaining_bob,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Proceed,
    Abort,
}

/// Aborts only when the estimate strictly exceeds the threshold.
pub fn decide(qber: f64, threshold: f64) -> Decision {
    if qber > threshold {
        Decision::Abort
    } else {
        Decision::Proceed
    }
}

/// Sifted-trial error counts split by Eve's basis relative to the shared one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveCaseStats {
    /// Eve absent or skipped this trial.
    pub untouched: (usize, usize),
    /// Eve in the same basis as Alice and Bob: `(trials, errors)`.
    pub same_basis: (usize, usize),
    /// Eve in the other basis.
    pub other_basis: (usize, usize),
}

impl EveCaseStats {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut s = EveCaseStats::default();
        for r in records.iter().filter(|r| r.kept && r.same_basis()) {
            let Some(agree) = r.agree() else { continue };
            let slot = match (r.eve_applied, r.eve_basis) {
                (true, Some(b)) if b == r.alice_basis => &mut s.same_basis,
                (true, Some(_)) => &mut s.other_basis,
                _ => &mut s.untouched,
            };
            slot.0 += 1;
            slot.1 += usize::from(!agree);
        }
        s
    }
}

/// Everything a session produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    pub records: Vec<TrialRecord>,
    pub kept_trials: usize,
    pub sifted_alice: BitString,
    pub sifted_bob: BitString,
    /// Mismatch rate over the whole sifted key (simulator ground truth).
    pub sifted_error_rate: f64,
    pub qber_estimate: f64,
    pub qber_sample_size: usize,
    pub disclosed_positions: Vec<usize>,
    pub decision: Decision,
    pub aborted: bool,
    pub reconciled_length: usize,
    pub reconciliation_flips: usize,
    /// Bob's corrected key equals Alice's.
    pub reconciliation_success: bool,
    pub leaked_bits: usize,
    pub final_key: BitString,
    /// Bob's independently amplified key equals `final_key`.
    pub keys_match: bool,
    pub eve_cases: EveCaseStats,
}

impl SessionTranscript {
    pub fn sifted_agreement(&self) -> f64 {
        1.0 - self.sifted_error_rate
    }

    pub fn final_key_hex(&self) -> String {
        self.final_key.to_hex()
    }
}

/// Source, Eve, detectors, sifting, estimate, decision, reconciliation,
/// amplification. Deterministic in `config.seed`.
pub fn run_session(config: &SessionConfig) -> Result<SessionTranscript> {
    config.validate()?;
    let source = add_white_noise(&bell_phi_plus(), config.source_noise)?;

    let mut qrng = substream(config.seed, STREAM_QUANTUM);
    let records = simulate_dwell_stream(
        &source,
        &config.detector,
        config.n_intervals,
        config.basis_policy,
        &config.eve,
        &mut qrng,
    )?;
    let kept_trials = records.iter().filter(|r| r.kept).count();
    let (alice, bob) = sift(&records);
    let errors = alice.iter().zip(&bob).filter(|(a, b)| a != b).count();
    let sifted_error_rate = if alice.is_empty() {
        0.0
    } else {
        errors as f64 / alice.len() as f64
    };

    let mut srng = substream(config.seed, STREAM_SAMPLING);
    let est = estimate_qber(&alice, &bob, config.qber_sample_fraction, &mut srng)?;
    let decision = decide(est.qber, config.abort_threshold);
    let eve_cases = EveCaseStats::from_records(&records);

    let mut transcript = SessionTranscript {
        config: config.clone(),
        kept_trials,
        sifted_alice: BitString::from_bits(alice),
        sifted_bob: BitString::from_bits(bob),
        sifted_error_rate,
        qber_estimate: est.qber,
        qber_sample_size: est.sample_size,
        disclosed_positions: est.disclosed_positions.clone(),
        decision,
        aborted: decision == Decision::Abort,
        reconciled_length: 0,
        reconciliation_flips: 0,
        reconciliation_success: false,
        leaked_bits: 0,
        final_key: BitString::new(),
        keys_match: false,
        eve_cases,
        records,
    };
    if transcript.aborted || est.remaining_alice.is_empty() {
        return Ok(transcript);
    }

    let mut rrng = substream(config.seed, STREAM_RECONCILE);
    let rec = reconcile(
        &est.remaining_alice,
        &est.remaining_bob,
        config.reconciliation_passes,
        est.qber,
        &mut rrng,
    )?;
    transcript.reconciled_length = rec.corrected.len();
    transcript.reconciliation_flips = rec.flips;
    transcript.reconciliation_success = rec.corrected == est.remaining_alice;
    transcript.leaked_bits = rec.leaked_bits;

    let pa_seed = substream(config.seed, STREAM_AMPLIFY).next_u64();
    let alice_key = privacy_amplify(
        &est.remaining_alice,
        est.qber,
        rec.leaked_bits,
        config.pa_safety_bits,
        pa_seed,
    )?;
    let bob_key = privacy_amplify(
        &rec.corrected,
        est.qber,
        rec.leaked_bits,
        config.pa_safety_bits,
        pa_seed,
    )?;
    transcript.keys_match = alice_key == bob_key;
    transcript.final_key = BitString::from_bits(alice_key);
    Ok(transcript)
}
