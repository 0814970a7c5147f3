//! Detector model: joint outcome probabilities, per-trial sampling and the
//! dwell-interval event stream with Poisson pair and dark-count statistics.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optics::MeasBasis;
use crate::qmath::tensor;
use crate::states::{EveConfig, TwoQubitState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Counting interval, seconds.
    #[serde(default = "DetectorConfig::default_dwell")]
    pub dwell: f64,
    /// Mean detected pairs per second.
    #[serde(default = "DetectorConfig::default_pair_rate")]
    pub pair_rate: f64,
    /// Dark counts per second, per detector.
    #[serde(default = "DetectorConfig::default_dark_rate")]
    pub dark_rate: f64,
}

impl DetectorConfig {
    fn default_dwell() -> f64 {
        0.1
    }
    fn default_pair_rate() -> f64 {
        10.0
    }
    fn default_dark_rate() -> f64 {
        0.1
    }

    pub fn ideal() -> Self {
        DetectorConfig {
            dark_rate: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dwell", self.dwell),
            ("pair_rate", self.pair_rate),
            ("dark_rate", self.dark_rate),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(
                    name,
                    format!("{v} must be finite and non-negative"),
                ));
            }
        }
        Ok(())
    }

    pub fn mean_pairs(&self) -> f64 {
        self.pair_rate * self.dwell
    }

    pub fn mean_darks(&self) -> f64 {
        self.dark_rate * self.dwell
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            dwell: Self::default_dwell(),
            pair_rate: Self::default_pair_rate(),
            dark_rate: Self::default_dark_rate(),
        }
    }
}

/// How Alice and Bob pick their bases each interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BasisPolicy {
    /// Each party draws HV or DA uniformly and independently.
    #[default]
    Random,
    Fixed {
        alice: MeasBasis,
        bob: MeasBasis,
    },
}

impl BasisPolicy {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (MeasBasis, MeasBasis) {
        match *self {
            BasisPolicy::Random => {
                let a = MeasBasis::KEY_BASES[rng.random_range(0..2)];
                let b = MeasBasis::KEY_BASES[rng.random_range(0..2)];
                (a, b)
            }
            BasisPolicy::Fixed { alice, bob } => (alice, bob),
        }
    }
}

/// One dwell interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub alice_basis: MeasBasis,
    pub bob_basis: MeasBasis,
    pub eve_applied: bool,
    pub eve_basis: Option<MeasBasis>,
    pub eve_bit: Option<u8>,
    pub alice_bit: Option<u8>,
    pub bob_bit: Option<u8>,
    /// Exactly one click on each side.
    pub kept: bool,
}

impl TrialRecord {
    pub fn same_basis(&self) -> bool {
        self.alice_basis == self.bob_basis
    }

    pub fn agree(&self) -> Option<bool> {
        match (self.alice_bit, self.bob_bit) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        }
    }
}

/// Joint outcome probabilities; index `[alice_bit][bob_bit]` through
/// [`JointProbs::get`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointProbs {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl JointProbs {
    pub fn get(&self, alice: u8, bob: u8) -> f64 {
        match (alice, bob) {
            (1, 1) => self.p11,
            (1, 0) => self.p10,
            (0, 1) => self.p01,
            _ => self.p00,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn agreement(&self) -> f64 {
        self.p11 + self.p00
    }
}

/// `p_xy = Tr[ρ (P_x^a ⊗ P_y^b)]`.
pub fn joint_probs(s: &TwoQubitState, a: MeasBasis, b: MeasBasis) -> JointProbs {
    let p = |x: u8, y: u8| s.expect(&tensor(&a.projector(x), &b.projector(y))).max(0.0);
    JointProbs {
        p11: p(1, 1),
        p10: p(1, 0),
        p01: p(0, 1),
        p00: p(0, 0),
    }
}

/// Draws `(alice_bit, bob_bit)` from [`joint_probs`].
pub fn sample_trial<R: Rng + ?Sized>(
    s: &TwoQubitState,
    a: MeasBasis,
    b: MeasBasis,
    rng: &mut R,
) -> (u8, u8) {
    sample_joint(&joint_probs(s, a, b), rng)
}

pub fn sample_joint<R: Rng + ?Sized>(p: &JointProbs, rng: &mut R) -> (u8, u8) {
    let u = rng.random::<f64>() * p.total();
    let mut acc = 0.0;
    let outcomes = [(1, 1), (1, 0), (0, 1), (0, 0)];
    for (prob, out) in p.as_array().into_iter().zip(outcomes) {
        acc += prob;
        if u < acc {
            return out;
        }
    }
    // Rounding at the top edge: last outcome with non-zero weight.
    p.as_array()
        .into_iter()
        .zip(outcomes)
        .rev()
        .find(|(prob, _)| *prob > 0.0)
        .map(|(_, o)| o)
        .unwrap_or((0, 0))
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    Poisson::new(mean)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

/// Simulates `n_intervals` dwell intervals.
///
/// Per interval, in draw order: bases, pair count, dark counts for Alice's
/// plus/minus and Bob's plus/minus detectors, then, only when the interval is
/// kept and carries a real pair, Eve's action followed by the joint outcome.
/// An interval is kept when exactly one click occurred on each side; a
/// dark-only interval can be kept and yields uncorrelated bits.
pub fn simulate_dwell_stream<R: Rng + ?Sized>(
    s: &TwoQubitState,
    config: &DetectorConfig,
    n_intervals: usize,
    policy: BasisPolicy,
    eve: &EveConfig,
    rng: &mut R,
) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    eve.validate()?;
    if n_intervals == 0 {
        return Err(invalid("n_intervals", "must be at least 1"));
    }
    let mu_pair = config.mean_pairs();
    let mu_dark = config.mean_darks();
    let mut records = Vec::with_capacity(n_intervals);

    for trial_index in 0..n_intervals {
        let (alice_basis, bob_basis) = policy.draw(rng);
        let pairs = poisson(mu_pair, rng);
        let darks: [u64; 4] = std::array::from_fn(|_| poisson(mu_dark, rng));
        let alice_clicks = pairs + darks[0] + darks[1];
        let bob_clicks = pairs + darks[2] + darks[3];
        let kept = alice_clicks == 1 && bob_clicks == 1;

        let mut rec = TrialRecord {
            trial_index,
            alice_basis,
            bob_basis,
            eve_applied: false,
            eve_basis: None,
            eve_bit: None,
            alice_bit: None,
            bob_bit: None,
            kept,
        };
        if kept {
            if pairs == 1 {
                let action = eve.apply(s, rng)?;
                let (a, b) = sample_trial(&action.state, alice_basis, bob_basis, rng);
                rec.eve_applied = action.applied;
                rec.eve_basis = action.basis;
                rec.eve_bit = action.eve_bit;
                rec.alice_bit = Some(a);
                rec.bob_bit = Some(b);
            } else {
                // Dark-only: the firing detector sets the bit.
                rec.alice_bit = Some(u8::from(darks[0] == 1));
                rec.bob_bit = Some(u8::from(darks[2] == 1));
            }
        }
        records.push(rec);
    }
    Ok(records)
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with header `trial_index,alice_basis,bob_basis,eve_basis,alice_bit,bob_bit,kept`
/// and, when `with_agree`, a trailing `agree` column. Missing values are
/// empty fields.
pub fn records_to_csv(records: &[TrialRecord], with_agree: bool) -> String {
    let mut out =
        String::from("trial_index,alice_basis,bob_basis,eve_basis,alice_bit,bob_bit,kept");
    if with_agree {
        out.push_str(",agree");
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.trial_index,
            r.alice_basis,
            r.bob_basis,
            opt(r.eve_basis),
            opt(r.alice_bit),
            opt(r.bob_bit),
            r.kept
        );
        if with_agree {
            let _ = write!(out, ",{}", opt(r.agree()));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::states::{bell_phi_plus, dephase_bob};

    fn approx(a: [f64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn bell_joint_probabilities() {
        let s = bell_phi_plus();
        let hv = joint_probs(&s, MeasBasis::HV, MeasBasis::HV);
        assert!(approx(hv.as_array(), [0.5, 0.0, 0.0, 0.5]));
        let mixed = joint_probs(&s, MeasBasis::HV, MeasBasis::DA);
        assert!(approx(mixed.as_array(), [0.25; 4]));
    }

    #[test]
    fn dephased_state_is_random_in_da() {
        let s = dephase_bob(&bell_phi_plus(), 0.0, 1.0).unwrap();
        let da = joint_probs(&s, MeasBasis::DA, MeasBasis::DA);
        assert!(approx(da.as_array(), [0.25; 4]));
    }

    #[test]
    fn same_basis_bits_always_agree() {
        let mut rng = seeded(2);
        let bell = bell_phi_plus();
        let deph = dephase_bob(&bell, 0.0, 1.0).unwrap();
        for _ in 0..2000 {
            for b in MeasBasis::KEY_BASES {
                let (x, y) = sample_trial(&bell, b, b, &mut rng);
                assert_eq!(x, y);
            }
            let (x, y) = sample_trial(&deph, MeasBasis::HV, MeasBasis::HV, &mut rng);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn cross_basis_agreement_is_half() {
        let mut rng = seeded(9);
        let n = 10_000;
        let agree = (0..n)
            .filter(|_| {
                let (a, b) = sample_trial(&bell_phi_plus(), MeasBasis::HV, MeasBasis::DA, &mut rng);
                a == b
            })
            .count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((agree as f64 / n as f64 - 0.5).abs() < 4.0 * sigma);
    }

    fn keep_fraction(cfg: DetectorConfig, seed: u64) -> f64 {
        let mut rng = seeded(seed);
        let recs = simulate_dwell_stream(
            &bell_phi_plus(),
            &cfg,
            10_000,
            BasisPolicy::Random,
            &EveConfig::absent(),
            &mut rng,
        )
        .unwrap();
        recs.iter().filter(|r| r.kept).count() as f64 / recs.len() as f64
    }

    #[test]
    fn keep_fraction_matches_poisson_single_event() {
        let p = (-1.0f64).exp();
        let sigma = (p * (1.0 - p) / 10_000.0).sqrt();
        let f = keep_fraction(DetectorConfig::ideal(), 4);
        assert!((f - p).abs() < 4.0 * sigma, "{f}");
    }

    #[test]
    fn no_light_no_records() {
        let cfg = DetectorConfig {
            dwell: 0.1,
            pair_rate: 0.0,
            dark_rate: 0.0,
        };
        assert_eq!(keep_fraction(cfg, 1), 0.0);
    }

    #[test]
    fn dark_counts_reduce_keep_fraction() {
        let noisy = DetectorConfig {
            dwell: 0.1,
            pair_rate: 10.0,
            dark_rate: 10.0,
        };
        assert!(keep_fraction(noisy, 4) < keep_fraction(DetectorConfig::ideal(), 4));
    }

    #[test]
    fn kept_records_carry_both_bits() {
        let mut rng = seeded(8);
        let cfg = DetectorConfig {
            dark_rate: 2.0,
            ..Default::default()
        };
        let recs = simulate_dwell_stream(
            &bell_phi_plus(),
            &cfg,
            5000,
            BasisPolicy::Random,
            &EveConfig::absent(),
            &mut rng,
        )
        .unwrap();
        for r in &recs {
            assert_eq!(r.kept, r.alice_bit.is_some() && r.bob_bit.is_some());
        }
    }

    #[test]
    fn zero_intervals_rejected() {
        let mut rng = seeded(0);
        assert!(simulate_dwell_stream(
            &bell_phi_plus(),
            &DetectorConfig::default(),
            0,
            BasisPolicy::Random,
            &EveConfig::absent(),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn csv_layout() {
        let r = TrialRecord {
            trial_index: 3,
            alice_basis: MeasBasis::HV,
            bob_basis: MeasBasis::DA,
            eve_applied: true,
            eve_basis: Some(MeasBasis::DA),
            eve_bit: Some(1),
            alice_bit: Some(1),
            bob_bit: Some(0),
            kept: true,
        };
        let mut d = r;
        d.kept = false;
        d.alice_bit = None;
        d.bob_bit = None;
        d.eve_basis = None;
        let csv = records_to_csv(&[r, d], true);
        assert_eq!(
            csv,
            "trial_index,alice_basis,bob_basis,eve_basis,alice_bit,bob_bit,kept,agree\n\
             3,HV,DA,DA,1,0,true,false\n\
             3,HV,DA,,,,false,\n"
        );
    }
}
