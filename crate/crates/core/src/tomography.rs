//! Two-photon state tomography from sixteen projective measurements, state
//! metrics with bootstrap uncertainties, and CHSH evaluation.
//!
//! Reconstruction is linear inversion in the two-qubit Pauli basis followed
//! by spectral clipping onto the physical states ([`nearest_physical`]). The
//! total flux is normalized from the `HH, HV, VV, VH` settings, which together
//! form a complete measurement.
//!
//! The tangle is the squared Wootters concurrence
//! `C = max(0, λ1 - λ2 - λ3 - λ4)`, with `λi` the decreasing square roots of
//! the eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)`. They are obtained as square
//! roots of the eigenvalues of the hermitian matrix `√ρ ρ̃ √ρ`, which has the
//! same spectrum.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::optics::{from_horizontal, linear, projector, AnalyzerSetting, PolState};
use crate::qmath::{
    herm_eig, invert_real, nearest_physical, pauli_y, paulis, sqrt_psd, tensor, CMat4, CVec4,
};
use crate::rng::substream;
use crate::states::{phi_plus_ket, TwoQubitState};

/// One measurement: Alice's and Bob's analyzer states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Setting {
    pub alice: PolState,
    pub bob: PolState,
}

impl Setting {
    const fn new(alice: PolState, bob: PolState) -> Self {
        Setting { alice, bob }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.alice, self.bob)
    }

    pub fn projector(&self) -> CMat4 {
        tensor(&projector(self.alice), &projector(self.bob))
    }

    /// Wave-plate settings of both analyzers.
    pub fn analyzers(&self) -> (AnalyzerSetting, AnalyzerSetting) {
        (
            AnalyzerSetting::for_state(self.alice),
            AnalyzerSetting::for_state(self.bob),
        )
    }
}

use PolState::{D, H, L, R, V};

/// The measurement order used for counts everywhere in this module.
pub const SCHEDULE: [Setting; 16] = [
    Setting::new(H, H),
    Setting::new(H, V),
    Setting::new(V, V),
    Setting::new(V, H),
    Setting::new(R, H),
    Setting::new(R, V),
    Setting::new(D, V),
    Setting::new(D, H),
    Setting::new(D, R),
    Setting::new(D, D),
    Setting::new(R, D),
    Setting::new(H, D),
    Setting::new(V, D),
    Setting::new(V, L),
    Setting::new(H, L),
    Setting::new(R, L),
];

/// Indices of the flux-normalizing quartet `HH, HV, VV, VH`.
const FLUX_SETTINGS: [usize; 4] = [0, 1, 2, 3];

/// Coincidence counts in [`SCHEDULE`] order. Real-valued so that exact
/// expectations can be fed through the same path as measured data.
pub type Counts = [f64; 16];

pub fn schedule_labels() -> Vec<String> {
    SCHEDULE.iter().map(Setting::label).collect()
}

/// `σ_i ⊗ σ_j` for `μ = 4i + j`, with `σ_0 = I`.
fn pauli_products() -> [CMat4; 16] {
    let p = paulis();
    std::array::from_fn(|mu| tensor(&p[mu / 4], &p[mu % 4]))
}

/// `A[k][μ] = Tr[Π_k σ_μ] / 4`, so that `p_k = Σ_μ A[k][μ] r_μ` for
/// `ρ = Σ_μ r_μ σ_μ / 4`.
pub fn design_matrix() -> [[f64; 16]; 16] {
    let sig = pauli_products();
    std::array::from_fn(|k| {
        let pk = SCHEDULE[k].projector();
        std::array::from_fn(|mu| pk.trace_product(&sig[mu]).re / 4.0)
    })
}

fn design_inverse() -> Result<&'static [[f64; 16]; 16]> {
    static INV: OnceLock<Option<[[f64; 16]; 16]>> = OnceLock::new();
    INV.get_or_init(|| invert_real(&design_matrix()))
        .as_ref()
        .ok_or(QkdError::SingularDesign)
}

/// `n · Tr[ρ Π_k]` for every setting.
pub fn expected_counts(s: &TwoQubitState, n_per_setting: f64) -> Counts {
    std::array::from_fn(|k| n_per_setting * s.expect(&SCHEDULE[k].projector()).max(0.0))
}

/// Poisson-distributed counts around [`expected_counts`].
pub fn simulate_counts<R: Rng + ?Sized>(
    s: &TwoQubitState,
    n_per_setting: f64,
    rng: &mut R,
) -> Result<Counts> {
    if !(n_per_setting > 0.0) || !n_per_setting.is_finite() {
        return Err(crate::error::invalid(
            "n_per_setting",
            "must be positive and finite",
        ));
    }
    let mean = expected_counts(s, n_per_setting);
    Ok(mean.map(|m| poisson(m, rng)))
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        0.0
    } else {
        Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0)
    }
}

/// Flux estimate `N̂` from the complete `HH, HV, VV, VH` quartet.
pub fn total_flux(counts: &Counts) -> f64 {
    FLUX_SETTINGS.iter().map(|&k| counts[k]).sum()
}

/// Unconstrained linear estimate; hermitian but possibly not PSD.
pub fn linear_inversion(counts: &Counts) -> Result<CMat4> {
    if counts.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(QkdError::Parse(
            "counts must be finite and non-negative".into(),
        ));
    }
    let flux = total_flux(counts);
    if flux <= 0.0 {
        return Err(QkdError::ZeroFlux);
    }
    let inv = design_inverse()?;
    let p = counts.map(|c| c / flux);
    let sig = pauli_products();
    let mut rho = CMat4::zeros();
    for (mu, row) in inv.iter().enumerate() {
        let r: f64 = row.iter().zip(&p).map(|(a, b)| a * b).sum();
        rho = rho + sig[mu].scale(r / 4.0);
    }
    Ok(rho.hermitian_part())
}

/// `DH, DV, RH, RV`: their projectors sum to `(P_D + P_R) ⊗ I`, which is
/// bounded below, so every state sends a fixed fraction of the flux there.
const COHERENCE_SETTINGS: [usize; 4] = [4, 5, 6, 7];

const CONSISTENCY_P: f64 = 1e-6;

/// `ln P(X <= c)` for `X ~ Poisson(mean)`.
fn poisson_ln_cdf(c: f64, mean: f64) -> f64 {
    if c >= mean {
        return 0.0;
    }
    let mut ln_term = -mean;
    let mut acc = ln_term;
    let mut j = 1.0;
    while j <= c.floor() {
        ln_term += mean.ln() - f64::ln(j);
        acc = acc.max(ln_term) + (-(acc - ln_term).abs()).exp().ln_1p();
        j += 1.0;
    }
    acc
}

/// Rejects counts that no state could plausibly produce, such as flux
/// confined to the `H/V` settings.
fn check_consistency(counts: &Counts) -> Result<()> {
    static BOUND: OnceLock<f64> = OnceLock::new();
    let bound = *BOUND.get_or_init(|| {
        let sum = COHERENCE_SETTINGS
            .iter()
            .fold(CMat4::zeros(), |acc, &k| acc + SCHEDULE[k].projector());
        herm_eig(&sum).map(|e| e.values[3]).unwrap_or(0.0)
    });
    let observed: f64 = COHERENCE_SETTINGS.iter().map(|&k| counts[k]).sum();
    let floor = bound * total_flux(counts);
    if poisson_ln_cdf(observed, floor) < CONSISTENCY_P.ln() {
        return Err(QkdError::Unphysical(format!(
            "DH+DV+RH+RV counts {observed} are far below the minimum {floor:.1} any state produces"
        )));
    }
    Ok(())
}

/// Linear inversion, then projection onto the physical states.
pub fn reconstruct(counts: &Counts) -> Result<TwoQubitState> {
    let raw = linear_inversion(counts)?;
    check_consistency(counts)?;
    TwoQubitState::new(nearest_physical(&raw)?)
}

/// Maps labelled rows onto [`SCHEDULE`] order. Every setting must appear
/// exactly once.
pub fn counts_from_settings(rows: &[(PolState, PolState, f64)]) -> Result<Counts> {
    let mut counts = [f64::NAN; 16];
    for &(a, b, c) in rows {
        let k = SCHEDULE
            .iter()
            .position(|s| s.alice == a && s.bob == b)
            .ok_or_else(|| QkdError::Parse(format!("setting {a}{b} is not in the schedule")))?;
        if !counts[k].is_nan() {
            return Err(QkdError::Parse(format!("setting {a}{b} listed twice")));
        }
        counts[k] = c;
    }
    if let Some(k) = counts.iter().position(|c| c.is_nan()) {
        return Err(QkdError::Parse(format!(
            "missing setting {}",
            SCHEDULE[k].label()
        )));
    }
    Ok(counts)
}

pub fn concurrence(s: &TwoQubitState) -> f64 {
    let rho = s.rho();
    let yy = tensor(&pauli_y(), &pauli_y());
    let flipped = yy * rho.conj() * yy;
    let Ok(root) = sqrt_psd(rho) else { return 0.0 };
    let r = (root * flipped * root).hermitian_part();
    let Ok(eig) = herm_eig(&r) else { return 0.0 };
    let l = eig.values.map(|x| x.max(0.0).sqrt());
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

pub fn tangle(s: &TwoQubitState) -> f64 {
    concurrence(s).powi(2)
}

/// `-Σ λ log2 λ` over the spectrum, `0 log 0 = 0`.
pub fn von_neumann(s: &TwoQubitState) -> f64 {
    herm_eig(s.rho())
        .map(|e| {
            e.values
                .iter()
                .filter(|&&x| x > 1e-15)
                .map(|&x| -x * x.log2())
                .sum::<f64>()
        })
        .unwrap_or(0.0)
        .max(0.0)
}

/// `(4/3)(1 - Tr ρ²)`: 0 for pure, 2/3 for an equal two-state mixture, 1 for
/// the maximally mixed state.
pub fn linear_entropy(s: &TwoQubitState) -> f64 {
    let purity = s.rho().trace_product(s.rho()).re;
    4.0 / 3.0 * (1.0 - purity)
}

/// `<t|ρ|t>` for a pure target.
pub fn fidelity(s: &TwoQubitState, target: &CVec4) -> f64 {
    s.rho().expectation(&target.normalized()).re
}

/// Point value with bootstrap mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub mean: f64,
    pub sigma: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Estimate {
            value,
            mean: value,
            sigma: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub tangle: Estimate,
    pub von_neumann: Estimate,
    pub linear_entropy: Estimate,
    pub fidelity: Estimate,
    pub replicas: usize,
    pub failed_replicas: usize,
    /// Replica metric values pulled back into range before aggregation.
    pub clamp_events: usize,
}

/// Upper clamp for each metric; entropy of a two-qubit state reaches 2 bits.
const METRIC_MAX: [f64; 4] = [1.0, 2.0, 1.0, 1.0];

fn raw_metrics(s: &TwoQubitState, target: &CVec4) -> [f64; 4] {
    [
        tangle(s),
        von_neumann(s),
        linear_entropy(s),
        fidelity(s, target),
    ]
}

impl StateMetrics {
    /// Metrics of a known state, no uncertainties.
    pub fn exact(s: &TwoQubitState, target: &CVec4) -> Self {
        let [t, sv, sl, f] = raw_metrics(s, target);
        StateMetrics {
            tangle: Estimate::exact(t),
            von_neumann: Estimate::exact(sv),
            linear_entropy: Estimate::exact(sl),
            fidelity: Estimate::exact(f),
            replicas: 0,
            failed_replicas: 0,
            clamp_events: 0,
        }
    }
}

fn clamp_metrics(m: [f64; 4], events: &mut usize) -> [f64; 4] {
    std::array::from_fn(|i| {
        let c = m[i].clamp(0.0, METRIC_MAX[i]);
        if c != m[i] {
            *events += 1;
        }
        c
    })
}

fn replica_metrics(counts: &Counts, seed: u64, index: usize, target: &CVec4) -> Option<[f64; 4]> {
    let mut rng = substream(seed, index as u64);
    let resampled = counts.map(|c| poisson(c, &mut rng));
    reconstruct(&resampled)
        .ok()
        .map(|s| raw_metrics(&s, target))
}

/// Parametric Poisson bootstrap: each replica resamples every count from
/// `Poisson(count)` using stream `(seed, replica_index)`, reconstructs, and
/// evaluates the metrics. Replicas whose reconstruction fails are counted
/// and skipped.
pub fn bootstrap_metrics(
    counts: &Counts,
    replicas: usize,
    seed: u64,
    target: &CVec4,
) -> Result<StateMetrics> {
    if replicas < 2 {
        return Err(crate::error::invalid("replicas", "need at least 2"));
    }
    let point = reconstruct(counts)?;
    let mut clamp_events = 0;
    let point_values = clamp_metrics(raw_metrics(&point, target), &mut clamp_events);

    #[cfg(feature = "parallel")]
    let samples: Vec<Option<[f64; 4]>> = {
        use rayon::prelude::*;
        (0..replicas)
            .into_par_iter()
            .map(|i| replica_metrics(counts, seed, i, target))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let samples: Vec<Option<[f64; 4]>> = (0..replicas)
        .map(|i| replica_metrics(counts, seed, i, target))
        .collect();

    let ok: Vec<[f64; 4]> = samples
        .into_iter()
        .flatten()
        .map(|m| clamp_metrics(m, &mut clamp_events))
        .collect();
    let failed = replicas - ok.len();
    if ok.len() < 2 {
        return Err(QkdError::Unphysical(format!(
            "only {} of {replicas} bootstrap replicas reconstructed",
            ok.len()
        )));
    }
    let n = ok.len() as f64;
    let est = |i: usize| {
        let mean = ok.iter().map(|m| m[i]).sum::<f64>() / n;
        let var = ok.iter().map(|m| (m[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            value: point_values[i],
            mean,
            sigma: var.sqrt(),
        }
    };
    Ok(StateMetrics {
        tangle: est(0),
        von_neumann: est(1),
        linear_entropy: est(2),
        fidelity: est(3),
        replicas,
        failed_replicas: failed,
        clamp_events,
    })
}

/// A complete tomography run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TomographyRun {
    pub schedule: Vec<String>,
    pub counts: Vec<f64>,
    pub total_estimate: f64,
    pub rho_hat: CMat4,
    pub metrics: StateMetrics,
}

pub fn run_tomography(counts: &Counts, replicas: usize, seed: u64) -> Result<TomographyRun> {
    let rho_hat = reconstruct(counts)?;
    let metrics = bootstrap_metrics(counts, replicas, seed, &phi_plus_ket())?;
    Ok(TomographyRun {
        schedule: schedule_labels(),
        counts: counts.to_vec(),
        total_estimate: total_flux(counts),
        rho_hat: *rho_hat.rho(),
        metrics,
    })
}

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

/// Real parts of the sixteen matrix elements as `(row, col, value)`.
pub fn bar_data(rho: &CMat4) -> Vec<(&'static str, &'static str, f64)> {
    (0..16)
        .map(|k| {
            (
                BASIS_LABELS[k / 4],
                BASIS_LABELS[k % 4],
                rho.get(k / 4, k % 4).re,
            )
        })
        .collect()
}

/// `E(α, β) = P(++) - P(+-) - P(-+) + P(--)` for linear analyzers at `α`
/// (Alice) and `β` (Bob), degrees from horizontal.
pub fn correlator(s: &TwoQubitState, alpha: f64, beta: f64) -> f64 {
    let proj = |deg: f64| linear(from_horizontal(deg)).outer();
    let (ap, am) = (proj(alpha), proj(alpha + 90.0));
    let (bp, bm) = (proj(beta), proj(beta + 90.0));
    s.expect(&tensor(&ap, &bp)) - s.expect(&tensor(&ap, &bm)) - s.expect(&tensor(&am, &bp))
        + s.expect(&tensor(&am, &bm))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshAngles {
    /// Maximal-violation angles for `|φ+>`.
    pub const CANONICAL: ChshAngles = ChshAngles {
        a: 0.0,
        a_prime: 45.0,
        b: 22.5,
        b_prime: 67.5,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub angles: ChshAngles,
    /// `(alice_angle, bob_angle, E)` for `ab, ab', a'b, a'b'`.
    pub correlators: Vec<(f64, f64, f64)>,
    pub s: f64,
}

/// `S = E(a,b) - E(a,b') + E(a',b) + E(a',b')`.
pub fn chsh(s: &TwoQubitState, angles: ChshAngles) -> ChshReport {
    let ChshAngles {
        a,
        a_prime,
        b,
        b_prime,
    } = angles;
    let pairs = [(a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime)];
    let correlators: Vec<(f64, f64, f64)> = pairs
        .iter()
        .map(|&(x, y)| (x, y, correlator(s, x, y)))
        .collect();
    let e: Vec<f64> = correlators.iter().map(|c| c.2).collect();
    ChshReport {
        angles,
        correlators,
        s: e[0] - e[1] + e[2] + e[3],
    }
}

/// Largest CHSH value over all projective measurements,
/// `2 sqrt(u1 + u2)` with `u1, u2` the two largest eigenvalues of `TᵀT`,
/// `T_ij = Tr[ρ σi⊗σj]`.
pub fn chsh_max(s: &TwoQubitState) -> f64 {
    let p = paulis();
    let t: [[f64; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| s.expect(&tensor(&p[i + 1], &p[j + 1]))));
    let mut m = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let Ok(eig) = herm_eig(&CMat4::from_real(m)) else {
        return 0.0;
    };
    2.0 * (eig.values[0].max(0.0) + eig.values[1].max(0.0)).sqrt()
}
