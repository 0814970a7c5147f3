//! Two-photon states, the source imperfection model and the eavesdropper
//! channels acting on Bob's photon.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optics::{from_horizontal, linear, MeasBasis};
use crate::qmath::{check_density, tensor, CMat, CMat2, CMat4, CVec, CVec2, CVec4, C64, ZERO};

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A validated two-qubit density matrix (hermitian, unit trace, PSD).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TwoQubitState {
    rho: CMat4,
}

impl TwoQubitState {
    pub fn new(rho: CMat4) -> Result<Self> {
        check_density(&rho)?;
        Ok(TwoQubitState {
            rho: rho.hermitian_part(),
        })
    }

    /// Wraps a matrix built by a trace- and positivity-preserving map.
    pub(crate) fn from_channel(rho: CMat4) -> Self {
        TwoQubitState {
            rho: rho.hermitian_part(),
        }
    }

    pub fn pure(psi: &CVec4) -> Self {
        TwoQubitState::from_channel(psi.normalized().outer())
    }

    pub fn product(alice: &CVec2, bob: &CVec2) -> Self {
        TwoQubitState::pure(&alice.kron(bob))
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState::from_channel(CMat4::identity().scale(0.25))
    }

    /// Random mixed state `G G^† / Tr` with a complex Gaussian `4 x rank`
    /// matrix `G`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Self {
        let rank = rank.clamp(1, 4);
        let mut g = [[ZERO; 4]; 4];
        for row in g.iter_mut() {
            for z in row.iter_mut().take(rank) {
                *z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
        }
        let g = CMat(g);
        let m = g * g.adjoint();
        let tr = m.trace().re;
        TwoQubitState::from_channel(m.scale(1.0 / tr))
    }

    pub fn rho(&self) -> &CMat4 {
        &self.rho
    }

    pub fn into_rho(self) -> CMat4 {
        self.rho
    }

    /// `Tr[ρ op]`, real part.
    pub fn expect(&self, op: &CMat4) -> f64 {
        self.rho.trace_product(op).re
    }
}

/// `(|HH> + |VV>)/√2`.
pub fn phi_plus_ket() -> CVec4 {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CVec([s, ZERO, ZERO, s])
}

/// The ideal source state `|φ+><φ+|`.
pub fn bell_phi_plus() -> TwoQubitState {
    TwoQubitState::pure(&phi_plus_ket())
}

fn check_fraction(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(invalid(name, format!("{x} is outside [0, 1]")));
    }
    Ok(())
}

/// Mixes in white noise: `(1-p) ρ + p I/4`.
pub fn add_white_noise(s: &TwoQubitState, p: f64) -> Result<TwoQubitState> {
    check_fraction("p", p)?;
    let rho = s.rho.scale(1.0 - p) + CMat4::identity().scale(p / 4.0);
    Ok(TwoQubitState::from_channel(rho))
}

/// Projectors `(P+, P-)` onto the linear basis whose plus axis is at `deg`
/// from horizontal.
pub fn linear_basis_projectors(deg_from_horizontal: f64) -> (CMat2, CMat2) {
    let plus = linear(from_horizontal(deg_from_horizontal));
    let minus = linear(from_horizontal(deg_from_horizontal + 90.0));
    (plus.outer(), minus.outer())
}

fn bob_op(p: &CMat2) -> CMat4 {
    tensor(&CMat2::identity(), p)
}

/// Dephases Bob's photon in the linear basis at `basis_angle` degrees from
/// horizontal with strength `gamma`:
/// `ρ' = (1-γ)ρ + γ Σ± (I⊗P±) ρ (I⊗P±)`.
pub fn dephase_bob(s: &TwoQubitState, basis_angle: f64, gamma: f64) -> Result<TwoQubitState> {
    check_fraction("gamma", gamma)?;
    let (pp, pm) = linear_basis_projectors(basis_angle);
    let (kp, km) = (bob_op(&pp), bob_op(&pm));
    let measured = kp * s.rho * kp + km * s.rho * km;
    let rho = s.rho.scale(1.0 - gamma) + measured.scale(gamma);
    Ok(TwoQubitState::from_channel(rho))
}

/// Eve measures Bob's photon in `basis` and resends what she saw.
///
/// Returns Eve's bit (plus state reads 1) and the normalized post-measurement
/// state.
pub fn intercept_resend<R: Rng + ?Sized>(
    s: &TwoQubitState,
    basis: MeasBasis,
    rng: &mut R,
) -> (u8, TwoQubitState) {
    measure_bob(s, &basis.projector(1), &basis.projector(0), rng)
}

/// As [`intercept_resend`] for a linear basis at an arbitrary angle.
pub fn intercept_resend_at<R: Rng + ?Sized>(
    s: &TwoQubitState,
    basis_angle: f64,
    rng: &mut R,
) -> (u8, TwoQubitState) {
    let (pp, pm) = linear_basis_projectors(basis_angle);
    measure_bob(s, &pp, &pm, rng)
}

/// Both measurement branches: `[(probability, post-state); 2]` for outcomes
/// 1 and 0. A zero-probability branch carries the input state unchanged.
pub fn bob_measurement_branches(
    s: &TwoQubitState,
    plus: &CMat2,
    minus: &CMat2,
) -> [(f64, TwoQubitState); 2] {
    [plus, minus].map(|p| {
        let k = bob_op(p);
        let proj = k * s.rho * k;
        let prob = proj.trace().re.max(0.0);
        let post = if prob > 0.0 {
            TwoQubitState::from_channel(proj.scale(1.0 / prob))
        } else {
            *s
        };
        (prob, post)
    })
}

fn measure_bob<R: Rng + ?Sized>(
    s: &TwoQubitState,
    plus: &CMat2,
    minus: &CMat2,
    rng: &mut R,
) -> (u8, TwoQubitState) {
    let [(p1, post1), (p0, post0)] = bob_measurement_branches(s, plus, minus);
    let u: f64 = rng.random::<f64>() * (p1 + p0);
    // Strict comparison: a zero-probability branch is never selected.
    if u < p1 {
        (1, post1)
    } else if p0 > 0.0 {
        (0, post0)
    } else {
        (1, post1)
    }
}

/// Birefringent plate standing in for Eve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuartzPlate {
    pub thickness_mm: f64,
    #[serde(default = "QuartzPlate::default_birefringence")]
    pub birefringence: f64,
    #[serde(default = "QuartzPlate::default_coherence_time")]
    pub coherence_time_fs: f64,
    /// Fast-axis angle, degrees from horizontal; 0 dephases HV, 45 DA.
    #[serde(default)]
    pub axis_angle: f64,
}

impl QuartzPlate {
    /// Birefringence giving a 207 fs walk-off for an 8 mm plate.
    pub const DEFAULT_BIREFRINGENCE: f64 = 0.00776;
    /// Coherence time of 40 nm filtered down-converted light.
    pub const DEFAULT_COHERENCE_TIME_FS: f64 = 54.0;
    pub const FULL_EVE_THICKNESS_MM: f64 = 8.0;
    pub const PARTIAL_EVE_THICKNESS_MM: f64 = 1.0;

    fn default_birefringence() -> f64 {
        Self::DEFAULT_BIREFRINGENCE
    }

    fn default_coherence_time() -> f64 {
        Self::DEFAULT_COHERENCE_TIME_FS
    }

    pub fn new(thickness_mm: f64, axis_angle: f64) -> Self {
        QuartzPlate {
            thickness_mm,
            birefringence: Self::DEFAULT_BIREFRINGENCE,
            coherence_time_fs: Self::DEFAULT_COHERENCE_TIME_FS,
            axis_angle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness_mm >= 0.0) {
            return Err(invalid("thickness_mm", "must be non-negative"));
        }
        if !(self.coherence_time_fs > 0.0) {
            return Err(invalid("coherence_time_fs", "must be positive"));
        }
        if !(self.birefringence >= 0.0) {
            return Err(invalid("birefringence", "must be non-negative"));
        }
        Ok(())
    }

    /// Group delay between fast and slow axes, femtoseconds.
    pub fn delay_fs(&self) -> f64 {
        self.birefringence * self.thickness_mm * 1e-3 / SPEED_OF_LIGHT * 1e15
    }
}

/// Dephasing strength of a plate: Gaussian coherence decay
/// `γ = 1 - exp(-(τ/τc)^2)`, clamped to `[0, 1]`.
pub fn plate_gamma(p: &QuartzPlate) -> f64 {
    let x = p.delay_fs() / p.coherence_time_fs;
    (1.0 - (-x * x).exp()).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveMode {
    #[default]
    Absent,
    InterceptResend,
    Dephasing,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveBasisPolicy {
    #[default]
    Fixed,
    RandomPerTrial,
}

/// Eavesdropper configuration.
///
/// `strength` is the dephasing strength γ; when `plate` is set it overrides
/// both `strength` (via [`plate_gamma`]) and `basis_angle` (the plate axis).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EveConfig {
    #[serde(default)]
    pub mode: EveMode,
    /// Degrees from horizontal: 0 is HV, 45 is DA.
    #[serde(default)]
    pub basis_angle: f64,
    #[serde(default = "one")]
    pub strength: f64,
    #[serde(default = "one")]
    pub intercept_fraction: f64,
    #[serde(default)]
    pub basis_policy: EveBasisPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plate: Option<QuartzPlate>,
}

fn one() -> f64 {
    1.0
}

impl Default for EveConfig {
    fn default() -> Self {
        EveConfig::absent()
    }
}

/// What Eve did to one trial.
#[derive(Clone, Copy, Debug)]
pub struct EveAction {
    pub applied: bool,
    pub basis: Option<MeasBasis>,
    pub eve_bit: Option<u8>,
    pub state: TwoQubitState,
}

impl EveConfig {
    pub fn absent() -> Self {
        EveConfig {
            mode: EveMode::Absent,
            basis_angle: 0.0,
            strength: 1.0,
            intercept_fraction: 1.0,
            basis_policy: EveBasisPolicy::Fixed,
            plate: None,
        }
    }

    pub fn intercept_resend(policy: EveBasisPolicy, basis: MeasBasis, fraction: f64) -> Self {
        EveConfig {
            mode: EveMode::InterceptResend,
            basis_angle: basis.axis_from_horizontal().unwrap_or(0.0),
            intercept_fraction: fraction,
            basis_policy: policy,
            ..EveConfig::absent()
        }
    }

    pub fn dephasing(basis_angle: f64, gamma: f64) -> Self {
        EveConfig {
            mode: EveMode::Dephasing,
            basis_angle,
            strength: gamma,
            ..EveConfig::absent()
        }
    }

    pub fn from_plate(plate: QuartzPlate) -> Self {
        EveConfig {
            mode: EveMode::Dephasing,
            basis_angle: plate.axis_angle,
            strength: plate_gamma(&plate),
            plate: Some(plate),
            ..EveConfig::absent()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_fraction("strength", self.strength)?;
        check_fraction("intercept_fraction", self.intercept_fraction)?;
        if !self.basis_angle.is_finite() {
            return Err(invalid("basis_angle", "must be finite"));
        }
        if let Some(p) = &self.plate {
            p.validate()?;
        }
        Ok(())
    }

    pub fn effective_gamma(&self) -> f64 {
        self.plate
            .as_ref()
            .map(plate_gamma)
            .unwrap_or(self.strength)
    }

    pub fn effective_angle(&self) -> f64 {
        self.plate.map(|p| p.axis_angle).unwrap_or(self.basis_angle)
    }

    /// Averaged channel, with the per-trial gate and random basis choice
    /// folded in. Intercept-resend averages to full dephasing.
    pub fn average_channel(&self, s: &TwoQubitState) -> Result<TwoQubitState> {
        let gamma = match self.mode {
            EveMode::Absent => return Ok(*s),
            EveMode::InterceptResend => 1.0,
            EveMode::Dephasing => self.effective_gamma(),
        };
        let angles: Vec<f64> = match self.basis_policy {
            EveBasisPolicy::Fixed => vec![self.effective_angle()],
            EveBasisPolicy::RandomPerTrial => vec![0.0, 45.0],
        };
        let w = 1.0 / angles.len() as f64;
        let mut rho = CMat4::zeros();
        for a in angles {
            rho = rho + dephase_bob(s, a, gamma)?.rho.scale(w);
        }
        let f = self.intercept_fraction;
        Ok(TwoQubitState::from_channel(
            s.rho.scale(1.0 - f) + rho.scale(f),
        ))
    }

    /// Applies Eve to one trial. Draws the intercept gate, then the basis
    /// when it is random, then (intercept-resend only) Eve's outcome.
    pub fn apply<R: Rng + ?Sized>(&self, s: &TwoQubitState, rng: &mut R) -> Result<EveAction> {
        let skip = EveAction {
            applied: false,
            basis: None,
            eve_bit: None,
            state: *s,
        };
        if self.mode == EveMode::Absent {
            return Ok(skip);
        }
        if self.intercept_fraction < 1.0 && rng.random::<f64>() >= self.intercept_fraction {
            return Ok(skip);
        }
        let angle = match self.basis_policy {
            EveBasisPolicy::Fixed => self.effective_angle(),
            EveBasisPolicy::RandomPerTrial => {
                if rng.random::<bool>() {
                    0.0
                } else {
                    45.0
                }
            }
        };
        let basis = MeasBasis::from_axis_angle(angle);
        let (eve_bit, state) = match self.mode {
            EveMode::InterceptResend => {
                let (bit, post) = intercept_resend_at(s, angle, rng);
                (Some(bit), post)
            }
            EveMode::Dephasing => (None, dephase_bob(s, angle, self.effective_gamma())?),
            EveMode::Absent => unreachable!(),
        };
        Ok(EveAction {
            applied: true,
            basis,
            eve_bit,
            state,
        })
    }
}
