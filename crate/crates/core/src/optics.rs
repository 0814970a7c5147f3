//! Jones-calculus polarization optics.
//!
//! Angle convention: wave-plate and analyzer angles are measured from the
//! vertical axis, positive counter-clockwise when looking into the beam.
//! Linear polarization at `a` degrees from vertical is `a + 90` degrees from
//! horizontal, so `D` sits at -45° and `A` at +45° from vertical. Callers that
//! think in degrees from horizontal go through [`from_horizontal`].
//!
//! Retarders put the phase `e^{iΓ}` on the slow axis. With that sign the
//! circular states are `R = (H - iV)/√2` and `L = (H + iV)/√2`, which is the
//! handedness for which a quarter-wave plate with vertical fast axis followed
//! by a transmission axis 45° counter-clockwise from it selects `R`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::QkdError;
use crate::qmath::{CMat, CMat2, CVec2, C64, ONE, ZERO};

/// Converts an angle measured from horizontal to the internal from-vertical
/// convention.
pub fn from_horizontal(deg: f64) -> f64 {
    deg - 90.0
}

/// Linear polarization at `deg` degrees from vertical.
pub fn linear(deg_from_vertical: f64) -> CVec2 {
    let phi = (deg_from_vertical + 90.0).to_radians();
    CVec2::new(C64::new(phi.cos(), 0.0), C64::new(phi.sin(), 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolState {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl PolState {
    pub const ALL: [PolState; 6] = [
        PolState::H,
        PolState::V,
        PolState::D,
        PolState::A,
        PolState::R,
        PolState::L,
    ];

    pub fn ket(self) -> CVec2 {
        let s = FRAC_1_SQRT_2;
        let r = |x: f64| C64::new(x, 0.0);
        match self {
            PolState::H => CVec2::new(ONE, ZERO),
            PolState::V => CVec2::new(ZERO, ONE),
            PolState::D => CVec2::new(r(s), r(s)),
            PolState::A => CVec2::new(r(s), r(-s)),
            PolState::R => CVec2::new(r(s), C64::new(0.0, -s)),
            PolState::L => CVec2::new(r(s), C64::new(0.0, s)),
        }
    }

    pub fn orthogonal(self) -> PolState {
        match self {
            PolState::H => PolState::V,
            PolState::V => PolState::H,
            PolState::D => PolState::A,
            PolState::A => PolState::D,
            PolState::R => PolState::L,
            PolState::L => PolState::R,
        }
    }

    pub fn basis(self) -> MeasBasis {
        match self {
            PolState::H | PolState::V => MeasBasis::HV,
            PolState::D | PolState::A => MeasBasis::DA,
            PolState::R | PolState::L => MeasBasis::RL,
        }
    }

    pub fn label(self) -> char {
        match self {
            PolState::H => 'H',
            PolState::V => 'V',
            PolState::D => 'D',
            PolState::A => 'A',
            PolState::R => 'R',
            PolState::L => 'L',
        }
    }

    pub fn from_label(c: char) -> Option<PolState> {
        PolState::ALL
            .into_iter()
            .find(|s| s.label() == c.to_ascii_uppercase())
    }
}

impl fmt::Display for PolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Measurement basis. The `plus` state reads as bit 1, `minus` as bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasBasis {
    HV,
    DA,
    RL,
}

impl MeasBasis {
    /// The two bases used for key generation.
    pub const KEY_BASES: [MeasBasis; 2] = [MeasBasis::HV, MeasBasis::DA];

    pub fn plus(self) -> PolState {
        match self {
            MeasBasis::HV => PolState::H,
            MeasBasis::DA => PolState::D,
            MeasBasis::RL => PolState::R,
        }
    }

    pub fn minus(self) -> PolState {
        self.plus().orthogonal()
    }

    /// State read as `bit`.
    pub fn state_for_bit(self, bit: u8) -> PolState {
        if bit == 1 {
            self.plus()
        } else {
            self.minus()
        }
    }

    /// Projector onto the outcome read as `bit`.
    pub fn projector(self, bit: u8) -> CMat2 {
        projector(self.state_for_bit(bit))
    }

    /// Half-wave plate angle (degrees from horizontal) that, placed before a
    /// splitter separating H and V, measures in this basis.
    pub fn splitter_hwp_from_horizontal(self) -> Option<f64> {
        match self {
            MeasBasis::HV => Some(0.0),
            MeasBasis::DA => Some(22.5),
            MeasBasis::RL => None,
        }
    }

    /// Orientation of the `plus` axis in degrees from horizontal, for the
    /// linear bases.
    pub fn axis_from_horizontal(self) -> Option<f64> {
        match self {
            MeasBasis::HV => Some(0.0),
            MeasBasis::DA => Some(45.0),
            MeasBasis::RL => None,
        }
    }

    /// Linear basis whose plus axis is at `deg` from horizontal, if it is one
    /// of the named ones (angles taken modulo 180°).
    pub fn from_axis_angle(deg: f64) -> Option<MeasBasis> {
        let a = deg.rem_euclid(180.0);
        if a.abs() < 1e-9 || (a - 180.0).abs() < 1e-9 {
            Some(MeasBasis::HV)
        } else if (a - 45.0).abs() < 1e-9 {
            Some(MeasBasis::DA)
        } else {
            None
        }
    }
}

impl fmt::Display for MeasBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MeasBasis::HV => "HV",
            MeasBasis::DA => "DA",
            MeasBasis::RL => "RL",
        };
        f.write_str(s)
    }
}

impl FromStr for MeasBasis {
    type Err = QkdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "HV" => Ok(MeasBasis::HV),
            "DA" => Ok(MeasBasis::DA),
            "RL" => Ok(MeasBasis::RL),
            other => Err(QkdError::Parse(format!("unknown basis `{other}`"))),
        }
    }
}

/// Linear retarder with fast axis at `fast_axis` degrees from vertical and
/// retardance `retardance` radians.
pub fn retarder(fast_axis: f64, retardance: f64) -> CMat2 {
    let phi = (fast_axis + 90.0).to_radians();
    let (s, c) = phi.sin_cos();
    let rot = CMat2::from_real([[c, -s], [s, c]]);
    let delay = CMat([[ONE, ZERO], [ZERO, C64::from_polar(1.0, retardance)]]);
    rot * delay * rot.transpose()
}

/// Half-wave plate, fast axis `theta` degrees from vertical. Reflects linear
/// polarization at `a` to `2θ - a`.
pub fn hwp(theta: f64) -> CMat2 {
    retarder(theta, PI)
}

/// Quarter-wave plate, fast axis `theta` degrees from vertical.
pub fn qwp(theta: f64) -> CMat2 {
    retarder(theta, FRAC_PI_2)
}

pub fn projector(s: PolState) -> CMat2 {
    s.ket().outer()
}

/// Quarter-wave plate, then half-wave plate, then a vertical polarizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub qwp_angle: f64,
    pub hwp_angle: f64,
}

impl AnalyzerSetting {
    pub const fn new(qwp_angle: f64, hwp_angle: f64) -> Self {
        AnalyzerSetting {
            qwp_angle,
            hwp_angle,
        }
    }

    /// Plate angles that make the chain transmit `s` and block its
    /// orthogonal partner.
    ///
    /// The circular rows use a ±22.5° half-wave plate: with the quarter-wave
    /// plate fast axis vertical, the effective transmission axis must sit 45°
    /// from it. A ±45° half-wave plate would instead map the polarizer back
    /// onto the quarter-wave plate's slow axis and select `H`.
    pub fn for_state(s: PolState) -> AnalyzerSetting {
        match s {
            PolState::H => AnalyzerSetting::new(90.0, 45.0),
            PolState::V => AnalyzerSetting::new(0.0, 0.0),
            PolState::D => AnalyzerSetting::new(-45.0, -22.5),
            PolState::A => AnalyzerSetting::new(45.0, 22.5),
            PolState::R => AnalyzerSetting::new(0.0, 22.5),
            PolState::L => AnalyzerSetting::new(0.0, -22.5),
        }
    }

    /// State transmitted with unit probability, `(HWP·QWP)^† |V>`.
    pub fn transmitted_state(&self) -> CVec2 {
        let plates = hwp(self.hwp_angle) * qwp(self.qwp_angle);
        plates.adjoint().apply(&PolState::V.ket())
    }

    /// Probability that `input` passes the chain.
    pub fn transmission(&self, input: &CVec2) -> f64 {
        analyzer_chain(*self).apply(input).norm_sqr()
    }
}

/// Effective Jones operator `P_V · HWP · QWP` of an analyzer.
pub fn analyzer_chain(setting: AnalyzerSetting) -> CMat2 {
    projector(PolState::V) * hwp(setting.hwp_angle) * qwp(setting.qwp_angle)
}

/// Outcome projectors `(plus, minus)` of a half-wave plate at `deg` from
/// horizontal followed by a splitter that separates H (plus) from V (minus).
pub fn splitter_projectors(hwp_deg_from_horizontal: f64) -> (CMat2, CMat2) {
    let plate = hwp(from_horizontal(hwp_deg_from_horizontal));
    let plus = plate.adjoint().apply(&PolState::H.ket());
    let minus = plate.adjoint().apply(&PolState::V.ket());
    (plus.outer(), minus.outer())
}
