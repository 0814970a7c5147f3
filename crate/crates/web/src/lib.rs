//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; the
//! computations behind them are ordinary functions so they can be tested
//! natively.

use qkd_core::detection::DetectorConfig;
use qkd_core::optics::MeasBasis;
use qkd_core::protocol::{run_session, Decision, SessionConfig};
use qkd_core::states::{
    add_white_noise, bell_phi_plus, dephase_bob, phi_plus_ket, plate_gamma, EveBasisPolicy,
    EveConfig, QuartzPlate, TwoQubitState,
};
use qkd_core::tomography::{bar_data, chsh, chsh_max, ChshAngles, StateMetrics, BASIS_LABELS};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Bar {
    pub row: &'static str,
    pub col: &'static str,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct PlateView {
    pub delay_fs: f64,
    pub gamma: f64,
    pub labels: [&'static str; 4],
    pub bars: Vec<Bar>,
    pub tangle: f64,
    pub von_neumann: f64,
    pub linear_entropy: f64,
    pub fidelity: f64,
    pub chsh: f64,
    pub chsh_max: f64,
}

fn plated_state(plate: &QuartzPlate, source_noise: f64) -> Result<TwoQubitState, String> {
    plate.validate().map_err(|e| e.to_string())?;
    let source = add_white_noise(&bell_phi_plus(), source_noise).map_err(|e| e.to_string())?;
    dephase_bob(&source, plate.axis_angle, plate_gamma(plate)).map_err(|e| e.to_string())
}

/// State after a quartz plate of the given thickness, as bar-chart data and
/// metrics.
pub fn plate_view(
    thickness_mm: f64,
    axis_angle: f64,
    source_noise: f64,
) -> Result<PlateView, String> {
    let plate = QuartzPlate::new(thickness_mm, axis_angle);
    let s = plated_state(&plate, source_noise)?;
    let m = StateMetrics::exact(&s, &phi_plus_ket());
    Ok(PlateView {
        delay_fs: plate.delay_fs(),
        gamma: plate_gamma(&plate),
        labels: BASIS_LABELS,
        bars: bar_data(s.rho())
            .into_iter()
            .map(|(row, col, value)| Bar { row, col, value })
            .collect(),
        tangle: m.tangle.value,
        von_neumann: m.von_neumann.value,
        linear_entropy: m.linear_entropy.value,
        fidelity: m.fidelity.value,
        chsh: chsh(&s, ChshAngles::CANONICAL).s,
        chsh_max: chsh_max(&s),
    })
}

#[derive(Debug, Serialize)]
pub struct ChshPoint {
    pub thickness_mm: f64,
    pub gamma: f64,
    pub s: f64,
    pub s_max: f64,
}

/// CHSH value at the canonical angles for plates from 0 to `max_mm`.
pub fn chsh_curve(
    max_mm: f64,
    axis_angle: f64,
    source_noise: f64,
    points: usize,
) -> Result<Vec<ChshPoint>, String> {
    if !max_mm.is_finite() || max_mm <= 0.0 || points < 2 {
        return Err("need a positive thickness range and at least 2 points".into());
    }
    (0..points)
        .map(|i| {
            let thickness_mm = max_mm * i as f64 / (points - 1) as f64;
            let plate = QuartzPlate::new(thickness_mm, axis_angle);
            let s = plated_state(&plate, source_noise)?;
            Ok(ChshPoint {
                thickness_mm,
                gamma: plate_gamma(&plate),
                s: chsh(&s, ChshAngles::CANONICAL).s,
                s_max: chsh_max(&s),
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub kept_trials: usize,
    pub sifted_bits: usize,
    pub sifted_error_rate: f64,
    pub qber_estimate: f64,
    pub aborted: bool,
    pub leaked_bits: usize,
    pub final_key_bits: usize,
    pub final_key_hex: String,
}

/// One key-distribution session with intercept-resend Eve on a random
/// basis per trial; `intercept_fraction = 0` leaves the channel alone.
pub fn session_view(
    n_intervals: usize,
    intercept_fraction: f64,
    source_noise: f64,
    dark_rate: f64,
    seed: u64,
) -> Result<SessionView, String> {
    let mut cfg = SessionConfig::new(n_intervals, seed);
    cfg.source_noise = source_noise;
    cfg.detector = DetectorConfig {
        dark_rate,
        ..DetectorConfig::default()
    };
    if intercept_fraction > 0.0 {
        cfg.eve = EveConfig::intercept_resend(
            EveBasisPolicy::RandomPerTrial,
            MeasBasis::HV,
            intercept_fraction,
        );
    }
    let t = run_session(&cfg).map_err(|e| e.to_string())?;
    Ok(SessionView {
        kept_trials: t.kept_trials,
        sifted_bits: t.sifted_alice.len(),
        sifted_error_rate: t.sifted_error_rate,
        qber_estimate: t.qber_estimate,
        aborted: t.decision == Decision::Abort,
        leaked_bits: t.leaked_bits,
        final_key_bits: t.final_key.len(),
        final_key_hex: t.final_key_hex(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen(js_name = plateView)]
pub fn plate_view_js(
    thickness_mm: f64,
    axis_angle: f64,
    source_noise: f64,
) -> Result<String, JsError> {
    to_js(plate_view(thickness_mm, axis_angle, source_noise))
}

#[wasm_bindgen(js_name = chshCurve)]
pub fn chsh_curve_js(
    max_mm: f64,
    axis_angle: f64,
    source_noise: f64,
    points: usize,
) -> Result<String, JsError> {
    to_js(chsh_curve(max_mm, axis_angle, source_noise, points))
}

#[wasm_bindgen(js_name = sessionView)]
pub fn session_view_js(
    n_intervals: usize,
    intercept_fraction: f64,
    source_noise: f64,
    dark_rate: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_js(session_view(
        n_intervals,
        intercept_fraction,
        source_noise,
        dark_rate,
        u64::from(seed),
    ))
}
