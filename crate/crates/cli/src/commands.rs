//! Experiment drivers. Each returns a [`Report`] holding the exact bytes of
//! every output file plus the lines meant for stdout.

use std::path::Path;

use qkd_core::detection::records_to_csv;
use qkd_core::otp::{BitString, OneTimePad};
use qkd_core::protocol::{run_session, Decision, EveCaseStats, SessionTranscript};
use qkd_core::rng::substream;
use qkd_core::states::{phi_plus_ket, plate_gamma};
use qkd_core::tomography::{
    bar_data, chsh, chsh_max, expected_counts, run_tomography, simulate_counts, ChshReport, Counts,
    StateMetrics, BASIS_LABELS,
};
use serde::Serialize;

use crate::{counts, CliError, RunConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: &'static str,
    pub contents: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
    pub stdout: Vec<String>,
    pub aborted: bool,
}

impl Report {
    fn file(&mut self, name: &'static str, contents: String) {
        self.artifacts.push(Artifact { name, contents });
    }

    fn json(&mut self, name: &'static str, value: &impl Serialize) {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.file(name, text);
    }

    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.contents.as_str())
    }

    /// Writes every artifact into `dir`, in order.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let io = |path: &Path| {
            let path = path.to_owned();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for a in &self.artifacts {
            let path = dir.join(a.name);
            std::fs::write(&path, &a.contents).map_err(io(&path))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionSummary {
    pub n_intervals: usize,
    pub kept_trials: usize,
    pub sifted_bits: usize,
    pub sifted_agreement: f64,
    pub sifted_error_rate: f64,
    pub qber_estimate: f64,
    pub qber_sample_size: usize,
    pub decision: Decision,
    pub leaked_bits: usize,
    pub reconciliation_success: bool,
    pub final_key_bits: usize,
    pub final_key_hex: String,
    pub keys_match: bool,
    pub eve_cases: EveCaseStats,
}

impl SessionSummary {
    pub fn from_transcript(t: &SessionTranscript) -> Self {
        SessionSummary {
            n_intervals: t.config.n_intervals,
            kept_trials: t.kept_trials,
            sifted_bits: t.sifted_alice.len(),
            sifted_agreement: t.sifted_agreement(),
            sifted_error_rate: t.sifted_error_rate,
            qber_estimate: t.qber_estimate,
            qber_sample_size: t.qber_sample_size,
            decision: t.decision,
            leaked_bits: t.leaked_bits,
            reconciliation_success: t.reconciliation_success,
            final_key_bits: t.final_key.len(),
            final_key_hex: t.final_key_hex(),
            keys_match: t.keys_match,
            eve_cases: t.eve_cases,
        }
    }
}

/// Files: `trials.csv`, `transcript.json`, `summary.json`.
pub fn session(cfg: &RunConfig) -> Result<(Report, SessionTranscript), CliError> {
    let t = run_session(&cfg.session())?;
    let summary = SessionSummary::from_transcript(&t);
    let mut r = Report {
        aborted: t.aborted,
        ..Report::default()
    };
    r.file("trials.csv", records_to_csv(&t.records, true));
    r.json("transcript.json", &t);
    r.json("summary.json", &summary);
    r.stdout.push(format!(
        "kept {} of {} intervals, sifted {} bits, agreement {:.4}",
        t.kept_trials, t.config.n_intervals, summary.sifted_bits, summary.sifted_agreement
    ));
    r.stdout.push(format!(
        "QBER estimate {:.4} from {} disclosed bits: {}",
        t.qber_estimate,
        t.qber_sample_size,
        match t.decision {
            Decision::Proceed => "proceed",
            Decision::Abort => "abort",
        }
    ));
    if !t.aborted {
        r.stdout.push(format!(
            "final key {} bits after {} leaked parities",
            t.final_key.len(),
            t.leaked_bits
        ));
    }
    Ok((r, t))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityFile {
    pub basis: [&'static str; 4],
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsFile {
    pub counts_source: &'static str,
    pub total_estimate: f64,
    pub eve_gamma: f64,
    pub measured: StateMetrics,
    /// Metrics of the configured model state; absent for measured counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<StateMetrics>,
    pub chsh_max: f64,
}

fn effective_gamma(cfg: &RunConfig) -> f64 {
    match cfg.eve.plate {
        Some(p) => plate_gamma(&p),
        None => cfg.eve.effective_gamma(),
    }
}

/// Files: `counts.csv`, `density.json`, `metrics.json`, `bars.csv`.
///
/// Counts come from `counts_override`, `tomo.counts_file`, or are simulated
/// from the configured state on stream `(seed, 0)`; bootstrap replicas use
/// streams `(seed + 1, i)`.
pub fn tomo(cfg: &RunConfig, counts_override: Option<&Path>) -> Result<Report, CliError> {
    let file = counts_override.or(cfg.tomo.counts_file.as_deref());
    let (counts, source, model): (Counts, _, _) = match file {
        Some(path) => (counts::load(path)?, "file", None),
        None => {
            let state = cfg.state()?;
            let n = cfg.tomo.n_per_setting;
            let counts = if cfg.tomo.exact {
                expected_counts(&state, n)
            } else {
                simulate_counts(&state, n, &mut substream(cfg.seed, 0))?
            };
            let kind = if cfg.tomo.exact {
                "expected"
            } else {
                "simulated"
            };
            (
                counts,
                kind,
                Some(StateMetrics::exact(&state, &phi_plus_ket())),
            )
        }
    };
    let run = run_tomography(&counts, cfg.tomo.replicas, cfg.seed.wrapping_add(1))?;
    let rho = run.rho_hat;
    let rho_state = qkd_core::states::TwoQubitState::new(rho)?;
    let density = DensityFile {
        basis: BASIS_LABELS,
        real: std::array::from_fn(|i| std::array::from_fn(|j| rho.get(i, j).re)),
        imag: std::array::from_fn(|i| std::array::from_fn(|j| rho.get(i, j).im)),
    };
    let metrics = MetricsFile {
        counts_source: source,
        total_estimate: run.total_estimate,
        eve_gamma: effective_gamma(cfg),
        measured: run.metrics,
        model,
        chsh_max: chsh_max(&rho_state),
    };

    let mut bars = String::from("row_label,col_label,real_part\n");
    for (r, c, v) in bar_data(&rho) {
        bars.push_str(&format!("{r},{c},{v}\n"));
    }

    let mut r = Report::default();
    r.file("counts.csv", counts::to_csv(&counts));
    r.json("density.json", &density);
    r.json("metrics.json", &metrics);
    r.file("bars.csv", bars);
    let m = &metrics.measured;
    r.stdout.push(format!(
        "tangle {:.3} ± {:.3}, entropy {:.3} ± {:.3}, linear entropy {:.3} ± {:.3}, fidelity {:.3}",
        m.tangle.value,
        m.tangle.sigma,
        m.von_neumann.value,
        m.von_neumann.sigma,
        m.linear_entropy.value,
        m.linear_entropy.sigma,
        m.fidelity.value
    ));
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellFile {
    #[serde(flatten)]
    pub report: ChshReport,
    pub violates: bool,
    pub chsh_max: f64,
}

/// File: `bell.json`.
pub fn bell(cfg: &RunConfig) -> Result<(Report, BellFile), CliError> {
    let state = cfg.state()?;
    let report = chsh(&state, cfg.bell);
    let file = BellFile {
        violates: report.s.abs() > 2.0,
        chsh_max: chsh_max(&state),
        report,
    };
    let mut r = Report::default();
    r.json("bell.json", &file);
    r.stdout.push(format!("S = {:.6}", file.report.s));
    for (a, b, e) in &file.report.correlators {
        r.stdout.push(format!("E({a}, {b}) = {e:.6}"));
    }
    Ok((r, file))
}

/// Extracts the final key from a session transcript or summary JSON.
pub fn key_from_json(text: &str) -> Result<BitString, CliError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(CliError::config)?;
    if let Some(bits) = v.get("final_key").and_then(|k| k.as_str()) {
        return bits.parse().map_err(CliError::config);
    }
    if let Some(hex) = v.get("final_key_hex").and_then(|k| k.as_str()) {
        return BitString::from_hex(hex).map_err(CliError::config);
    }
    Err(CliError::Config(
        "key file has neither `final_key` nor `final_key_hex`".into(),
    ))
}

/// XORs `data` with key bits starting at `offset`.
pub fn otp(key: BitString, offset: usize, data: &BitString) -> Result<BitString, CliError> {
    let mut pad = OneTimePad::with_offset(key, offset)?;
    Ok(pad.apply(data)?.bits)
}
