//! Run configuration files.
//!
//! One flat JSON object describes the photon state (`source_noise`, `eve`)
//! shared by every experiment, plus the settings each experiment reads.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use qkd_core::detection::{BasisPolicy, DetectorConfig};
use qkd_core::protocol::SessionConfig;
use qkd_core::states::{add_white_noise, bell_phi_plus, EveConfig, TwoQubitState};
use qkd_core::tomography::ChshAngles;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Session,
    Tomo,
    Bell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Experiment `run` dispatches to; subcommands ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,

    #[serde(default)]
    pub source_noise: f64,
    #[serde(default)]
    pub eve: EveConfig,

    #[serde(default = "defaults::n_intervals")]
    pub n_intervals: usize,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub basis_policy: BasisPolicy,
    #[serde(default = "defaults::sample_fraction")]
    pub qber_sample_fraction: f64,
    #[serde(default = "defaults::threshold")]
    pub abort_threshold: f64,
    #[serde(default = "defaults::passes")]
    pub reconciliation_passes: usize,
    #[serde(default = "defaults::safety")]
    pub pa_safety_bits: usize,

    #[serde(default)]
    pub tomo: TomoSettings,
    #[serde(default = "defaults::angles")]
    pub bell: ChshAngles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoSettings {
    /// Expected coincidences per setting for a unit-trace projector.
    #[serde(default = "defaults::n_per_setting")]
    pub n_per_setting: f64,
    #[serde(default = "defaults::replicas")]
    pub replicas: usize,
    /// Use expected counts instead of Poisson draws.
    #[serde(default)]
    pub exact: bool,
    /// Measured counts to reconstruct instead of simulating; relative paths
    /// resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts_file: Option<PathBuf>,
}

impl Default for TomoSettings {
    fn default() -> Self {
        TomoSettings {
            n_per_setting: defaults::n_per_setting(),
            replicas: defaults::replicas(),
            exact: false,
            counts_file: None,
        }
    }
}

mod defaults {
    use super::*;

    fn base() -> SessionConfig {
        SessionConfig::new(n_intervals(), 0)
    }
    pub fn n_intervals() -> usize {
        10_000
    }
    pub fn sample_fraction() -> f64 {
        base().qber_sample_fraction
    }
    pub fn threshold() -> f64 {
        base().abort_threshold
    }
    pub fn passes() -> usize {
        base().reconciliation_passes
    }
    pub fn safety() -> usize {
        base().pa_safety_bits
    }
    pub fn n_per_setting() -> f64 {
        10_000.0
    }
    pub fn replicas() -> usize {
        200
    }
    pub fn angles() -> ChshAngles {
        ChshAngles::CANONICAL
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; a relative `tomo.counts_file` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg =
            Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(f), Some(dir)) = (&cfg.tomo.counts_file, path.parent()) {
            if f.is_relative() {
                cfg.tomo.counts_file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.session().validate().map_err(CliError::config)?;
        if !self.tomo.n_per_setting.is_finite() || self.tomo.n_per_setting <= 0.0 {
            return Err(CliError::Config(
                "tomo.n_per_setting must be positive".into(),
            ));
        }
        if self.tomo.replicas < 2 {
            return Err(CliError::Config("tomo.replicas must be at least 2".into()));
        }
        Ok(())
    }

    pub fn session(&self) -> SessionConfig {
        SessionConfig {
            n_intervals: self.n_intervals,
            source_noise: self.source_noise,
            eve: self.eve,
            detector: self.detector,
            basis_policy: self.basis_policy,
            qber_sample_fraction: self.qber_sample_fraction,
            abort_threshold: self.abort_threshold,
            reconciliation_passes: self.reconciliation_passes,
            pa_safety_bits: self.pa_safety_bits,
            seed: self.seed,
        }
    }

    /// Source state after Eve's averaged channel.
    pub fn state(&self) -> Result<TwoQubitState, CliError> {
        let source =
            add_white_noise(&bell_phi_plus(), self.source_noise).map_err(CliError::config)?;
        self.eve.average_channel(&source).map_err(CliError::config)
    }
}
