//! Bundled configurations for the experimental regimes: an ideal channel,
//! the imperfect source without Eve, full plate dephasing in either basis,
//! partial dephasing, and three intercept-resend attacks.

use crate::{CliError, RunConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("ideal", include_str!("../presets/ideal.json")),
    ("no_eve", include_str!("../presets/no_eve.json")),
    ("full_eve_hv", include_str!("../presets/full_eve_hv.json")),
    ("full_eve_da", include_str!("../presets/full_eve_da.json")),
    ("partial_eve", include_str!("../presets/partial_eve.json")),
    (
        "intercept_random",
        include_str!("../presets/intercept_random.json"),
    ),
    (
        "intercept_fixed_hv",
        include_str!("../presets/intercept_fixed_hv.json"),
    ),
    (
        "intercept_half",
        include_str!("../presets/intercept_half.json"),
    ),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn load(name: &str) -> Result<RunConfig, CliError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset `{name}`; available: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    RunConfig::parse(text).map_err(|e| CliError::Config(format!("preset {name}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for name in names() {
            let cfg = load(name).unwrap();
            assert!(cfg.kind.is_some(), "{name}");
        }
        assert!(load("nope").is_err());
    }
}
