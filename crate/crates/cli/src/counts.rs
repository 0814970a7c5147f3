//! Coincidence-count files: CSV with header `alice,bob,count`, one row per
//! tomography setting, states written as `H V D A R L`.

use std::path::Path;

use qkd_core::optics::PolState;
use qkd_core::tomography::{counts_from_settings, Counts, SCHEDULE};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Deserialize)]
struct Row {
    alice: String,
    bob: String,
    count: f64,
}

/// Written form; `Display` keeps whole counts free of a trailing `.0`.
#[derive(Serialize)]
struct OutRow {
    alice: String,
    bob: String,
    count: String,
}

fn state(label: &str) -> Result<PolState, CliError> {
    let mut chars = label.trim().chars();
    match (chars.next().and_then(PolState::from_label), chars.next()) {
        (Some(s), None) => Ok(s),
        _ => Err(CliError::Config(format!(
            "`{label}` is not a polarization state"
        ))),
    }
}

pub fn parse(text: &str) -> Result<Counts, CliError> {
    let mut rows = Vec::new();
    for (line, rec) in csv::Reader::from_reader(text.as_bytes())
        .deserialize::<Row>()
        .enumerate()
    {
        let row = rec.map_err(|e| CliError::Config(format!("counts row {}: {e}", line + 1)))?;
        if !row.count.is_finite() || row.count < 0.0 {
            return Err(CliError::Config(format!(
                "counts row {}: count must be finite and non-negative",
                line + 1
            )));
        }
        rows.push((state(&row.alice)?, state(&row.bob)?, row.count));
    }
    counts_from_settings(&rows).map_err(CliError::config)
}

pub fn load(path: &Path) -> Result<Counts, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn to_csv(counts: &Counts) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (s, &count) in SCHEDULE.iter().zip(counts) {
        w.serialize(OutRow {
            alice: s.alice.to_string(),
            bob: s.bob.to_string(),
            count: count.to_string(),
        })
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}
