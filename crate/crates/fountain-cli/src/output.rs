//! Deterministic file output: CSV with full-precision floats and JSON.
//!
//! Every float is written with 17 significant digits so the files
//! round-trip to the exact binary values; runs with the same config and
//! seed are byte-identical, which the test suite relies on.

use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Full-precision float formatting for CSV cells.
pub fn float_cell(x: f64) -> String {
    format!("{x:.16e}")
}

/// `{prefix}{suffix}`: output files share the prefix given on the command
/// line, e.g. `runs/fringes` + `_pattern.csv`.
pub fn out_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = OsString::from(prefix.as_os_str());
    name.push(suffix);
    PathBuf::from(name)
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Config(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    Ok(())
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    std::fs::write(path, content)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Writes one CSV file: header plus rows, comma-separated, one trailing
/// newline. Cells must already be formatted; empty cells stay empty.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "CSV row width mismatch");
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// The resolved-config echo written next to every run's outputs. The
/// thread count is deliberately absent: outputs are identical for any
/// thread count, and so is their description.
#[derive(Serialize)]
pub struct Echo<P: Serialize> {
    pub schema_version: u32,
    pub experiment: crate::config::ExperimentKind,
    pub seed: u64,
    pub parameters: P,
}

pub fn write_echo<P: Serialize>(
    prefix: &Path,
    experiment: crate::config::ExperimentKind,
    seed: u64,
    parameters: P,
) -> Result<(), CliError> {
    let echo = Echo {
        schema_version: crate::config::SCHEMA_VERSION,
        experiment,
        seed,
        parameters,
    };
    write_json(&out_path(prefix, "_config.json"), &echo)
}
