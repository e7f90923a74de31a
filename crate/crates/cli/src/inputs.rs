//! Readers for distribution, test-function, sample and config files.

use std::fs;
use std::path::Path;

use cmi_core::distributions::{DiscreteDistribution, TestFunction};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionFile {
    probs: Vec<f64>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestFunctionFile {
    values: Vec<f64>,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Io(format!("{}: malformed file: {e}", path.display())))
}

/// `{"probs": [...], "labels": [...]}` with optional labels.
pub fn distribution(path: &Path) -> CliResult<DiscreteDistribution> {
    let file: DistributionFile = parse_json(path)?;
    let dist = match file.labels {
        Some(labels) => DiscreteDistribution::with_labels(labels, &file.probs)?,
        None => DiscreteDistribution::new(&file.probs)?,
    };
    Ok(dist)
}

/// `{"values": [...]}`.
pub fn test_function(path: &Path) -> CliResult<TestFunction> {
    let file: TestFunctionFile = parse_json(path)?;
    Ok(TestFunction::new(file.values)?)
}

/// One real per line; blank lines and `#` comments are skipped.
pub fn samples(path: &Path) -> CliResult<Vec<f64>> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            CliError::Io(format!(
                "{}:{}: not a real number: {line:?}",
                path.display(),
                i + 1
            ))
        })?;
        out.push(value);
    }
    Ok(out)
}

/// `key=value` lines; blank lines and `#` comments are skipped. Duplicate
/// keys are rejected.
pub fn config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = read(path)?;
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Io(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                i + 1
            ))
        })?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(CliError::Validation(format!("duplicate config key {k:?}")));
        }
        out.push((k, v));
    }
    Ok(out)
}
