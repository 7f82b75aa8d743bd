//! Checks, run outcomes and the files written for them.

use crate::config::ExperimentConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value < threshold`.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            pass: value < threshold,
            value,
            threshold,
            detail: String::new(),
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            pass: value >= threshold,
            value,
            threshold,
            detail: String::new(),
        }
    }

    /// Passes when |z| <= k.
    pub fn z(name: impl Into<String>, z: f64, k: f64) -> Self {
        Check {
            name: name.into(),
            pass: z.abs() <= k,
            value: z,
            threshold: k,
            detail: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            pass,
            value: f64::from(u8::from(pass)),
            threshold: 1.0,
            detail: String::new(),
        }
    }

    pub fn failed(name: impl Into<String>, why: impl std::fmt::Display) -> Self {
        Check {
            name: name.into(),
            pass: false,
            value: f64::NAN,
            threshold: f64::NAN,
            detail: why.to_string(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// Everything a command produced, before it is written out.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// (file name, contents); CSV and SVG files.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub data: Value,
    pub seeds: BTreeMap<String, u64>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_str())
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    experiment: &'a str,
    config_hash: String,
    pass: bool,
    seeds: &'a BTreeMap<String, u64>,
    checks: &'a [Check],
    config: &'a ExperimentConfig,
    elapsed_seconds: f64,
    data: &'a Value,
}

/// Writes the outcome's files and `<experiment>.json` under the output
/// directory; returns the paths written.
pub fn write_outputs(cfg: &ExperimentConfig, out: &Outcome, elapsed: f64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut written = Vec::new();
    for (name, text) in &out.files {
        let path = cfg.out_dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    let report = JsonReport {
        experiment: &cfg.experiment,
        config_hash: cfg.hash(),
        pass: out.pass(),
        seeds: &out.seeds,
        checks: &out.checks,
        config: cfg,
        elapsed_seconds: elapsed,
        data: &out.data,
    };
    let path = cfg.out_dir.join(format!("{}.json", cfg.experiment));
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}

/// Comma-joined row of 17-significant-digit floats.
pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|&x| treepotts::fmt17(x))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_directions() {
        assert!(Check::below("a", 0.01, 0.05).pass);
        assert!(!Check::below("a", f64::NAN, 0.05).pass);
        assert!(Check::at_least("b", 0.9, 0.9).pass);
        assert!(Check::z("c", -2.9, 3.0).pass);
        assert!(!Check::z("c", 3.1, 3.0).pass);
        assert!(!Check::failed("d", "boom").pass);
    }

    #[test]
    fn rows_use_fixed_digits() {
        assert_eq!(
            csv_row(&[0.1, 2.0]),
            "1.0000000000000001e-1,2.0000000000000000e0"
        );
    }
}
