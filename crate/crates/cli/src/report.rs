//! Run reports and their on-disk forms.
//!
//! A report serialises to JSON (structured) or to a flat `key,value` CSV
//! (table). Every number is rounded to six significant digits and keys keep
//! declaration order, so identical runs give byte-identical files. Each
//! non-empty series is also written as two-column plot data
//! (`<name>.dat`, "time value" per line).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use liquidyn_core::cycles::HarmonicModel;
use liquidyn_core::indicators::{InertiaEstimate, ShockEstimate};
use liquidyn_core::model::{BalanceResult, EpsilonBreakdown, ParameterSet};
use liquidyn_core::scenario::{MonteCarloSummary, SensitivityReport};

use crate::error::{CliError, Result};
use crate::numfmt::{round6, sig6};

pub const ENGINE: &str = concat!("liquidyn ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    Table,
    #[default]
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledBalance {
    pub label: String,
    #[serde(flatten)]
    pub result: BalanceResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Note {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub len: usize,
}

impl Series {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Self {
        let len = values.len();
        Series {
            name: name.into(),
            times,
            values,
            len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicSummary {
    pub model: HarmonicModel,
    pub mean_impact: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub engine: String,
    pub command: String,
    pub input_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameters: Option<ParameterSet>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub balance: Vec<LabeledBalance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_breakdown: Option<EpsilonBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inertia: Option<InertiaEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock_estimate: Option<ShockEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonics: Option<HarmonicSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<Note>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>, input_digest: String) -> Self {
        Report {
            engine: ENGINE.to_string(),
            command: command.into(),
            input_digest,
            seed: None,
            parameters: None,
            balance: Vec::new(),
            epsilon_breakdown: None,
            inertia: None,
            shock_estimate: None,
            sensitivity: None,
            harmonics: None,
            monte_carlo: None,
            notes: Vec::new(),
            series: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.notes.push(Note {
            key: key.into(),
            value: value.into(),
        });
    }

    /// JSON value with every number rounded to six significant digits.
    /// Fails if any number is not finite.
    pub fn to_value(&self) -> Result<Value> {
        for s in &self.series {
            if s.times.len() != s.values.len() {
                return Err(CliError::Validation(format!(
                    "series `{}` has {} times but {} values",
                    s.name,
                    s.times.len(),
                    s.values.len()
                )));
            }
            if let Some(v) = s.times.iter().chain(&s.values).find(|v| !v.is_finite()) {
                return Err(CliError::Validation(format!(
                    "series `{}` contains non-finite value {v}",
                    s.name
                )));
            }
        }
        let value = serde_json::to_value(self)
            .map_err(|e| CliError::Validation(format!("report serialisation failed: {e}")))?;
        round_value(value, "")
    }

    pub fn render(&self, format: Format) -> Result<String> {
        let value = self.to_value()?;
        Ok(match format {
            Format::Structured => {
                let mut s = serde_json::to_string_pretty(&value)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                s.push('\n');
                s
            }
            Format::Table => {
                let mut rows = Vec::new();
                flatten(&value, String::new(), &mut rows);
                let mut out = String::from("key,value\n");
                for (k, v) in rows {
                    let _ = writeln!(out, "{},{}", csv_cell(&k), csv_cell(&v));
                }
                out
            }
        })
    }
}

// Option fields are skipped when empty, so a null can only come from a
// non-finite float.
fn round_value(value: Value, path: &str) -> Result<Value> {
    Ok(match value {
        Value::Null => {
            return Err(CliError::Validation(format!(
                "report field `{path}` is not a finite number"
            )))
        }
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => Value::Number(Number::from_f64(round6(f)).ok_or_else(|| {
                CliError::Validation(format!("report field `{path}` is not finite"))
            })?),
            _ => Value::Number(n),
        },
        Value::Array(items) => Value::Array(
            items
                .into_iter()
                .enumerate()
                .map(|(i, v)| round_value(v, &format!("{path}[{i}]")))
                .collect::<Result<_>>()?,
        ),
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                let child = round_value(v, &format!("{path}.{k}"))?;
                out.insert(k, child);
            }
            Value::Object(out)
        }
        other => other,
    })
}

fn flatten(value: &Value, prefix: String, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(v, join(k), rows);
            }
        }
        Value::Array(items) if items.is_empty() => rows.push((prefix, String::new())),
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, join(&i.to_string()), rows);
            }
        }
        Value::Number(n) => {
            let text = match n.as_f64() {
                Some(f) if n.is_f64() => sig6(f),
                _ => n.to_string(),
            };
            rows.push((prefix, text));
        }
        Value::String(s) => rows.push((prefix, s.clone())),
        Value::Bool(b) => rows.push((prefix, b.to_string())),
        Value::Null => rows.push((prefix, String::new())),
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Plot-data text for a series: `time value` per line.
pub fn plot_data(series: &Series) -> String {
    let mut out = String::new();
    for (t, v) in series.times.iter().zip(&series.values) {
        let _ = writeln!(out, "{} {}", sig6(*t), sig6(*v));
    }
    out
}

/// Writes the report and its plot data into `dir`; returns the written paths.
pub fn emit_report(report: &Report, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    let body = report.render(format)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let name = match format {
        Format::Structured => "report.json",
        Format::Table => "report.csv",
    };
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    for s in report.series.iter().filter(|s| !s.values.is_empty()) {
        let path = dir.join(format!("{}.dat", s.name));
        fs::write(&path, plot_data(s)).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// SHA-256 over labelled input chunks.
#[derive(Default)]
pub struct InputDigest(Sha256);

impl InputDigest {
    pub fn add(&mut self, label: &str, bytes: &[u8]) -> &mut Self {
        self.0.update((label.len() as u64).to_le_bytes());
        self.0.update(label.as_bytes());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("balance", "00".to_string());
        let p = ParameterSet::reference_baseline();
        r.balance.push(LabeledBalance {
            label: "baseline".to_string(),
            result: BalanceResult::at_own_epsilon(&p).unwrap(),
        });
        r
    }

    #[test]
    fn numbers_are_rounded() {
        let json = sample().render(Format::Structured).unwrap();
        assert!(json.contains("\"lhs\": 1.5002"), "{json}");
        assert!(json.contains("\"warnings\": []"));
    }

    #[test]
    fn table_is_flat() {
        let table = sample().render(Format::Table).unwrap();
        assert!(table.contains("balance.0.lhs,1.50020"), "{table}");
        assert!(table.contains("warnings,\n"));
    }

    #[test]
    fn non_finite_rejected() {
        let mut r = sample();
        r.balance[0].result.lhs = f64::NAN;
        assert!(matches!(r.render(Format::Structured), Err(CliError::Validation(_))));
    }

    #[test]
    fn empty_series_writes_no_plot_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = sample();
        r.series.push(Series::new("epsilon", vec![], vec![]));
        let written = emit_report(&r, Format::Structured, dir.path()).unwrap();
        assert_eq!(written.len(), 1);
        r.series.push(Series::new("force", vec![0.0, 1.0], vec![0.5, 0.25]));
        let written = emit_report(&r, Format::Table, dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        let dat = fs::read_to_string(dir.path().join("force.dat")).unwrap();
        assert_eq!(dat, "0 0.500000\n1.00000 0.250000\n");
    }
}
