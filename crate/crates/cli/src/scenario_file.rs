//! Line-oriented scenario and parameter files.
//!
//! ```text
//! # comment
//! scenario: stress
//! fixed_epsilon: 0.4547
//! pressure_term: -1.9% -> -5.5%
//! shock: 1.3475 → 2.2
//! beta: 1.6
//! ```
//!
//! Each entry is `name: new` or `name: old -> new`. The old value is only
//! checked against the baseline and reported on mismatch. `pressure_term`
//! names the evaluated −∇P term, so its values are negated into `pressure`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use liquidyn_core::model::{ParamId, ParameterSet};
use liquidyn_core::scenario::{Perturbation, Scenario, Target};

use crate::error::{CliError, Result};
use crate::numfmt::{parse_number, sig6};

/// Resolves an entry name to its target and the sign applied to its values.
pub fn resolve_name(name: &str) -> Option<(Target, f64)> {
    let key = name.trim().to_ascii_lowercase();
    let alias = match key.as_str() {
        "pressure_term" => return Some((Target::Param(ParamId::Pressure), -1.0)),
        "inflation" => "pressure",
        "bank_pressure" | "mu_diffusion" => "diffusion_term",
        "stochastic_shock" | "sigma_w" => "shock",
        "money_velocity" => "velocity",
        "inequality" | "gini" => "internal_tension",
        "market_inertia" => "rho",
        "cyclical" | "f_gdp" => "cyclical_force",
        other => other,
    };
    alias.parse::<Target>().ok().map(|t| (t, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    /// Old values of `old -> new` entries, in target space.
    pub expected_old: Vec<(Target, f64)>,
}

impl ScenarioFile {
    /// One warning per `old` value that differs from the baseline by more
    /// than `tolerance`.
    pub fn baseline_mismatches(&self, baseline: &ParameterSet, tolerance: f64) -> Vec<String> {
        let base = self.scenario.evaluation_base(baseline);
        self.expected_old
            .iter()
            .filter_map(|&(target, old)| {
                let actual = target.value_in(&base);
                ((old - actual).abs() > tolerance).then(|| {
                    format!(
                        "scenario `{}`: `{}` lists old value {} but the baseline has {}",
                        self.scenario.name,
                        target,
                        sig6(old),
                        sig6(actual)
                    )
                })
            })
            .collect()
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    parse_scenario(&text, &fallback).map_err(|message| CliError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

fn split_entry(line: &str, lineno: usize) -> std::result::Result<(&str, &str), String> {
    line.split_once(':')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| format!("line {lineno}: expected `name: value`, got `{line}`"))
}

fn number(raw: &str, lineno: usize) -> std::result::Result<f64, String> {
    parse_number(raw).ok_or_else(|| format!("line {lineno}: `{raw}` is not a number"))
}

fn significant(line: &str) -> Option<&str> {
    let line = line.split('#').next().unwrap_or("").trim();
    (!line.is_empty()).then_some(line)
}

pub fn parse_scenario(text: &str, fallback_name: &str) -> std::result::Result<ScenarioFile, String> {
    let mut name = fallback_name.to_string();
    let mut fixed_epsilon = None;
    let mut entries = Vec::new();
    let mut expected_old = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let Some(line) = significant(raw) else { continue };
        let (key, value) = split_entry(line, lineno)?;
        match key.to_ascii_lowercase().as_str() {
            "scenario" | "name" => {
                name = value.to_string();
                continue;
            }
            "fixed_epsilon" => {
                if fixed_epsilon.is_some() {
                    return Err(format!("line {lineno}: `fixed_epsilon` given twice"));
                }
                fixed_epsilon = Some(number(value, lineno)?);
                continue;
            }
            _ => {}
        }
        let (target, sign) = resolve_name(key)
            .ok_or_else(|| format!("line {lineno}: unknown parameter `{key}`"))?;
        let value = value.replace('→', "->");
        let parts: Vec<&str> = value.split("->").map(str::trim).collect();
        let new_value = match parts.as_slice() {
            [new] => number(new, lineno)?,
            [old, new] => {
                expected_old.push((target, sign * number(old, lineno)?));
                number(new, lineno)?
            }
            _ => return Err(format!("line {lineno}: malformed entry `{value}`, expected `old -> new`")),
        };
        entries.push(Perturbation::new(target, sign * new_value));
    }
    let scenario = Scenario::new(name, entries, fixed_epsilon).map_err(|e| e.to_string())?;
    Ok(ScenarioFile {
        scenario,
        expected_old,
    })
}

/// Serialises a scenario so that [`parse_scenario`] restores it exactly.
pub fn emit_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", s.name);
    if let Some(eps) = s.fixed_epsilon {
        let _ = writeln!(out, "fixed_epsilon: {eps}");
    }
    for p in s.perturbations.iter().chain(&s.indicators) {
        let _ = writeln!(out, "{}: {}", p.target, p.new_value);
    }
    out
}

pub fn load_params(path: &Path, base: &ParameterSet) -> Result<ParameterSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_params(&text, base).map_err(|message| CliError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

/// Sparse `name: value` overrides applied on top of `base`.
pub fn parse_params(text: &str, base: &ParameterSet) -> std::result::Result<ParameterSet, String> {
    let mut p = *base;
    let mut seen = std::collections::BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let Some(line) = significant(raw) else { continue };
        let (key, value) = split_entry(line, lineno)?;
        let id: ParamId = key
            .to_ascii_lowercase()
            .parse()
            .map_err(|_| format!("line {lineno}: unknown parameter `{key}`"))?;
        if !seen.insert(id) {
            return Err(format!("line {lineno}: `{key}` given twice"));
        }
        p.set(id, number(value, lineno)?);
    }
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

pub fn emit_params(p: &ParameterSet) -> String {
    let mut out = String::new();
    for id in ParamId::ALL {
        let _ = writeln!(out, "{}: {}", id, p.get(id));
    }
    out
}
