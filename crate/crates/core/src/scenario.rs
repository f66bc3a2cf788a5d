//! Scenario application and the simulation-based sensitivity procedure:
//! stress runs, one-at-a-time sweeps, dynamic ε(t) and Monte Carlo
//! summaries.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycles::{reconstruct, HarmonicModel};
use crate::model::{required_epsilon, BalanceResult, ModelError, ParamId, ParameterSet};
use crate::stochastic::{
    derive_path_seed, run_in_pool, shock_series, wiener_path, ShockConfig, StochasticError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown parameter `{0}`")]
    UnknownTarget(String),
    #[error("parameter `{0}` is perturbed more than once")]
    DuplicateTarget(String),
    #[error("`diffusion_term` cannot be combined with `{0}` in one scenario")]
    OverlappingTarget(String),
    #[error("cannot rescale stickiness for `diffusion_term`: diffusion is zero")]
    ZeroDiffusion,
    #[error("perturbation of `{target}` to {value} is not finite")]
    NonFinite { target: String, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}

/// What a perturbation changes: one parameter, or the composite
/// diffusion term μ·∇²v (which rescales μ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Target {
    Param(ParamId),
    DiffusionTerm,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Param(id) => id.name(),
            Target::DiffusionTerm => "diffusion_term",
        }
    }

    pub fn value_in(self, p: &ParameterSet) -> f64 {
        match self {
            Target::Param(id) => p.get(id),
            Target::DiffusionTerm => p.diffusion_term(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "diffusion_term" {
            return Ok(Target::DiffusionTerm);
        }
        s.parse::<ParamId>()
            .map(Target::Param)
            .map_err(|_| ScenarioError::UnknownTarget(s.to_string()))
    }
}

impl From<Target> for String {
    fn from(t: Target) -> String {
        t.name().to_string()
    }
}

impl TryFrom<String> for Target {
    type Error = ScenarioError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub target: Target,
    pub new_value: f64,
}

impl Perturbation {
    pub fn new(target: Target, new_value: f64) -> Self {
        Perturbation { target, new_value }
    }

    pub fn param(id: ParamId, new_value: f64) -> Self {
        Perturbation::new(Target::Param(id), new_value)
    }
}

/// A named set of perturbations.
///
/// Perturbations of parameters that do not enter the balance (money
/// velocity) are kept in `indicators`: reported, never applied.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub perturbations: Vec<Perturbation>,
    pub indicators: Vec<Perturbation>,
    /// Replaces the base ε before perturbations are applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_epsilon: Option<f64>,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        entries: Vec<Perturbation>,
        fixed_epsilon: Option<f64>,
    ) -> Result<Self, ScenarioError> {
        let mut seen = BTreeSet::new();
        for p in &entries {
            if !p.new_value.is_finite() {
                return Err(ScenarioError::NonFinite {
                    target: p.target.name().to_string(),
                    value: p.new_value,
                });
            }
            if !seen.insert(p.target.name()) {
                return Err(ScenarioError::DuplicateTarget(p.target.name().to_string()));
            }
        }
        if seen.contains("diffusion_term") {
            for other in ["stickiness", "diffusion"] {
                if seen.contains(other) {
                    return Err(ScenarioError::OverlappingTarget(other.to_string()));
                }
            }
        }
        if let Some(eps) = fixed_epsilon {
            if !eps.is_finite() {
                return Err(ScenarioError::NonFinite {
                    target: "fixed_epsilon".to_string(),
                    value: eps,
                });
            }
        }
        let (indicators, perturbations) = entries
            .into_iter()
            .partition(|p| classify_effect(p.target) == Side::None);
        Ok(Scenario {
            name: name.into(),
            perturbations,
            indicators,
            fixed_epsilon,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Scenario {
            name: name.into(),
            ..Scenario::default()
        }
    }

    /// The base set with ε replaced by `fixed_epsilon`, when one is given.
    pub fn evaluation_base(&self, base: &ParameterSet) -> ParameterSet {
        match self.fixed_epsilon {
            Some(eps) => base.with(ParamId::Epsilon, eps),
            None => *base,
        }
    }
}

/// Which side of the balance a change moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Lhs,
    Rhs,
    Both,
    None,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lhs => "LHS",
            Side::Rhs => "RHS",
            Side::Both => "BOTH",
            Side::None => "NONE",
        })
    }
}

pub fn classify_effect(target: Target) -> Side {
    match target {
        Target::DiffusionTerm => Side::Rhs,
        Target::Param(id) => match id {
            ParamId::Shock
            | ParamId::DvDt
            | ParamId::InternalTension
            | ParamId::CyclicalForce
            | ParamId::Rho => Side::Lhs,
            ParamId::Pressure
            | ParamId::Stickiness
            | ParamId::Diffusion
            | ParamId::RiskPremium
            | ParamId::Cds
            | ParamId::Beta
            | ParamId::Epsilon => Side::Rhs,
            ParamId::Velocity => Side::None,
        },
    }
}

fn apply_one(p: &mut ParameterSet, pert: &Perturbation) -> Result<(), ScenarioError> {
    match pert.target {
        Target::Param(id) => p.set(id, pert.new_value),
        Target::DiffusionTerm => {
            if p.diffusion == 0.0 {
                return Err(ScenarioError::ZeroDiffusion);
            }
            p.stickiness = pert.new_value / p.diffusion;
        }
    }
    Ok(())
}

/// Copy of `base` with every perturbation applied.
pub fn apply_scenario(base: &ParameterSet, s: &Scenario) -> Result<ParameterSet, ScenarioError> {
    base.validate()?;
    let mut out = *base;
    for pert in &s.perturbations {
        apply_one(&mut out, pert)?;
    }
    out.validate()?;
    Ok(out)
}

/// Balance of the perturbed set, evaluated at the scenario's ε.
pub fn run_scenario(base: &ParameterSet, s: &Scenario) -> Result<BalanceResult, ScenarioError> {
    let p = apply_scenario(&s.evaluation_base(base), s)?;
    Ok(BalanceResult::at_own_epsilon(&p)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub target: Target,
    pub baseline_value: f64,
    pub perturbed_value: f64,
    pub delta_lhs: f64,
    pub delta_rhs: f64,
    pub delta_imbalance: f64,
    /// Change of imbalance per unit change of the parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_unit: Option<f64>,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub scenario: String,
    pub baseline: BalanceResult,
    /// Sorted by `|delta_imbalance|` descending, ties by target name.
    pub rows: Vec<SensitivityRow>,
    pub indicators: Vec<Perturbation>,
}

/// Applies each perturbation alone to the scenario base and ranks the
/// resulting changes of the imbalance.
pub fn oat_sensitivity(base: &ParameterSet, s: &Scenario) -> Result<SensitivityReport, ScenarioError> {
    let eval_base = s.evaluation_base(base);
    let baseline = BalanceResult::at_own_epsilon(&eval_base)?;
    let mut rows = Vec::with_capacity(s.perturbations.len());
    for pert in &s.perturbations {
        let single = Scenario {
            name: pert.target.name().to_string(),
            perturbations: vec![*pert],
            indicators: Vec::new(),
            fixed_epsilon: s.fixed_epsilon,
        };
        let result = run_scenario(base, &single)?;
        let delta_lhs = result.lhs - baseline.lhs;
        let delta_rhs = result.rhs - baseline.rhs;
        let delta_imbalance = result.imbalance - baseline.imbalance;
        let baseline_value = pert.target.value_in(&eval_base);
        let delta_value = pert.new_value - baseline_value;
        let side = match (delta_lhs != 0.0, delta_rhs != 0.0) {
            (true, true) => Side::Both,
            (true, false) => Side::Lhs,
            (false, true) => Side::Rhs,
            (false, false) => Side::None,
        };
        rows.push(SensitivityRow {
            target: pert.target,
            baseline_value,
            perturbed_value: pert.new_value,
            delta_lhs,
            delta_rhs,
            delta_imbalance,
            per_unit: (delta_value != 0.0).then(|| delta_imbalance / delta_value),
            side,
        });
    }
    rank_rows(&mut rows);
    Ok(SensitivityReport {
        scenario: s.name.clone(),
        baseline,
        rows,
        indicators: s.indicators.clone(),
    })
}

pub fn rank_rows(rows: &mut [SensitivityRow]) {
    rows.sort_by(|a, b| {
        b.delta_imbalance
            .abs()
            .partial_cmp(&a.delta_imbalance.abs())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.target.name().cmp(b.target.name()))
    });
}

/// Time-resolved balancing ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicEpsilonSeries {
    pub times: Vec<f64>,
    pub epsilon_required: Vec<f64>,
    pub cyclical_force: Vec<f64>,
    pub shock: Vec<f64>,
    /// Imbalance at the base set's fixed ε.
    pub imbalance: Vec<f64>,
}

impl DynamicEpsilonSeries {
    pub fn terminal_epsilon(&self) -> f64 {
        self.epsilon_required.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_abs_imbalance(&self) -> f64 {
        self.imbalance.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// At step `i` the cyclical force is `reconstruct(model, t0 + i·dt)` and the
/// shock is `sigma·W_i`; every other parameter stays at its `base` value.
pub fn dynamic_epsilon_series(
    base: &ParameterSet,
    model: &HarmonicModel,
    shock: &ShockConfig,
    seed: u64,
    t0: f64,
) -> Result<DynamicEpsilonSeries, ScenarioError> {
    base.validate()?;
    shock.validate()?;
    if shock.n_steps == 0 {
        return Err(ScenarioError::InvalidArgument("shock.n_steps must be at least 1"));
    }
    if !t0.is_finite() {
        return Err(ScenarioError::InvalidArgument("t0 must be finite"));
    }
    let path = wiener_path(seed, shock.n_steps, shock.dt)?;
    let shocks = shock_series(shock, &path)?;
    let len = shocks.len();
    let mut out = DynamicEpsilonSeries {
        times: Vec::with_capacity(len),
        epsilon_required: Vec::with_capacity(len),
        cyclical_force: Vec::with_capacity(len),
        shock: shocks,
        imbalance: Vec::with_capacity(len),
    };
    for i in 0..len {
        let t = t0 + i as f64 * shock.dt;
        let force = reconstruct(model, t);
        let p = ParameterSet {
            cyclical_force: force,
            shock: out.shock[i],
            ..*base
        };
        let r = BalanceResult::at_own_epsilon(&p)?;
        out.times.push(t);
        out.cyclical_force.push(force);
        out.epsilon_required.push(required_epsilon(&p)?);
        out.imbalance.push(r.imbalance);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    /// Sample standard deviation (zero for a single observation).
    pub std_dev: f64,
    pub p05: f64,
    pub p95: f64,
}

impl DistributionSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let n = sorted.len();
        if n == 0 {
            return DistributionSummary {
                mean: f64::NAN,
                std_dev: f64::NAN,
                p05: f64::NAN,
                p95: f64::NAN,
            };
        }
        if sorted[0] == sorted[n - 1] {
            let v = sorted[0];
            return DistributionSummary {
                mean: v,
                std_dev: 0.0,
                p05: v,
                p95: v,
            };
        }
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let std_dev = if n > 1 {
            (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        DistributionSummary {
            mean,
            std_dev,
            p05: percentile(&sorted, 0.05),
            p95: percentile(&sorted, 0.95),
        }
    }
}

/// Linear interpolation between order statistics of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub n_paths: usize,
    pub master_seed: u64,
    pub terminal_epsilon: DistributionSummary,
    pub max_abs_imbalance: DistributionSummary,
}

/// Runs [`dynamic_epsilon_series`] on `n_paths` paths seeded by
/// [`derive_path_seed`] and summarises terminal ε and peak |imbalance|.
pub fn monte_carlo_balance(
    base: &ParameterSet,
    model: &HarmonicModel,
    shock: &ShockConfig,
    t0: f64,
    n_paths: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<MonteCarloSummary, ScenarioError> {
    if n_paths == 0 {
        return Err(ScenarioError::InvalidArgument("n_paths must be at least 1"));
    }
    let per_path: Vec<Result<(f64, f64), ScenarioError>> = run_in_pool(workers, || {
        Ok((0..n_paths)
            .into_par_iter()
            .map(|i| {
                let seed = derive_path_seed(master_seed, i as u64);
                let s = dynamic_epsilon_series(base, model, shock, seed, t0)?;
                Ok((s.terminal_epsilon(), s.max_abs_imbalance()))
            })
            .collect())
    })?;
    let mut terminal = Vec::with_capacity(n_paths);
    let mut peak = Vec::with_capacity(n_paths);
    for r in per_path {
        let (e, m) = r?;
        terminal.push(e);
        peak.push(m);
    }
    Ok(MonteCarloSummary {
        n_paths,
        master_seed,
        terminal_epsilon: DistributionSummary::from_samples(&terminal),
        max_abs_imbalance: DistributionSummary::from_samples(&peak),
    })
}

/// The published stress change list (velocity is indicator-only).
pub fn reference_stress_scenario() -> Scenario {
    use ParamId::*;
    Scenario::new(
        "stress",
        vec![
            Perturbation::param(Pressure, 0.055),
            Perturbation::param(DvDt, -0.35),
            Perturbation::param(InternalTension, 0.45),
            Perturbation::param(CyclicalForce, 0.04),
            Perturbation::new(Target::DiffusionTerm, 0.78),
            Perturbation::param(Shock, 2.2),
            Perturbation::param(RiskPremium, 0.105),
            Perturbation::param(Cds, 0.045),
            Perturbation::param(Beta, 1.6),
            Perturbation::param(Velocity, 2.8),
        ],
        Some(0.4547),
    )
    .expect("reference scenario is well formed")
}
