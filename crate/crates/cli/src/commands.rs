//! Command-line surface: argument definitions and one runner per subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use liquidyn_core::cycles::{fit_harmonics_with, mean_impact, reconstruct, Detrend, FitOptions};
use liquidyn_core::indicators::{
    derive_parameters, estimate_shock_intensity, market_inertia, simple_returns,
};
use liquidyn_core::model::{decompose_epsilon, BalanceResult, ParameterSet};
use liquidyn_core::scenario::{
    apply_scenario, dynamic_epsilon_series, monte_carlo_balance, oat_sensitivity, run_scenario,
};
use liquidyn_core::stochastic::{derive_path_seed, ShockConfig};
use liquidyn_core::HarmonicModel;

use crate::error::{CliError, Result};
use crate::ingest::{load_indicators, load_series};
use crate::numfmt::sig6;
use crate::report::{emit_report, Format, HarmonicSummary, InputDigest, LabeledBalance, Report, Series};
use crate::scenario_file::{emit_params, load_params, load_scenario, parse_params, ScenarioFile};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "liquidyn", version, about = "Liquidity balance engine")]
pub struct Cli {
    /// Master seed for stochastic runs.
    #[arg(long, global = true, env = "LIQUIDYN_SEED")]
    pub seed: Option<u64>,
    /// Absolute tolerance for balance checks and baseline comparisons.
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Structured)]
    pub format: Format,
    /// Directory receiving the report and plot data.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive the parameter set from an indicator file.
    Derive(DeriveArgs),
    /// Evaluate the balance for a parameter set.
    Balance(BalanceArgs),
    /// Fit harmonics to an evenly spaced series.
    Fourier(FourierArgs),
    /// Simulate the time-resolved balancing residual.
    Simulate(SimulateArgs),
    /// Compare baseline and scenario balances.
    Stress(ScenarioArgs),
    /// One-at-a-time sensitivity of a scenario's changes.
    Sensitivity(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    pub data: PathBuf,
    /// Also write the derived parameters as a parameter file.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.07577, allow_negative_numbers = true)]
    pub cyclical_force: f64,
    #[arg(long, default_value_t = 0.4547, allow_negative_numbers = true)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    /// Sparse parameter overrides on top of the reference baseline.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FourierArgs {
    pub series: PathBuf,
    #[arg(short = 'k', long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    /// Sample points for the reconstruction and its mean impact.
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    #[arg(long)]
    pub linear_detrend: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Shock volatility; defaults to the parameter set's shock intensity.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Series whose harmonic fit drives the cyclical force.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(short = 'k', long, default_value_t = 3)]
    pub k: usize,
    /// Start time; defaults to the series start (or 0 without a series).
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub params: Option<PathBuf>,
}

/// Outcome of a run: the written files.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub written: Vec<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<RunOutput> {
    if !(cli.tolerance.is_finite() && cli.tolerance > 0.0) {
        return Err(CliError::Validation(format!(
            "--tolerance must be positive and finite, got {}",
            cli.tolerance
        )));
    }
    if cli.workers == Some(0) {
        return Err(CliError::Validation("--workers must be at least 1".to_string()));
    }
    let report = match &cli.command {
        Command::Derive(a) => derive(cli, a)?,
        Command::Balance(a) => balance(cli, a)?,
        Command::Fourier(a) => fourier(a)?,
        Command::Simulate(a) => simulate(cli, a)?,
        Command::Stress(a) => stress(cli, a)?,
        Command::Sensitivity(a) => sensitivity(cli, a)?,
    };
    let written = emit_report(&report, cli.format, &cli.out)?;
    Ok(RunOutput { report, written })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn base_params(path: Option<&Path>, digest: &mut InputDigest) -> Result<ParameterSet> {
    let base = ParameterSet::reference_baseline();
    match path {
        Some(p) => {
            digest.add("params", &read_bytes(p)?);
            load_params(p, &base)
        }
        None => Ok(base),
    }
}

fn balance_warnings(label: &str, r: &BalanceResult, tolerance: f64, warnings: &mut Vec<String>) {
    if r.epsilon_sign_mismatch(tolerance) {
        warnings.push(format!(
            "{label}: epsilon sign inconsistency: epsilon {} leaves imbalance {}; the balancing epsilon is {} (opposite sign)",
            sig6(r.epsilon),
            sig6(r.imbalance),
            sig6(r.epsilon_required)
        ));
    } else if r.imbalance.abs() > tolerance {
        warnings.push(format!(
            "{label}: unbalanced: imbalance {} exceeds tolerance {}; the balancing epsilon is {}",
            sig6(r.imbalance),
            sig6(tolerance),
            sig6(r.epsilon_required)
        ));
    }
}

fn labeled(label: &str, result: BalanceResult) -> LabeledBalance {
    LabeledBalance {
        label: label.to_string(),
        result,
    }
}

fn derive(cli: &Cli, a: &DeriveArgs) -> Result<Report> {
    let bytes = read_bytes(&a.data)?;
    let mut digest = InputDigest::default();
    digest
        .add("command", b"derive")
        .add("cyclical_force", a.cyclical_force.to_string().as_bytes())
        .add("epsilon", a.epsilon.to_string().as_bytes())
        .add("data", &bytes);
    let bundle = load_indicators(&a.data)?;
    let params = derive_parameters(&bundle, a.cyclical_force, a.epsilon)?;
    let inertia = market_inertia(&bundle.equity_index_prices, &bundle.sovereign_bond_prices)?;

    let mut report = Report::new("derive", digest.finish());
    if bundle.shock_intensity.is_none() {
        report.shock_estimate =
            Some(estimate_shock_intensity(&simple_returns(bundle.equity_index_prices.values()))?);
        report.warnings.push(
            "shock intensity estimated from equity returns; supply a shock_intensity column to fix it"
                .to_string(),
        );
    }
    let result = BalanceResult::at_own_epsilon(&params)?;
    balance_warnings("derived", &result, cli.tolerance, &mut report.warnings);
    report.inertia = Some(inertia);
    report.parameters = Some(params);
    report.balance.push(labeled("derived", result));
    if let Some(path) = &a.output {
        fs::write(path, emit_params(&params)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(report)
}

fn balance(cli: &Cli, a: &BalanceArgs) -> Result<Report> {
    let mut digest = InputDigest::default();
    digest.add("command", b"balance");
    let mut params = base_params(a.params.as_deref(), &mut digest)?;
    if let Some(eps) = a.epsilon {
        digest.add("epsilon", eps.to_string().as_bytes());
        params = parse_params(&format!("epsilon: {eps}"), &params).map_err(CliError::Validation)?;
    }
    let result = BalanceResult::at_own_epsilon(&params)?;
    let mut report = Report::new("balance", digest.finish());
    balance_warnings("balance", &result, cli.tolerance, &mut report.warnings);
    report.epsilon_breakdown = Some(decompose_epsilon(params.epsilon)?);
    report.parameters = Some(params);
    report.balance.push(labeled("supplied", result));
    let calibrated = BalanceResult::evaluate(&params, result.epsilon_required)?;
    report.balance.push(labeled("calibrated", calibrated));
    Ok(report)
}

fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t0];
    }
    let h = (t1 - t0) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { t1 } else { t0 + i as f64 * h })
        .collect()
}

fn fourier(a: &FourierArgs) -> Result<Report> {
    let bytes = read_bytes(&a.series)?;
    let (series, value_name) = load_series(&a.series)?;
    let t0 = a.t0.unwrap_or(series.start);
    let t1 = a.t1.unwrap_or_else(|| series.end());
    let mut digest = InputDigest::default();
    digest
        .add("command", b"fourier")
        .add("k", a.k.to_string().as_bytes())
        .add("window", format!("{t0} {t1} {}", a.samples).as_bytes())
        .add("detrend", if a.linear_detrend { b"linear" } else { b"mean" })
        .add("series", &bytes);
    if a.samples < 2 {
        return Err(CliError::Validation("--samples must be at least 2".to_string()));
    }
    let options = FitOptions {
        detrend: if a.linear_detrend { Detrend::Linear } else { Detrend::Mean },
    };
    let model = fit_harmonics_with(&series, a.k, options)?;
    let impact = mean_impact(&model, t0, t1, a.samples)?;
    let times = linspace(t0, t1, a.samples);
    let force: Vec<f64> = times.iter().map(|&t| reconstruct(&model, t)).collect();

    let mut report = Report::new("fourier", digest.finish());
    if model.components.len() < a.k {
        report.warnings.push(format!(
            "only {} of {} requested components carry power",
            model.components.len(),
            a.k
        ));
    }
    report.note("value_column", value_name.clone());
    report.series.push(Series::new(value_name, series.times(), series.values.clone()));
    report.series.push(Series::new("cyclical_force", times, force));
    report.harmonics = Some(HarmonicSummary {
        model,
        mean_impact: impact,
        window: (t0, t1),
        samples: a.samples,
    });
    Ok(report)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<Report> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let mut digest = InputDigest::default();
    digest.add("command", b"simulate");
    let params = base_params(a.params.as_deref(), &mut digest)?;
    let sigma = a.sigma.unwrap_or(params.shock);
    digest.add(
        "config",
        format!("{} {} {} {} {} {seed}", a.steps, a.dt, sigma, a.paths, a.k).as_bytes(),
    );
    let mut warnings = Vec::new();
    let (model, series_start) = match &a.series {
        Some(path) => {
            digest.add("series", &read_bytes(path)?);
            let (series, _) = load_series(path)?;
            let model = fit_harmonics_with(&series, a.k, FitOptions::default())?;
            (model, series.start)
        }
        None => {
            warnings.push("no --series given; cyclical force is held at zero".to_string());
            (HarmonicModel::default(), 0.0)
        }
    };
    let t0 = a.t0.unwrap_or(series_start);
    digest.add("t0", t0.to_string().as_bytes());
    if a.paths == 0 {
        return Err(CliError::Validation("--paths must be at least 1".to_string()));
    }
    let shock = ShockConfig {
        sigma,
        n_steps: a.steps,
        dt: a.dt,
    };
    let path_seed = derive_path_seed(seed, 0);
    let dynamic = dynamic_epsilon_series(&params, &model, &shock, path_seed, t0)?;
    let mc = monte_carlo_balance(&params, &model, &shock, t0, a.paths, seed, cli.workers)?;

    let mut report = Report::new("simulate", digest.finish());
    report.seed = Some(seed);
    report.warnings = warnings;
    report.note("sample_path_seed", path_seed.to_string());
    report.note(
        "fixed_epsilon_imbalance_max",
        sig6(dynamic.max_abs_imbalance()),
    );
    let times = dynamic.times.clone();
    report.series.push(Series::new("epsilon_required", times.clone(), dynamic.epsilon_required));
    report.series.push(Series::new("cyclical_force", times.clone(), dynamic.cyclical_force));
    report.series.push(Series::new("shock", times.clone(), dynamic.shock));
    report.series.push(Series::new("imbalance", times, dynamic.imbalance));
    report.parameters = Some(params);
    report.monte_carlo = Some(mc);
    Ok(report)
}

fn load_scenario_input(a: &ScenarioArgs, command: &str) -> Result<(ScenarioFile, ParameterSet, InputDigest)> {
    let mut digest = InputDigest::default();
    digest.add("command", command.as_bytes());
    let params = base_params(a.params.as_deref(), &mut digest)?;
    digest.add("scenario", &read_bytes(&a.scenario)?);
    let file = load_scenario(&a.scenario)?;
    Ok((file, params, digest))
}

fn indicator_notes(file: &ScenarioFile, base: &ParameterSet, report: &mut Report) {
    for p in &file.scenario.indicators {
        report.note(
            format!("indicator.{}", p.target),
            format!(
                "{} -> {} (indicator only; not part of the balance)",
                sig6(p.target.value_in(base)),
                sig6(p.new_value)
            ),
        );
    }
}

fn stress(cli: &Cli, a: &ScenarioArgs) -> Result<Report> {
    let (file, params, digest) = load_scenario_input(a, "stress")?;
    let scenario = &file.scenario;
    let base = scenario.evaluation_base(&params);
    let baseline = BalanceResult::at_own_epsilon(&base)?;
    let stressed = run_scenario(&params, scenario)?;

    let mut report = Report::new("stress", digest.finish());
    report.note("scenario", scenario.name.clone());
    report.warnings.extend(file.baseline_mismatches(&params, cli.tolerance));
    balance_warnings("baseline", &baseline, cli.tolerance, &mut report.warnings);
    indicator_notes(&file, &base, &mut report);
    report.parameters = Some(apply_scenario(&params, scenario)?);
    report.balance.push(labeled("baseline", baseline));
    report.balance.push(labeled("stressed", stressed));
    Ok(report)
}

fn sensitivity(cli: &Cli, a: &ScenarioArgs) -> Result<Report> {
    let (file, params, digest) = load_scenario_input(a, "sensitivity")?;
    let sens = oat_sensitivity(&params, &file.scenario)?;
    let mut report = Report::new("sensitivity", digest.finish());
    report.note("scenario", file.scenario.name.clone());
    report.warnings.extend(file.baseline_mismatches(&params, cli.tolerance));
    indicator_notes(&file, &file.scenario.evaluation_base(&params), &mut report);
    report.sensitivity = Some(sens);
    Ok(report)
}
