//! Derivation of balance parameters from raw macro-financial indicators.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ParameterSet};

/// Years with fewer simple returns than this are dropped from volatility
/// averages.
pub const MIN_OBSERVATIONS_PER_YEAR: usize = 30;

/// Default annualisation factor for daily returns.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

pub const SHOCK_ESTIMATOR_FORMULA: &str =
    "sigma_w = std(r) * sqrt(periods_per_year) * (max(r) - min(r)) / std(r)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndicatorError {
    #[error("series `{series}` has {years} usable calendar year(s); at least 2 are required")]
    SeriesTooShort { series: &'static str, years: usize },
    #[error("return series has {len} observation(s); at least {min} are required")]
    TooFewReturns { len: usize, min: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("zero volatility in return series")]
    ZeroVolatility,
    #[error("series dates are not strictly increasing at index {index}")]
    NonIncreasingDates { index: usize },
    #[error("series has {dates} dates but {values} values")]
    LengthMismatch { dates: usize, values: usize },
    #[error("`{field}` = {value} is out of range ({constraint})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("while deriving `{field}`: {source}")]
    Derivation {
        field: &'static str,
        #[source]
        source: Box<IndicatorError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IndicatorError {
    fn in_field(self, field: &'static str) -> Self {
        IndicatorError::Derivation {
            field,
            source: Box::new(self),
        }
    }
}

/// A dated series with strictly increasing dates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatedSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl DatedSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self, IndicatorError> {
        if dates.len() != values.len() {
            return Err(IndicatorError::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        if let Some(i) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(IndicatorError::NonIncreasingDates { index: i + 1 });
        }
        Ok(DatedSeries { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<(NaiveDate, f64)> {
        self.dates.last().copied().zip(self.values.last().copied())
    }

    fn check_positive(&self, field: &'static str) -> Result<(), IndicatorError> {
        match self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            Some(&value) => Err(IndicatorError::OutOfRange {
                field,
                value,
                constraint: "prices must be finite and > 0",
            }),
            None => Ok(()),
        }
    }
}

/// Raw inputs behind the balance parameters. Rates are decimals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndicatorBundle {
    pub equity_index_prices: DatedSeries,
    pub sovereign_bond_prices: DatedSeries,
    pub velocity_series: DatedSeries,
    pub inflation_rate: f64,
    pub gini: f64,
    pub credit_to_gdp: f64,
    pub lcr: f64,
    pub cds_spread: f64,
    pub beta: f64,
    pub risk_premium: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock_intensity: Option<f64>,
}

impl IndicatorBundle {
    pub fn validate(&self) -> Result<(), IndicatorError> {
        let scalars = [
            ("inflation_rate", self.inflation_rate),
            ("gini", self.gini),
            ("credit_to_gdp", self.credit_to_gdp),
            ("lcr", self.lcr),
            ("cds_spread", self.cds_spread),
            ("beta", self.beta),
            ("risk_premium", self.risk_premium),
            ("shock_intensity", self.shock_intensity.unwrap_or(0.0)),
        ];
        for (field, value) in scalars {
            if !value.is_finite() {
                return Err(IndicatorError::OutOfRange {
                    field,
                    value,
                    constraint: "finite",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.gini) {
            return Err(IndicatorError::OutOfRange {
                field: "gini",
                value: self.gini,
                constraint: "0 <= gini <= 1",
            });
        }
        for (field, value) in [("lcr", self.lcr), ("credit_to_gdp", self.credit_to_gdp)] {
            if value < 0.0 {
                return Err(IndicatorError::OutOfRange {
                    field,
                    value,
                    constraint: ">= 0",
                });
            }
        }
        self.equity_index_prices
            .check_positive("equity_index_prices")?;
        self.sovereign_bond_prices
            .check_positive("sovereign_bond_prices")?;
        if let Some(&value) = self.velocity_series.values().iter().find(|v| !v.is_finite()) {
            return Err(IndicatorError::OutOfRange {
                field: "velocity_series",
                value,
                constraint: "finite",
            });
        }
        Ok(())
    }
}

/// Result of the relative-volatility comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertiaEstimate {
    pub relative_volatility: f64,
    pub rho: f64,
    pub equity_yearly_std: Vec<(i32, f64)>,
    pub bond_yearly_std: Vec<(i32, f64)>,
}

pub fn simple_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

pub fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Population standard deviation of simple returns per calendar year.
///
/// A return is assigned to the year of its closing observation; years with
/// fewer than [`MIN_OBSERVATIONS_PER_YEAR`] returns are dropped.
pub fn yearly_volatility(series: &DatedSeries) -> Vec<(i32, f64)> {
    let mut buckets: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (i, w) in series.values.windows(2).enumerate() {
        let year = series.dates[i + 1].year();
        buckets.entry(year).or_default().push(w[1] / w[0] - 1.0);
    }
    buckets
        .into_iter()
        .filter(|(_, r)| r.len() >= MIN_OBSERVATIONS_PER_YEAR)
        .map(|(year, r)| (year, population_std(&r)))
        .collect()
}

fn mean_yearly_std(
    series: &DatedSeries,
    name: &'static str,
) -> Result<(f64, Vec<(i32, f64)>), IndicatorError> {
    let yearly = yearly_volatility(series);
    if yearly.len() < 2 {
        return Err(IndicatorError::SeriesTooShort {
            series: name,
            years: yearly.len(),
        });
    }
    let mean = yearly.iter().map(|(_, s)| s).sum::<f64>() / yearly.len() as f64;
    Ok((mean, yearly))
}

/// Relative volatility of equity versus sovereign bonds and the implied
/// market inertia `rho = 1 / relative_volatility`.
pub fn market_inertia(
    equity: &DatedSeries,
    bonds: &DatedSeries,
) -> Result<InertiaEstimate, IndicatorError> {
    let (equity_std, equity_yearly_std) = mean_yearly_std(equity, "equity_index_prices")?;
    let (bond_std, bond_yearly_std) = mean_yearly_std(bonds, "sovereign_bond_prices")?;
    if bond_std == 0.0 {
        return Err(IndicatorError::Degenerate("sovereign bond volatility is zero"));
    }
    if equity_std == 0.0 {
        return Err(IndicatorError::Degenerate("equity volatility is zero"));
    }
    let relative_volatility = equity_std / bond_std;
    Ok(InertiaEstimate {
        relative_volatility,
        rho: 1.0 / relative_volatility,
        equity_yearly_std,
        bond_yearly_std,
    })
}

pub fn velocity_delta(v_now: f64, v_prev: f64) -> f64 {
    v_now - v_prev
}

/// Shock-intensity estimate together with its two factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockEstimate {
    pub annualized_std: f64,
    pub range_to_std: f64,
    pub value: f64,
}

/// Annualised standard deviation of returns scaled by the ratio of the
/// realised range (max − min return) to the standard deviation.
pub fn estimate_shock_intensity(returns: &[f64]) -> Result<ShockEstimate, IndicatorError> {
    estimate_shock_intensity_with(returns, TRADING_DAYS_PER_YEAR)
}

pub fn estimate_shock_intensity_with(
    returns: &[f64],
    periods_per_year: f64,
) -> Result<ShockEstimate, IndicatorError> {
    const MIN: usize = 30;
    if returns.len() < MIN {
        return Err(IndicatorError::TooFewReturns {
            len: returns.len(),
            min: MIN,
        });
    }
    if let Some(&value) = returns.iter().find(|r| !r.is_finite()) {
        return Err(IndicatorError::OutOfRange {
            field: "returns",
            value,
            constraint: "finite",
        });
    }
    let (lo, hi) = returns
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    if hi == lo {
        return Err(IndicatorError::ZeroVolatility);
    }
    let std = population_std(returns);
    let annualized_std = std * periods_per_year.sqrt();
    let range_to_std = (hi - lo) / std;
    Ok(ShockEstimate {
        annualized_std,
        range_to_std,
        value: annualized_std * range_to_std,
    })
}

/// Maps an indicator bundle onto a full parameter set.
///
/// `cyclical_force` and `epsilon` come from the harmonic fit and the
/// calibration respectively and are passed through.
pub fn derive_parameters(
    bundle: &IndicatorBundle,
    cyclical_force: f64,
    epsilon: f64,
) -> Result<ParameterSet, IndicatorError> {
    bundle.validate()?;
    let inertia = market_inertia(&bundle.equity_index_prices, &bundle.sovereign_bond_prices)
        .map_err(|e| e.in_field("rho"))?;
    let velocities = bundle.velocity_series.values();
    if velocities.len() < 2 {
        return Err(IndicatorError::SeriesTooShort {
            series: "velocity_series",
            years: velocities.len(),
        }
        .in_field("dv_dt"));
    }
    let v_now = velocities[velocities.len() - 1];
    let v_prev = velocities[velocities.len() - 2];
    let shock = match bundle.shock_intensity {
        Some(s) => s,
        None => {
            estimate_shock_intensity(&simple_returns(bundle.equity_index_prices.values()))
                .map_err(|e| e.in_field("shock"))?
                .value
        }
    };
    let p = ParameterSet {
        rho: inertia.rho,
        dv_dt: velocity_delta(v_now, v_prev),
        internal_tension: bundle.gini,
        velocity: v_now,
        pressure: bundle.inflation_rate,
        stickiness: bundle.credit_to_gdp,
        diffusion: bundle.lcr,
        shock,
        risk_premium: bundle.risk_premium,
        cds: bundle.cds_spread,
        beta: bundle.beta,
        cyclical_force,
        epsilon,
    };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn business_days(from_year: i32, to_year: i32) -> Vec<NaiveDate> {
        let mut d = NaiveDate::from_ymd_opt(from_year, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(to_year, 12, 31).unwrap();
        let mut out = Vec::new();
        while d <= end {
            if d.weekday().num_days_from_monday() < 5 {
                out.push(d);
            }
            d = d.succ_opt().unwrap();
        }
        out
    }

    /// Prices whose simple returns alternate ±step, giving a population
    /// standard deviation of exactly `step` in every full year.
    fn alternating(dates: &[NaiveDate], step: f64) -> DatedSeries {
        let mut p = 100.0;
        let mut values = vec![p];
        for i in 1..dates.len() {
            let r = if i % 2 == 0 { -step } else { step };
            p *= 1.0 + r;
            values.push(p);
        }
        DatedSeries::new(dates.to_vec(), values).unwrap()
    }

    #[test]
    fn identical_series_give_unit_inertia() {
        let dates = business_days(2020, 2022);
        let s = alternating(&dates, 0.01);
        let est = market_inertia(&s, &s).unwrap();
        assert_eq!(est.relative_volatility, 1.0);
        assert_eq!(est.rho, 1.0);
    }

    #[test]
    fn one_year_is_too_short() {
        let dates = business_days(2024, 2024);
        let s = alternating(&dates, 0.01);
        assert!(matches!(
            market_inertia(&s, &s),
            Err(IndicatorError::SeriesTooShort { years: 1, .. })
        ));
    }

    #[test]
    fn flat_bond_is_degenerate() {
        let dates = business_days(2020, 2021);
        let e = alternating(&dates, 0.01);
        let b = DatedSeries::new(dates.clone(), vec![50.0; dates.len()]).unwrap();
        assert!(matches!(
            market_inertia(&e, &b),
            Err(IndicatorError::Degenerate(_))
        ));
    }

    #[test]
    fn sparse_years_are_dropped() {
        let mut dates = business_days(2020, 2021);
        // only ten observations in 2022
        dates.extend(business_days(2022, 2022).into_iter().take(10));
        let s = alternating(&dates, 0.02);
        let years: Vec<i32> = yearly_volatility(&s).iter().map(|(y, _)| *y).collect();
        assert_eq!(years, vec![2020, 2021]);
    }

    #[test]
    fn non_increasing_dates_rejected() {
        let d = NaiveDate::from_ymd_opt(2024, 1, 2).unwrap();
        assert!(matches!(
            DatedSeries::new(vec![d, d], vec![1.0, 2.0]),
            Err(IndicatorError::NonIncreasingDates { index: 1 })
        ));
    }

    #[test]
    fn velocity_delta_examples() {
        assert!((velocity_delta(3.46, 3.69) + 0.23).abs() < 1e-12);
        assert_eq!(velocity_delta(2.5, 2.5), 0.0);
        assert!((velocity_delta(2.8, 3.46) + 0.66).abs() < 1e-12);
        assert_eq!(velocity_delta(1.7, 0.4), -velocity_delta(0.4, 1.7));
    }

    #[test]
    fn shock_estimator_errors() {
        assert!(matches!(
            estimate_shock_intensity(&[0.01; 10]),
            Err(IndicatorError::TooFewReturns { len: 10, .. })
        ));
        assert!(matches!(
            estimate_shock_intensity(&[0.01; 40]),
            Err(IndicatorError::ZeroVolatility)
        ));
    }

    #[test]
    fn shock_estimator_inverted_to_reference_value() {
        let raw: Vec<f64> = (0..60).map(|i| ((i * 37 % 17) as f64 - 8.0) * 1e-3).collect();
        let first = estimate_shock_intensity(&raw).unwrap().value;
        let scale = 1.3475 / first;
        let scaled: Vec<f64> = raw.iter().map(|r| r * scale).collect();
        let est = estimate_shock_intensity(&scaled).unwrap();
        assert!((est.value - 1.3475).abs() < 1e-12);
        assert!((est.annualized_std * est.range_to_std - est.value).abs() < 1e-15);
    }

    #[test]
    fn bundle_range_checks() {
        let b = IndicatorBundle {
            gini: 1.2,
            ..IndicatorBundle::default()
        };
        assert!(matches!(
            b.validate(),
            Err(IndicatorError::OutOfRange { field: "gini", .. })
        ));
        let b = IndicatorBundle {
            lcr: -0.1,
            ..IndicatorBundle::default()
        };
        assert!(matches!(
            b.validate(),
            Err(IndicatorError::OutOfRange { field: "lcr", .. })
        ));
    }

    #[test]
    fn derive_reports_field_on_failure() {
        let dates = business_days(2020, 2021);
        let b = IndicatorBundle {
            equity_index_prices: alternating(&dates, 0.01),
            sovereign_bond_prices: alternating(&dates, 0.01),
            velocity_series: DatedSeries::new(vec![dates[0]], vec![3.0]).unwrap(),
            shock_intensity: Some(1.0),
            ..IndicatorBundle::default()
        };
        match derive_parameters(&b, 0.0, 0.0) {
            Err(IndicatorError::Derivation { field, .. }) => assert_eq!(field, "dv_dt"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
