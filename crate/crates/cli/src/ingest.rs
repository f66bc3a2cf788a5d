//! Indicator and time-series ingestion from delimited text.
//!
//! Indicator files carry a header row and a `date` column (ISO dates,
//! strictly increasing). Daily price columns and the sparse velocity column
//! become dated series over the rows where they are filled; every scalar
//! column takes its last non-empty cell. A trailing `%` divides a cell by
//! 100, so `66.06%` and `0.6606` load identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use liquidyn_core::cycles::TimeSeries;
use liquidyn_core::indicators::{DatedSeries, IndicatorBundle};

use crate::error::{CliError, Result};
use crate::numfmt::parse_number;

pub const DATE: &str = "date";
pub const EQUITY: &str = "equity_index";
pub const BOND: &str = "sovereign_bond";
pub const VELOCITY: &str = "velocity";
pub const INFLATION: &str = "inflation";
pub const GINI: &str = "gini";
pub const CREDIT: &str = "credit_to_gdp";
pub const LCR: &str = "lcr";
pub const CDS: &str = "cds_spread";
pub const BETA: &str = "beta";
pub const PREMIUM: &str = "risk_premium";
pub const SHOCK: &str = "shock_intensity";

const REQUIRED: [&str; 11] = [
    DATE, EQUITY, BOND, VELOCITY, INFLATION, GINI, CREDIT, LCR, CDS, BETA, PREMIUM,
];
const SCALARS: [&str; 7] = [INFLATION, GINI, CREDIT, LCR, CDS, BETA, PREMIUM];

fn parse_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn load_indicators(path: &Path) -> Result<IndicatorBundle> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_indicators(&text).map_err(|m| parse_error(path, m))
}

/// Parses indicator CSV text; errors are plain messages with line numbers.
pub fn parse_indicators(text: &str) -> std::result::Result<IndicatorBundle, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut index = std::collections::HashMap::new();
    for name in REQUIRED {
        let i = column(name).ok_or_else(|| format!("missing column `{name}`"))?;
        index.insert(name, i);
    }
    let shock_col = column(SHOCK);

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut series: [(Vec<NaiveDate>, Vec<f64>); 3] = Default::default();
    let mut scalars: [Option<f64>; 7] = [None; 7];
    let mut shock = None;

    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| format!("line {line}: {e}"))?;
        let raw_date = &record[index[DATE]];
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|_| format!("line {line}, column `{DATE}`: invalid ISO date `{raw_date}`"))?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(format!(
                    "line {line}: date {date} does not increase (previous {prev})"
                ));
            }
        }
        dates.push(date);
        let cell = |name: &str, col: usize| -> std::result::Result<Option<f64>, String> {
            let raw = &record[col];
            if raw.is_empty() {
                return Ok(None);
            }
            parse_number(raw)
                .map(Some)
                .ok_or_else(|| format!("line {line}, column `{name}`: non-numeric cell `{raw}`"))
        };
        for (slot, name) in [EQUITY, BOND, VELOCITY].into_iter().enumerate() {
            if let Some(v) = cell(name, index[name])? {
                series[slot].0.push(date);
                series[slot].1.push(v);
            }
        }
        for (slot, name) in SCALARS.into_iter().enumerate() {
            if let Some(v) = cell(name, index[name])? {
                scalars[slot] = Some(v);
            }
        }
        if let Some(col) = shock_col {
            if let Some(v) = cell(SHOCK, col)? {
                shock = Some(v);
            }
        }
    }

    if dates.is_empty() {
        return Err("file has a header but no data rows (empty series)".to_string());
    }
    let mut built = Vec::with_capacity(3);
    for ((d, v), name) in series.into_iter().zip([EQUITY, BOND, VELOCITY]) {
        if v.is_empty() {
            return Err(format!("column `{name}` has no values (empty series)"));
        }
        built.push(DatedSeries::new(d, v).map_err(|e| format!("column `{name}`: {e}"))?);
    }
    let mut values = [0.0; 7];
    for (slot, name) in SCALARS.into_iter().enumerate() {
        values[slot] = scalars[slot].ok_or_else(|| format!("column `{name}` has no value"))?;
    }
    let velocity_series = built.pop().unwrap();
    let sovereign_bond_prices = built.pop().unwrap();
    let equity_index_prices = built.pop().unwrap();
    let bundle = IndicatorBundle {
        equity_index_prices,
        sovereign_bond_prices,
        velocity_series,
        inflation_rate: values[0],
        gini: values[1],
        credit_to_gdp: values[2],
        lcr: values[3],
        cds_spread: values[4],
        beta: values[5],
        risk_premium: values[6],
        shock_intensity: shock,
    };
    bundle.validate().map_err(|e| e.to_string())?;
    Ok(bundle)
}

/// Writes a bundle back in the indicator CSV layout, decimals only.
/// Scalars go on the last row.
pub fn dump_indicators(bundle: &IndicatorBundle) -> String {
    let mut dates: Vec<NaiveDate> = bundle
        .equity_index_prices
        .dates()
        .iter()
        .chain(bundle.sovereign_bond_prices.dates())
        .chain(bundle.velocity_series.dates())
        .copied()
        .collect();
    dates.sort();
    dates.dedup();
    let lookup = |s: &DatedSeries, d: &NaiveDate| -> String {
        s.dates()
            .binary_search(d)
            .map(|i| s.values()[i].to_string())
            .unwrap_or_default()
    };
    let mut out = String::new();
    let mut header: Vec<&str> = REQUIRED.to_vec();
    if bundle.shock_intensity.is_some() {
        header.push(SHOCK);
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, d) in dates.iter().enumerate() {
        let last = i + 1 == dates.len();
        let scalar = |v: f64| if last { v.to_string() } else { String::new() };
        let mut cells = vec![
            d.format("%Y-%m-%d").to_string(),
            lookup(&bundle.equity_index_prices, d),
            lookup(&bundle.sovereign_bond_prices, d),
            lookup(&bundle.velocity_series, d),
            scalar(bundle.inflation_rate),
            scalar(bundle.gini),
            scalar(bundle.credit_to_gdp),
            scalar(bundle.lcr),
            scalar(bundle.cds_spread),
            scalar(bundle.beta),
            scalar(bundle.risk_premium),
        ];
        if let Some(s) = bundle.shock_intensity {
            cells.push(scalar(s));
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Two-column series file (`time,value` with a header row) with evenly
/// spaced times. Returns the series and the name of the value column.
pub fn load_series(path: &Path) -> Result<(TimeSeries, String)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_series(&text).map_err(|m| parse_error(path, m))
}

pub fn parse_series(text: &str) -> std::result::Result<(TimeSeries, String), String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.len() < 2 {
        return Err("series file needs a time column and a value column".to_string());
    }
    let value_name = headers[1].to_string();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| format!("line {line}: {e}"))?;
        let t = parse_number(&record[0])
            .ok_or_else(|| format!("line {line}, column `{}`: non-numeric cell `{}`", &headers[0], &record[0]))?;
        let v = parse_number(&record[1])
            .ok_or_else(|| format!("line {line}, column `{value_name}`: non-numeric cell `{}`", &record[1]))?;
        times.push(t);
        values.push(v);
    }
    if times.len() < 2 {
        return Err("series needs at least two rows (empty series)".to_string());
    }
    let step = times[1] - times[0];
    if step.is_nan() || step <= 0.0 {
        return Err("times must be strictly increasing".to_string());
    }
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0) {
            return Err(format!("line {}: times are not evenly spaced", i + 3));
        }
    }
    let series = TimeSeries::new(times[0], step, values).map_err(|e| e.to_string())?;
    Ok((series, value_name))
}
